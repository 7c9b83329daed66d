#include "cfisac/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

namespace cfisac {

namespace {

// Candidates sorted by descending gain, ascending index on ties.
std::vector<int> ranked(const Eigen::Ref<const Vec>& gain, const std::vector<int>& candidates) {
  std::vector<int> order = candidates;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (gain(a) != gain(b)) return gain(a) > gain(b);
    return a < b;
  });
  return order;
}

void erase_value(std::vector<int>& v, int x) { v.erase(std::remove(v.begin(), v.end(), x), v.end()); }
bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }
void insert_sorted(std::vector<int>& v, int x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) v.insert(it, x);
}

}  // namespace

void rebuild_reverse_maps(AssignmentPlan& p) {
  p.ap_ues.assign(p.L, {});
  p.ap_targets.assign(p.L, {});
  for (int k = 0; k < static_cast<int>(p.serving_sets.size()); ++k)
    for (int l : p.serving_sets[k]) p.ap_ues[l].push_back(k);
  for (int s = 0; s < p.S; ++s)
    for (int l : p.ssa_tx[s]) p.ap_targets[l].push_back(s);
}

int AssignmentPlan::tx_index(int l) const {
  auto it = std::lower_bound(tx_aps.begin(), tx_aps.end(), l);
  return (it != tx_aps.end() && *it == l) ? static_cast<int>(it - tx_aps.begin()) : -1;
}

int AssignmentPlan::rx_index(int r) const {
  auto it = std::lower_bound(rx_aps.begin(), rx_aps.end(), r);
  return (it != rx_aps.end() && *it == r) ? static_cast<int>(it - rx_aps.begin()) : -1;
}

bool AssignmentPlan::serves(int l, int k) const { return contains(ap_ues[l], k); }
bool AssignmentPlan::senses(int l, int s) const { return contains(ap_targets[l], s); }

void AssignmentPlan::check_invariants(int T, int R, bool ues_associated) const {
  std::vector<int> mode(L, 0);
  for (int l : tx_aps) mode[l] += 1;
  for (int l : rx_aps) mode[l] += 1;
  for (int l : idle_aps) mode[l] += 1;
  for (int l = 0; l < L; ++l)
    require(mode[l] == 1, "plan: AP " + std::to_string(l) + " is not in exactly one mode");
  for (int s = 0; s < S; ++s) {
    require(static_cast<int>(ssa_rx[s].size()) == R, "plan: |R_s| != R for SSA " + std::to_string(s));
    require(static_cast<int>(ssa_tx[s].size()) == T, "plan: |T_s| != T for SSA " + std::to_string(s));
    for (int r : ssa_rx[s]) require(rx_index(r) >= 0, "plan: R_s contains a non-RX AP");
    for (int l : ssa_tx[s]) {
      require(tx_index(l) >= 0, "plan: T_s contains a non-TX AP");
      require(contains(ap_targets[l], s), "plan: s in T_s but not in S_l");
    }
  }
  for (int l = 0; l < L; ++l)
    for (int s : ap_targets[l]) require(contains(ssa_tx[s], l), "plan: s in S_l but l not in T_s");
  if (ues_associated) {
    for (int k = 0; k < K; ++k) {
      require(!serving_sets[k].empty(), "plan: UE " + std::to_string(k) + " has no serving AP");
      for (int l : serving_sets[k]) {
        require(tx_index(l) >= 0, "plan: M_k contains a non-TX AP");
        require(contains(ap_ues[l], k), "plan: l in M_k but k not in U_l");
      }
    }
    for (int l = 0; l < L; ++l)
      for (int k : ap_ues[l]) require(contains(serving_sets[k], l), "plan: k in U_l but l not in M_k");
  }
}

AssignmentPlan select_ap_modes(const Mat& gain, int T, int R) {
  const int S = static_cast<int>(gain.rows());
  const int L = static_cast<int>(gain.cols());
  require(T >= 1 && R >= 1, "select_ap_modes: T and R must be >= 1");
  AssignmentPlan p;
  p.L = L;
  p.S = S;
  p.ssa_tx.assign(S, {});
  p.ssa_rx.assign(S, {});
  std::vector<int> idle(L);
  std::iota(idle.begin(), idle.end(), 0);
  auto fail = [](int s, const std::string& what) {
    throw InfeasibleAssignment("SSA " + std::to_string(s) + ": not enough APs for " + what);
  };

  // First RX-AP per SSA, removed from the pool as soon as it is taken.
  for (int s = 0; s < S; ++s) {
    auto order = ranked(gain.row(s).transpose(), idle);
    if (order.empty()) fail(s, "the first RX-AP");
    p.ssa_rx[s].push_back(order[0]);
    insert_sorted(p.rx_aps, order[0]);
    erase_value(idle, order[0]);
  }
  // First TX-AP: next best idle AP.
  for (int s = 0; s < S; ++s) {
    auto order = ranked(gain.row(s).transpose(), idle);
    if (order.empty()) fail(s, "the first TX-AP");
    p.ssa_tx[s].push_back(order[0]);
    insert_sorted(p.tx_aps, order[0]);
    erase_value(idle, order[0]);
  }
  // Additional RX-APs come from the idle snapshot; the pool is only updated
  // once every SSA has chosen, so RX sets may overlap across SSAs.
  const std::vector<int> rx_pool = idle;
  for (int s = 0; s < S; ++s) {
    auto order = ranked(gain.row(s).transpose(), rx_pool);
    if (static_cast<int>(order.size()) < R - 1) fail(s, std::to_string(R) + " RX-APs");
    for (int i = 0; i < R - 1; ++i) {
      p.ssa_rx[s].push_back(order[i]);
      insert_sorted(p.rx_aps, order[i]);
    }
  }
  for (int r : p.rx_aps) erase_value(idle, r);
  // Remaining TX-APs from idle ∪ existing TX-APs.
  for (int s = 0; s < S; ++s) {
    std::vector<int> pool = idle;
    for (int l : p.tx_aps)
      if (!contains(p.ssa_tx[s], l)) pool.push_back(l);
    auto order = ranked(gain.row(s).transpose(), pool);
    if (static_cast<int>(order.size()) < T - 1) fail(s, std::to_string(T) + " TX-APs");
    for (int i = 0; i < T - 1; ++i) {
      p.ssa_tx[s].push_back(order[i]);
      insert_sorted(p.tx_aps, order[i]);
      erase_value(idle, order[i]);
    }
  }
  for (auto& v : p.ssa_tx) std::sort(v.begin(), v.end());
  for (auto& v : p.ssa_rx) std::sort(v.begin(), v.end());
  p.idle_aps = idle;
  std::sort(p.idle_aps.begin(), p.idle_aps.end());
  rebuild_reverse_maps(p);
  return p;
}

AssignmentPlan select_ap_modes(const Scenario& scenario, int T, int R) {
  return select_ap_modes(scenario.ssa_gain_table(), T, R);
}

AssignmentPlan associate_ues(const Mat& gain, AssignmentPlan p, double beta_th) {
  const int K = static_cast<int>(gain.rows());
  require(gain.cols() == p.L, "associate_ues: gain table width must equal L");
  p.K = K;
  p.serving_sets.assign(K, {});
  std::vector<int> candidates = p.tx_aps;
  candidates.insert(candidates.end(), p.idle_aps.begin(), p.idle_aps.end());
  require(!candidates.empty(), "associate_ues: no non-RX APs available");
  std::set<int> recruited;
  for (int k = 0; k < K; ++k) {
    const auto order = ranked(gain.row(k).transpose(), candidates);
    double total = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      // The master AP is always taken; others only while below the threshold.
      if (i > 0 && !(total < beta_th)) break;
      p.serving_sets[k].push_back(order[i]);
      total += gain(k, order[i]);
      recruited.insert(order[i]);
    }
    std::sort(p.serving_sets[k].begin(), p.serving_sets[k].end());
  }
  for (int l : recruited) {
    if (contains(p.idle_aps, l)) {
      erase_value(p.idle_aps, l);
      insert_sorted(p.tx_aps, l);
    }
  }
  rebuild_reverse_maps(p);
  return p;
}

AssignmentPlan associate_ues(const Scenario& scenario, AssignmentPlan plan, double beta_th) {
  return associate_ues(scenario.ue_gain_table(), std::move(plan), beta_th);
}

AssignmentPlan build_assignment(const Scenario& scenario) {
  const auto& c = scenario.config();
  return associate_ues(scenario, select_ap_modes(scenario, c.T, c.R), c.beta_th());
}

void to_json(nlohmann::json& j, const AssignmentPlan& p) {
  j = {{"L", p.L},
       {"K", p.K},
       {"S", p.S},
       {"tx_aps", p.tx_aps},
       {"rx_aps", p.rx_aps},
       {"idle_aps", p.idle_aps},
       {"serving_sets", p.serving_sets},
       {"ssa_tx", p.ssa_tx},
       {"ssa_rx", p.ssa_rx}};
}

void from_json(const nlohmann::json& j, AssignmentPlan& p) {
  p.L = j.at("L").get<int>();
  p.K = j.at("K").get<int>();
  p.S = j.at("S").get<int>();
  p.tx_aps = j.at("tx_aps").get<std::vector<int>>();
  p.rx_aps = j.at("rx_aps").get<std::vector<int>>();
  p.idle_aps = j.at("idle_aps").get<std::vector<int>>();
  p.serving_sets = j.at("serving_sets").get<std::vector<std::vector<int>>>();
  p.ssa_tx = j.at("ssa_tx").get<std::vector<std::vector<int>>>();
  p.ssa_rx = j.at("ssa_rx").get<std::vector<std::vector<int>>>();
  rebuild_reverse_maps(p);
}

}  // namespace cfisac
