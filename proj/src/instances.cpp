#include "cfisac/instances.hpp"

#include <algorithm>
#include <numeric>

namespace cfisac {

namespace {

int uniform_int(RandomStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1)) % (hi - lo + 1);
}

/// Non-empty random subset of `pool`, sorted.
std::vector<int> random_subset(RandomStream& rng, const std::vector<int>& pool) {
  std::vector<int> out;
  for (int x : pool)
    if (rng.uniform() < 0.5) out.push_back(x);
  if (out.empty()) out.push_back(pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)]);
  return out;
}

}  // namespace

SmallInstance random_small_instance(RandomStream& rng, const SmallInstanceLimits& lim) {
  const int n_tx = uniform_int(rng, 1, lim.max_tx);
  const int K = uniform_int(rng, 1, lim.max_k);
  const int S = uniform_int(rng, 1, lim.max_s);
  const int M = uniform_int(rng, 1, lim.max_m);
  const int tau = uniform_int(rng, 1, lim.max_tau);
  const int n_rx = uniform_int(rng, 1, 3);

  SystemConfig cfg;
  cfg.L = 9;
  cfg.M = M;
  cfg.K = K;
  cfg.S = S;
  cfg.tau_s = tau;
  cfg.area_side = 150.0;
  cfg.ssa_positions.clear();
  for (int s = 0; s < S; ++s) cfg.ssa_positions.emplace_back(150.0 * rng.uniform(), 150.0 * rng.uniform(), 0.0);
  std::vector<Point3> ues;
  for (int k = 0; k < K; ++k) ues.emplace_back(150.0 * rng.uniform(), 150.0 * rng.uniform(), cfg.ue_height);
  Scenario scenario = build_scenario_with_ues(cfg, ues, rng.child("los").seed());

  std::vector<int> aps(cfg.L);
  std::iota(aps.begin(), aps.end(), 0);
  std::shuffle(aps.begin(), aps.end(), rng.engine());
  AssignmentPlan plan;
  plan.L = cfg.L;
  plan.K = K;
  plan.S = S;
  plan.tx_aps.assign(aps.begin(), aps.begin() + n_tx);
  plan.rx_aps.assign(aps.begin() + n_tx, aps.begin() + n_tx + n_rx);
  plan.idle_aps.assign(aps.begin() + n_tx + n_rx, aps.end());
  std::sort(plan.tx_aps.begin(), plan.tx_aps.end());
  std::sort(plan.rx_aps.begin(), plan.rx_aps.end());
  std::sort(plan.idle_aps.begin(), plan.idle_aps.end());
  for (int k = 0; k < K; ++k) plan.serving_sets.push_back(random_subset(rng, plan.tx_aps));
  for (int s = 0; s < S; ++s) {
    plan.ssa_tx.push_back(random_subset(rng, plan.tx_aps));
    plan.ssa_rx.push_back(random_subset(rng, plan.rx_aps));
  }
  rebuild_reverse_maps(plan);

  PrecoderSet pre;
  pre.K = K;
  pre.S = S;
  pre.n_tx = n_tx;
  pre.M = M;
  pre.w_comm.assign(static_cast<std::size_t>(K) * n_tx, CVec::Zero(M));
  pre.w_sens.assign(static_cast<std::size_t>(S) * n_tx, CVec::Zero(M));
  pre.norm_scale.assign(pre.w_comm.size(), 1.0);
  for (int i = 0; i < n_tx; ++i) {
    const int l = plan.tx_aps[i];
    for (int k : plan.ap_ues[l]) pre.w_comm[k * n_tx + i] = rng.complex_normal_vector(M).normalized();
    for (int s : plan.ap_targets[l]) pre.w_sens[s * n_tx + i] = rng.complex_normal_vector(M).normalized();
  }
  CombinerSet comb;
  comb.S = S;
  comb.n_rx = n_rx;
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < n_rx; ++j) comb.v.push_back(rng.complex_normal_vector(M).normalized());

  SymbolBlock sym = draw_symbols(K, S, tau, rng);
  PowerVector power(n_tx, K, S);
  const Vec mask = PowerVector::support_mask(plan);
  for (Eigen::Index j = 0; j < mask.size(); ++j) power.values()(j) = mask(j) * rng.uniform();
  for (int i = 0; i < n_tx; ++i) {
    const double pw = power.ap_power(i);
    if (pw > cfg.P_tx) power.values().segment(i * (K + S), K + S) *= std::sqrt(cfg.P_tx / pw);
  }
  return {std::move(scenario), std::move(plan), std::move(pre), std::move(comb), std::move(sym), std::move(power)};
}

}  // namespace cfisac
