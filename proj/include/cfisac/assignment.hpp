#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cfisac/scenario.hpp"

namespace cfisac {

/// AP modes and index sets. All AP indices are global (0..L-1) and every set
/// is kept sorted ascending.
struct AssignmentPlan {
  int L = 0, K = 0, S = 0;
  std::vector<int> tx_aps, rx_aps, idle_aps;
  std::vector<std::vector<int>> serving_sets;  ///< M_k, per UE
  std::vector<std::vector<int>> ssa_tx;        ///< T_s
  std::vector<std::vector<int>> ssa_rx;        ///< R_s
  std::vector<std::vector<int>> ap_ues;        ///< U_l, per AP (empty unless TX)
  std::vector<std::vector<int>> ap_targets;    ///< S_l, per AP (empty unless TX)

  int num_tx() const { return static_cast<int>(tx_aps.size()); }
  int num_rx() const { return static_cast<int>(rx_aps.size()); }
  /// Position of AP l in tx_aps, or -1.
  int tx_index(int l) const;
  /// Position of AP r in rx_aps, or -1.
  int rx_index(int r) const;
  bool serves(int l, int k) const;    ///< η_{k,l}
  bool senses(int l, int s) const;    ///< ζ_{s,l}

  /// Throws ContractViolation if any structural invariant is broken.
  void check_invariants(int T, int R, bool ues_associated) const;
};

class InfeasibleAssignment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sensing mode selection. `ssa_ap_gain` is S×L; ties break by ascending AP index.
AssignmentPlan select_ap_modes(const Mat& ssa_ap_gain, int T, int R);
AssignmentPlan select_ap_modes(const Scenario& scenario, int T, int R);

/// User-centric association over non-RX APs. `ue_ap_gain` is K×L.
AssignmentPlan associate_ues(const Mat& ue_ap_gain, AssignmentPlan plan, double beta_th);
AssignmentPlan associate_ues(const Scenario& scenario, AssignmentPlan plan, double beta_th);

/// Both phases with the scenario's configured T, R and threshold.
AssignmentPlan build_assignment(const Scenario& scenario);

/// Recomputes ap_ues / ap_targets from serving_sets / ssa_tx.
void rebuild_reverse_maps(AssignmentPlan& plan);

void to_json(nlohmann::json& j, const AssignmentPlan& p);
void from_json(const nlohmann::json& j, AssignmentPlan& p);

}  // namespace cfisac
