#pragma once

#include "cfisac/assignment.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Amplitude coefficients ρ ∈ R^{(K+S)·L_tx}. Block i belongs to TX-AP
/// plan.tx_aps[i] and holds [√p_{1,l} … √p_{K,l}, √q_{1,l} … √q_{S,l}].
class PowerVector {
 public:
  PowerVector() = default;
  PowerVector(int n_tx, int K, int S) : n_tx_(n_tx), K_(K), S_(S), rho_(Vec::Zero(n_tx * (K + S))) {}
  PowerVector(int n_tx, int K, int S, Vec rho);

  int n_tx() const { return n_tx_; }
  int K() const { return K_; }
  int S() const { return S_; }
  int block() const { return K_ + S_; }
  Eigen::Index size() const { return rho_.size(); }

  int comm_index(int tx_idx, int k) const { return tx_idx * block() + k; }
  int sens_index(int tx_idx, int s) const { return tx_idx * block() + K_ + s; }

  double comm(int tx_idx, int k) const { return rho_(comm_index(tx_idx, k)); }
  double sens(int tx_idx, int s) const { return rho_(sens_index(tx_idx, s)); }
  double& comm(int tx_idx, int k) { return rho_(comm_index(tx_idx, k)); }
  double& sens(int tx_idx, int s) { return rho_(sens_index(tx_idx, s)); }

  /// ρ_k: UE k's amplitudes across TX-APs.
  Vec ue_slice(int k) const;
  /// q_s: SSA s's amplitudes across TX-APs.
  Vec ssa_slice(int s) const;
  /// Σ_k p + Σ_s q at TX-AP block i.
  double ap_power(int tx_idx) const { return rho_.segment(tx_idx * block(), block()).squaredNorm(); }

  const Vec& values() const { return rho_; }
  Vec& values() { return rho_; }

  /// 0/1 mask of entries allowed to be non-zero under the plan (η, ζ).
  static Vec support_mask(const AssignmentPlan& plan);

  /// Per TX-AP, P_tx split equally (in power) over its assigned UEs and SSAs.
  static PowerVector equal_split(const AssignmentPlan& plan, double P_tx);

  /// Throws ContractViolation if entries are negative, off-support, or an AP
  /// exceeds P_tx by more than `tol` (relative).
  void check_feasible(const AssignmentPlan& plan, double P_tx, double tol = 1e-9) const;

 private:
  int n_tx_ = 0, K_ = 0, S_ = 0;
  Vec rho_;
};

}  // namespace cfisac
