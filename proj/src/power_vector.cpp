#include "cfisac/power_vector.hpp"

#include <cmath>
#include <string>

namespace cfisac {

Vec PowerVector::ue_slice(int k) const {
  Vec v(n_tx_);
  for (int i = 0; i < n_tx_; ++i) v(i) = comm(i, k);
  return v;
}

Vec PowerVector::ssa_slice(int s) const {
  Vec v(n_tx_);
  for (int i = 0; i < n_tx_; ++i) v(i) = sens(i, s);
  return v;
}

PowerVector::PowerVector(int n_tx, int K, int S, Vec rho) : n_tx_(n_tx), K_(K), S_(S), rho_(std::move(rho)) {
  require(rho_.size() == static_cast<Eigen::Index>(n_tx) * (K + S), "PowerVector: size mismatch");
}

Vec PowerVector::support_mask(const AssignmentPlan& plan) {
  PowerVector p(plan.num_tx(), plan.K, plan.S);
  for (int i = 0; i < plan.num_tx(); ++i) {
    const int l = plan.tx_aps[i];
    for (int k : plan.ap_ues[l]) p.comm(i, k) = 1.0;
    for (int s : plan.ap_targets[l]) p.sens(i, s) = 1.0;
  }
  return p.values();
}

PowerVector PowerVector::equal_split(const AssignmentPlan& plan, double P_tx) {
  PowerVector p(plan.num_tx(), plan.K, plan.S);
  for (int i = 0; i < plan.num_tx(); ++i) {
    const int l = plan.tx_aps[i];
    const std::size_t n = plan.ap_ues[l].size() + plan.ap_targets[l].size();
    if (n == 0) continue;
    const double amp = std::sqrt(P_tx / static_cast<double>(n));
    for (int k : plan.ap_ues[l]) p.comm(i, k) = amp;
    for (int s : plan.ap_targets[l]) p.sens(i, s) = amp;
  }
  return p;
}

void PowerVector::check_feasible(const AssignmentPlan& plan, double P_tx, double tol) const {
  require(n_tx_ == plan.num_tx() && K_ == plan.K && S_ == plan.S, "PowerVector: shape does not match plan");
  const Vec mask = support_mask(plan);
  for (Eigen::Index j = 0; j < rho_.size(); ++j) {
    require(rho_(j) >= 0.0, "PowerVector: negative amplitude at entry " + std::to_string(j));
    require(mask(j) != 0.0 || rho_(j) == 0.0, "PowerVector: power on unassigned entry " + std::to_string(j));
  }
  for (int i = 0; i < n_tx_; ++i)
    require(ap_power(i) <= P_tx * (1.0 + tol), "PowerVector: per-AP power exceeded at TX-AP " + std::to_string(i));
}

}  // namespace cfisac
