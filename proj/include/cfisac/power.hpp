#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfisac/assignment.hpp"
#include "cfisac/convex.hpp"
#include "cfisac/power_vector.hpp"
#include "cfisac/sinr.hpp"

namespace cfisac {

struct CcpConfig {
  double omega0 = 1.0;          ///< sensing weight
  double omega1 = 1.0;          ///< communication weight
  double lambda_penalty = 0.0;  ///< 0 selects 100·max(ω₀, ω₁)
  double eps1 = 1e-3, eps2 = 1e-3, eps3 = 0.1, eps4 = 1e-6;
  int c_max = 150;
  double subproblem_tol = 1e-8;
  double ap_power = 1.0;        ///< P_tx, W
  int max_retries = 3;
  std::uint64_t seed = 0;       ///< drives the randomized re-initialization

  double penalty() const;
  void validate() const;
};

struct CcpState {
  PowerVector rho;
  double gamma_s = 0.0;
  double gamma_c = 0.0;
  Vec xi;        ///< per UE, in SINR units of the rescaled constraint
  Vec chi;       ///< per sensing pair, same units
  int iteration = 0;
  bool converged = false;
};

/// Linearized SINR constraint
///   signal·ρ + gamma_coef·γ + slack ≥ ρ^T Q ρ + noise,
/// where signal·ρ + gamma_coef·γ is the first-order expansion of |ρ^T a|²/γ
/// (or ρ^T A ρ/γ) at the linearization point. `scale` = γ^(c)² / N^(c)
/// normalizes gamma_coef to −1 when the constraint is handed to the solver.
struct LinearizedConstraint {
  Vec signal;
  double gamma_coef = 0.0;
  Mat Q;
  double noise = 0.0;
  double scale = 1.0;

  double surrogate(const Vec& rho, double gamma) const { return signal.dot(rho) + gamma_coef * gamma; }
  double interference(const Vec& rho) const { return rho.dot(Q * rho) + noise; }
};

LinearizedConstraint linearize_comm_constraint(const CommSinrModel& model, int k, const CcpState& state);
LinearizedConstraint linearize_sensing_constraint(const SensingQuadraticForms& forms, std::size_t pair,
                                                  const CcpState& state);

/// Penalized CCP objective −ω₀γ_s − ω₁γ_c + λ(Σξ + Σχ).
double ccp_objective(const CcpState& state, const CcpConfig& config);

struct SubproblemInfo {
  int newton_steps = 0;
  double gap_bound = 0.0;
  bool certified = false;
};

/// One convex subproblem around `state`. Slacks and γ are polished after the
/// interior-point solve: γ = max(0, min_k b_k), slack_k = max(0, γ − b_k),
/// with b_k the largest γ the k-th constraint admits at the new ρ.
CcpState solve_convex_subproblem(const CommSinrModel& model, const SensingQuadraticForms& forms,
                                 const AssignmentPlan& plan, const CcpState& state, const CcpConfig& config,
                                 SubproblemInfo* info = nullptr);

struct CcpTraceRow {
  int iteration = 0;
  double gamma_s = 0.0, gamma_c = 0.0;
  double slack_xi = 0.0, slack_chi = 0.0;
  double objective = 0.0;
  double delta_rho = 0.0;
  int newton_steps = 0;
};

struct CcpResult {
  CcpState state;
  std::vector<CcpTraceRow> trace;
  int retries = 0;
};

class CcpFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Initial state: the given power with γ set to the true SINRs it achieves.
CcpState initial_ccp_state(const CommSinrModel& model, const SensingQuadraticForms& forms, const PowerVector& init);

/// Random feasible split: per TX-AP, Dirichlet(1) weights over its assigned entries.
PowerVector dirichlet_split(const AssignmentPlan& plan, double P_tx, RandomStream& rng);

CcpResult ccp_power_allocation(const CommSinrModel& model, const SensingQuadraticForms& forms,
                               const AssignmentPlan& plan, const CcpConfig& config, const PowerVector& init);

void write_ccp_trace_csv(std::ostream& os, const std::vector<CcpTraceRow>& trace);

/// Everything needed to run the power allocation standalone.
struct PowerBundle {
  AssignmentPlan plan;
  CommSinrModel model;
  SensingQuadraticForms forms;
  CcpConfig config;
  PowerVector init;
};

void to_json(nlohmann::json& j, const CcpConfig& c);
void from_json(const nlohmann::json& j, CcpConfig& c);
void to_json(nlohmann::json& j, const PowerVector& p);
void from_json(const nlohmann::json& j, PowerVector& p);
void to_json(nlohmann::json& j, const PowerBundle& b);
void from_json(const nlohmann::json& j, PowerBundle& b);
void to_json(nlohmann::json& j, const CcpState& s);

}  // namespace cfisac
