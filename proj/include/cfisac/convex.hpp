#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cfisac/types.hpp"

namespace cfisac {

/// Convex quadratic inequality  x_I^T P x_I + q^T x + r ≤ 0,  P symmetric PSD.
/// `idx` selects the coordinates the quadratic part acts on; q spans all of x.
struct QuadraticConstraint {
  std::vector<int> idx;
  Mat P;
  Vec q;
  double r = 0.0;

  double value(const Vec& x) const;
};

/// minimize c^T x  s.t.  G x ≤ h,  quadratic constraints.
struct ConvexProblem {
  Vec c;
  Mat G;
  Vec h;
  std::vector<QuadraticConstraint> quadratic;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_constraints() const { return static_cast<int>(G.rows() + quadratic.size()); }
  /// Largest constraint value (≤ 0 means feasible).
  double max_violation(const Vec& x) const;
};

struct BarrierOptions {
  double rel_gap = 1e-8;    ///< stop once m/t ≤ rel_gap · max(1, |c^T x|)
  double t0 = 0.0;          ///< 0 picks m / max(1, |c^T x0|)
  double mu = 20.0;
  int max_newton = 200;     ///< per centering step
  int max_outer = 60;
};

struct BarrierResult {
  Vec x;
  double objective = 0.0;
  double gap_bound = 0.0;   ///< m/t at exit, an upper bound on suboptimality
  int outer_iterations = 0;
  int newton_steps = 0;
  bool certified = false;   ///< gap_bound reached the requested tolerance
};

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Log-barrier interior-point method with damped Newton centering.
/// `x0` must be strictly feasible; throws SolverFailure otherwise or on a
/// breakdown of the Newton system.
BarrierResult solve_barrier(const ConvexProblem& problem, const Vec& x0, const BarrierOptions& options = {});

}  // namespace cfisac
