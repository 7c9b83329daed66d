#include "cfisac/convex.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cfisac {

double QuadraticConstraint::value(const Vec& x) const {
  double v = q.dot(x) + r;
  if (!idx.empty()) {
    Vec xi(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) xi(static_cast<Eigen::Index>(a)) = x(idx[a]);
    v += xi.dot(P * xi);
  }
  return v;
}

double ConvexProblem::max_violation(const Vec& x) const {
  double worst = -std::numeric_limits<double>::infinity();
  if (G.rows() > 0) worst = (G * x - h).maxCoeff();
  for (const auto& qc : quadratic) worst = std::max(worst, qc.value(x));
  return worst;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// t·c^T x − Σ log(−f_i(x)); +∞ outside the strict interior.
double barrier_value(const ConvexProblem& p, const Vec& x, double t) {
  double v = t * p.c.dot(x);
  if (p.G.rows() > 0) {
    const Vec s = p.h - p.G * x;
    if ((s.array() <= 0.0).any()) return kInf;
    v -= s.array().log().sum();
  }
  for (const auto& qc : p.quadratic) {
    const double f = qc.value(x);
    if (!(f < 0.0)) return kInf;
    v -= std::log(-f);
  }
  return v;
}

void barrier_derivatives(const ConvexProblem& p, const Vec& x, double t, Vec& grad, Mat& hess) {
  const Eigen::Index n = x.size();
  grad = t * p.c;
  hess.setZero(n, n);
  if (p.G.rows() > 0) {
    const Vec inv = (p.h - p.G * x).cwiseInverse();
    grad.noalias() += p.G.transpose() * inv;
    hess.noalias() += p.G.transpose() * inv.cwiseAbs2().asDiagonal() * p.G;
  }
  Vec gf(n);
  for (const auto& qc : p.quadratic) {
    const double f = qc.value(x);
    gf = qc.q;
    const auto m = static_cast<Eigen::Index>(qc.idx.size());
    Vec xi(m);
    for (Eigen::Index a = 0; a < m; ++a) xi(a) = x(qc.idx[a]);
    const Vec Px = qc.P * xi;
    for (Eigen::Index a = 0; a < m; ++a) gf(qc.idx[a]) += 2.0 * Px(a);
    grad.noalias() -= gf / f;
    hess.noalias() += (gf * gf.transpose()) / (f * f);
    const double w = -2.0 / f;
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) hess(qc.idx[a], qc.idx[b]) += w * qc.P(a, b);
  }
}

/// Solves H Δ = −g after symmetric Jacobi scaling; barrier Hessians mix
/// curvatures many orders of magnitude apart near active constraints.
Vec newton_step(const Mat& H, const Vec& g) {
  const Vec d = H.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
  Mat Hs = d.asDiagonal() * H * d.asDiagonal();
  const Vec gs = d.cwiseProduct(g);
  for (double ridge = 0.0; ridge < 1.0; ridge = ridge == 0.0 ? 1e-14 : ridge * 100.0) {
    if (ridge > 0.0) Hs.diagonal().array() += ridge;
    Eigen::LLT<Mat> llt(Hs);
    if (llt.info() == Eigen::Success) {
      Vec step = -d.cwiseProduct(llt.solve(gs));
      if (step.allFinite()) return step;
    }
  }
  throw SolverFailure("solve_barrier: Newton system is not positive definite");
}

}  // namespace

BarrierResult solve_barrier(const ConvexProblem& p, const Vec& x0, const BarrierOptions& opt) {
  require(x0.size() == p.c.size(), "solve_barrier: start point has the wrong dimension");
  require(p.G.rows() == p.h.size() && (p.G.rows() == 0 || p.G.cols() == p.c.size()),
          "solve_barrier: inconsistent linear constraints");
  if (!(p.max_violation(x0) < 0.0)) throw SolverFailure("solve_barrier: start point is not strictly feasible");

  const double m = p.num_constraints();
  BarrierResult res;
  Vec x = x0, grad, step;
  Mat hess;
  // Scale t so the first centering sees an objective spread of order m.
  double t = opt.t0 > 0.0 ? opt.t0 : m / std::max(1.0, std::abs(p.c.dot(x0)));
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    ++res.outer_iterations;
    double fx = barrier_value(p, x, t);
    for (int it = 0; it < opt.max_newton; ++it) {
      barrier_derivatives(p, x, t, grad, hess);
      step = newton_step(hess, grad);
      const double decrement = -grad.dot(step);
      ++res.newton_steps;
      if (decrement / 2.0 <= 1e-10) break;
      double alpha = 1.0, fn = kInf;
      while (alpha > 1e-16) {
        fn = barrier_value(p, x + alpha * step, t);
        if (fn <= fx - 0.25 * alpha * decrement) break;
        alpha *= 0.5;
      }
      if (alpha <= 1e-16 || !(fn < fx)) break;  // no further progress at this precision
      x += alpha * step;
      fx = fn;
    }
    res.gap_bound = m / t;
    const double obj = p.c.dot(x);
    if (res.gap_bound <= opt.rel_gap * std::max(1.0, std::abs(obj))) {
      res.certified = true;
      break;
    }
    t *= opt.mu;
  }
  res.x = x;
  res.objective = p.c.dot(x);
  return res;
}

}  // namespace cfisac
