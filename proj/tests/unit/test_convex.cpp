#include <doctest.h>

#include <cmath>

#include "cfisac/convex.hpp"
#include "cfisac/rng.hpp"

using namespace cfisac;

namespace {

QuadraticConstraint ellipsoid(const Mat& P, int offset, int n_total) {
  QuadraticConstraint qc;
  for (int i = 0; i < P.rows(); ++i) qc.idx.push_back(offset + i);
  qc.P = P;
  qc.q = Vec::Zero(n_total);
  qc.r = -1.0;
  return qc;
}

}  // namespace

TEST_SUITE("convex") {

TEST_CASE("box LP reaches its corner") {
  ConvexProblem p;
  p.c = Vec::Constant(2, -1.0);
  p.G.resize(4, 2);
  p.G << 1, 0, 0, 1, -1, 0, 0, -1;
  p.h = Vec(4);
  p.h << 1, 1, 0, 0;
  const BarrierResult r = solve_barrier(p, Vec::Constant(2, 0.5));
  CHECK(r.certified);
  CHECK(r.objective == doctest::Approx(-2.0).epsilon(1e-7));
  CHECK(r.gap_bound <= 1e-8 * 2.0 + 1e-15);
  CHECK(p.max_violation(r.x) < 0.0);
}

TEST_CASE("linear objective over an ellipsoid matches the closed form") {
  RandomStream rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 4;
    Mat X(n, n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    const Mat P = X * X.transpose() + 0.1 * Mat::Identity(n, n);
    Vec c(n);
    for (int i = 0; i < n; ++i) c(i) = rng.normal();
    ConvexProblem p;
    p.c = c;
    p.G.resize(0, n);
    p.h.resize(0);
    p.quadratic.push_back(ellipsoid(P, 0, n));
    // Oracle: x* = −P⁻¹c / √(cᵀP⁻¹c).
    const Vec pinv_c = P.ldlt().solve(c);
    const double opt = -std::sqrt(c.dot(pinv_c));
    const BarrierResult r = solve_barrier(p, Vec::Zero(n));
    CHECK(r.objective == doctest::Approx(opt).epsilon(1e-7));
    CHECK((r.x + pinv_c / std::sqrt(c.dot(pinv_c))).norm() < 1e-3);
  }
}

TEST_CASE("quadratic part on a subset of coordinates plus a linear term") {
  // minimize −y  s.t.  x² − y ≤ 0,  y ≤ 3  →  y = 3 with any |x| ≤ √3.
  ConvexProblem p;
  p.c = Vec(2);
  p.c << 0.0, -1.0;
  p.G.resize(1, 2);
  p.G << 0, 1;
  p.h = Vec::Constant(1, 3.0);
  QuadraticConstraint qc;
  qc.idx = {0};
  qc.P = Mat::Identity(1, 1);
  qc.q = Vec(2);
  qc.q << 0.0, -1.0;
  qc.r = 0.0;
  p.quadratic.push_back(qc);
  Vec x0(2);
  x0 << 0.5, 1.0;
  CHECK(qc.value(x0) == doctest::Approx(-0.75));
  const BarrierResult r = solve_barrier(p, x0);
  CHECK(r.x(1) == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(r.x(0) * r.x(0) <= 3.0 + 1e-9);
}

TEST_CASE("max-min of two linear functions") {
  // maximize t  s.t.  t ≤ 2x,  t ≤ 3(1 − x),  0 ≤ x  →  x = 0.6, t = 1.2.
  ConvexProblem p;
  p.c = Vec(2);
  p.c << 0.0, -1.0;
  p.G.resize(3, 2);
  p.G << -2, 1, 3, 1, -1, 0;
  p.h = Vec(3);
  p.h << 0, 3, 0;
  Vec x0(2);
  x0 << 0.5, 0.1;
  const BarrierResult r = solve_barrier(p, x0);
  CHECK(r.x(0) == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(r.objective == doctest::Approx(-1.2).epsilon(1e-7));
}

TEST_CASE("a start outside the strict interior is rejected") {
  ConvexProblem p;
  p.c = Vec::Ones(1);
  p.G.resize(1, 1);
  p.G << -1;
  p.h = Vec::Zero(1);
  CHECK_THROWS_AS(solve_barrier(p, Vec::Zero(1)), SolverFailure);
  CHECK_THROWS_AS(solve_barrier(p, Vec::Constant(1, -1.0)), SolverFailure);
}

TEST_CASE("looser tolerance stops earlier with an honest gap bound") {
  ConvexProblem p;
  p.c = Vec::Constant(3, 1.0);
  p.G.resize(0, 3);
  p.h.resize(0);
  p.quadratic.push_back(ellipsoid(Mat::Identity(3, 3), 0, 3));
  BarrierOptions loose;
  loose.rel_gap = 1e-3;
  const BarrierResult a = solve_barrier(p, Vec::Zero(3), loose);
  const BarrierResult b = solve_barrier(p, Vec::Zero(3));
  CHECK(a.outer_iterations < b.outer_iterations);
  const double opt = -std::sqrt(3.0);
  CHECK(a.objective - opt <= a.gap_bound + 1e-12);
  CHECK(b.objective - opt <= b.gap_bound + 1e-12);
  CHECK(a.certified);
}

}
