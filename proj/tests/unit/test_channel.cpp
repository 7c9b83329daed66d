#include <doctest.h>

#include <cmath>

#include "cfisac/channel.hpp"

using namespace cfisac;

namespace {

SystemConfig tiny_config() {
  SystemConfig c;
  c.L = 4;
  c.M = 3;
  c.K = 2;
  c.S = 2;
  c.area_side = 200.0;
  c.ssa_positions = {{50, 50, 0}, {150, 150, 0}};
  return c;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("psd square root reproduces the matrix and rejects indefinite input") {
  RandomStream rng(3);
  CMat X(4, 4);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.complex_normal();
  const CMat A = X * X.adjoint();
  const CMat root = psd_sqrt(A);
  CHECK((root * root - A).norm() < 1e-10 * A.norm());
  CHECK((root - root.adjoint()).norm() < 1e-12);
  CMat bad = CMat::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(psd_sqrt(bad), ContractViolation);
}

TEST_CASE("NLOS sample covariance converges to the link correlation") {
  const Scenario sc = build_scenario(tiny_config(), 21);
  const CommChannelModel model(sc);
  RandomStream rng(4);
  const int n = 10000;
  const int k = 1, l = 2;
  const auto& st = sc.comm_link(k, l);
  CMat cov = CMat::Zero(3, 3);
  CVec mean = CVec::Zero(3);
  for (int i = 0; i < n; ++i) {
    const CommChannelSet set = model.draw(rng);
    const CVec tilde = set.at(k, l) - std::polar(1.0, set.psi[k * set.L + l]) * st.los_mean;
    cov += tilde * tilde.adjoint();
    mean += set.at(k, l);
  }
  cov /= n;
  mean /= n;
  CHECK((cov - st.nlos_corr).norm() < 0.05 * st.nlos_corr.norm());
  // Uniform LOS phase averages the mean away.
  const double spread = std::sqrt((st.los_mean.squaredNorm() + st.nlos_corr.real().trace()) / n);
  CHECK(mean.norm() < 5.0 * spread);
}

TEST_CASE("LMMSE error trace matches the Monte Carlo estimation error") {
  const Scenario sc = build_scenario(tiny_config(), 22);
  const CommChannelModel model(sc);
  RandomStream rng(5);
  const int n = 10000;
  const int k = 0, l = 1;
  double err = 0.0;
  for (int i = 0; i < n; ++i) {
    const CommChannelSet set = model.draw(rng);
    const ChannelEstimateSet est = model.estimate(set, rng);
    err += (set.at(k, l) - est.at(k, l)).squaredNorm();
  }
  err /= n;
  const double trace_z = model.error_corr(k, l).real().trace();
  CHECK(err == doctest::Approx(trace_z).epsilon(0.05));
  // The prior decomposes into mean and scattering parts.
  const auto& st = sc.comm_link(k, l);
  CHECK((model.prior_corr(k, l) - st.los_mean * st.los_mean.adjoint() - st.nlos_corr).norm() < 1e-20);
}

TEST_CASE("estimation limits: vanishing noise and vanishing pilot power") {
  SystemConfig c = tiny_config();
  c.sigma_n2 = 1e-30;
  const Scenario clean = build_scenario(c, 23);
  const CommChannelModel good(clean);
  RandomStream rng(6);
  const CommChannelSet set = good.draw(rng);
  const ChannelEstimateSet est = good.estimate(set, rng);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 4; ++l) {
      CHECK((est.at(k, l) - set.at(k, l)).norm() < 1e-6 * set.at(k, l).norm());
      CHECK(good.error_corr(k, l).norm() < 1e-6 * good.prior_corr(k, l).norm());
    }

  c.sigma_n2 = 0.0;
  c.p_ul = 1e-30;
  const Scenario blind = build_scenario(c, 23);
  const CommChannelModel poor(blind);
  const ChannelEstimateSet e2 = poor.estimate(poor.draw(rng), rng);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 4; ++l) {
      CHECK(e2.at(k, l).norm() < 1e-6 * std::sqrt(poor.prior_corr(k, l).real().trace()));
      CHECK((poor.error_corr(k, l) - poor.prior_corr(k, l)).norm() < 1e-6 * poor.prior_corr(k, l).norm());
    }
}

TEST_CASE("two-way channels are rank one with the radar-equation energy") {
  const Scenario sc = build_scenario(tiny_config(), 24);
  const TwoWayChannelSet g = build_two_way_channels(sc);
  REQUIRE(g.G.size() == 2u * 4u * 4u);
  for (int s = 0; s < 2; ++s)
    for (int r = 0; r < 4; ++r)
      for (int l = 0; l < 4; ++l) {
        const CMat& G = g.at(s, r, l);
        Eigen::JacobiSVD<CMat> svd(G);
        CHECK(svd.singularValues()(1) < 1e-12 * svd.singularValues()(0));
        CHECK(G.squaredNorm() == doctest::Approx(sc.two_way_gain(s, r, l) * 9.0).epsilon(1e-12));
      }

  SystemConfig one = tiny_config();
  one.M = 1;
  const Scenario sc1 = build_scenario(one, 24);
  const TwoWayChannelSet g1 = build_two_way_channels(sc1);
  CHECK(std::abs(g1.at(1, 0, 3)(0, 0) - std::sqrt(sc1.two_way_gain(1, 0, 3))) < 1e-20);
}

TEST_CASE("Swerling-I draws are unit-variance, zero-mean and uncorrelated across TX-APs") {
  RandomStream rng(8);
  const int n = 100000;
  cdouble mean = 0.0, cross = 0.0;
  double power = 0.0;
  for (int i = 0; i < n; ++i) {
    const RcsRealization r = draw_rcs(1, 1, 2, rng);
    mean += r.at(0, 0, 0);
    power += std::norm(r.at(0, 0, 0));
    cross += r.at(0, 0, 0) * std::conj(r.at(0, 0, 1));
  }
  const double band = 3.0 / std::sqrt(static_cast<double>(n));
  CHECK(power / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(mean / static_cast<double>(n)) < 3.0 * band);
  CHECK(std::abs(cross / static_cast<double>(n)) < 3.0 * band);
}

TEST_CASE("correlated RCS model follows its correlation matrix") {
  CMat C(2, 2);
  C << 1.0, cdouble(0.6, 0.2), cdouble(0.6, -0.2), 1.0;
  const RcsModel model(C);
  CHECK_FALSE(model.identity());
  CHECK((model.corr_inverse() * C - CMat::Identity(2, 2)).norm() < 1e-12);
  RandomStream rng(9);
  CMat emp = CMat::Zero(2, 2);
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const RcsRealization r = model.draw(1, 1, rng);
    CVec a(2);
    a << r.at(0, 0, 0), r.at(0, 0, 1);
    emp += a * a.adjoint();
  }
  emp /= n;
  CHECK((emp - C).norm() < 0.03);
  CHECK(RcsModel(3).identity());
  CMat not_pd = CMat::Identity(2, 2);
  not_pd(0, 1) = not_pd(1, 0) = 2.0;
  CHECK_THROWS_AS(RcsModel{not_pd}, ContractViolation);
}

}
