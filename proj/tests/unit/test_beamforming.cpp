#include <doctest.h>

#include <cmath>
#include <limits>

#include "cfisac/beamforming.hpp"

using namespace cfisac;

namespace {

SystemConfig small_config() {
  SystemConfig c;
  c.L = 9;
  c.M = 4;
  c.K = 3;
  c.S = 2;
  c.area_side = 300.0;
  c.ssa_positions = {{75, 75, 0}, {225, 225, 0}};
  return c;
}

// Two UEs, both served by every TX-AP.
AssignmentPlan everyone_served(int L, int K) {
  Mat sensing = Mat::Zero(1, L);
  sensing(0, L - 1) = 2.0;
  sensing(0, L - 2) = 1.0;
  return associate_ues(Mat::Ones(K, L), select_ap_modes(sensing, 1, 1), std::numeric_limits<double>::infinity());
}

ChannelEstimateSet exact_estimates(std::vector<CVec> h, int K, int L, int M) {
  ChannelEstimateSet est;
  est.K = K;
  est.L = L;
  est.h_hat = std::move(h);
  est.err_corr = std::make_shared<std::vector<CMat>>(static_cast<std::size_t>(K) * L, CMat::Zero(M, M));
  return est;
}

}  // namespace

TEST_SUITE("beamforming") {

TEST_CASE("LP-MMSE with one UE and exact CSI is a matched filter") {
  const int L = 3, M = 4;
  const AssignmentPlan plan = everyone_served(L, 1);
  RandomStream rng(1);
  std::vector<CVec> h;
  for (int l = 0; l < L; ++l) h.push_back(rng.complex_normal_vector(M));
  const auto w = lp_mmse_directions(exact_estimates(h, 1, L, M), plan, M, 0.2, 1e-3);
  const int i = 0;
  const int l = plan.tx_aps[i];
  const cdouble ratio = w[i](0) / h[l](0);
  CHECK((w[i] - ratio * h[l]).norm() < 1e-12 * w[i].norm());
  // Closed form for a rank-one signal: p h / (σ² + p ||h||²).
  CHECK(std::abs(ratio - cdouble(0.2 / (1e-3 + 0.2 * h[l].squaredNorm()), 0.0)) < 1e-12 * std::abs(ratio));
}

TEST_CASE("LP-MMSE nulls an orthogonal co-served UE") {
  const int L = 3, M = 4;
  const AssignmentPlan plan = everyone_served(L, 2);
  CVec h1 = CVec::Zero(M), h2 = CVec::Zero(M);
  h1 << cdouble(1, 1), cdouble(0.5, 0), 0, 0;
  h2 << 0, 0, cdouble(0, 2), cdouble(1, -1);
  std::vector<CVec> h;
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < L; ++l) h.push_back(k == 0 ? h1 : h2);
  const auto w = lp_mmse_directions(exact_estimates(h, 2, L, M), plan, M, 0.2, 1e-2);
  const int n_tx = plan.num_tx();
  for (int i = 0; i < n_tx; ++i) {
    CHECK(std::abs(h2.dot(w[0 * n_tx + i])) < 1e-14);
    CHECK(std::abs(h1.dot(w[1 * n_tx + i])) < 1e-14);
  }
}

TEST_CASE("LP-MMSE direction tends to the scaled estimate as noise grows") {
  const int L = 3, M = 3;
  const AssignmentPlan plan = everyone_served(L, 2);
  RandomStream rng(2);
  std::vector<CVec> h;
  for (int j = 0; j < 2 * L; ++j) h.push_back(rng.complex_normal_vector(M));
  const double sigma2 = 1e9, p = 0.2;
  const auto w = lp_mmse_directions(exact_estimates(h, 2, L, M), plan, M, p, sigma2);
  const int l = plan.tx_aps[0];
  CHECK((w[0] - (p / sigma2) * h[l]).norm() < 1e-8 * w[0].norm());
}

TEST_CASE("ensemble normalization gives unit mean precoder energy") {
  const SystemConfig c = small_config();
  const Scenario sc = build_scenario(c, 3);
  const AssignmentPlan plan = build_assignment(sc);
  const CommChannelModel model(sc);
  RandomStream rng(3);
  const auto scales = lp_mmse_norm_scales(model, plan, sc, 400, rng);
  std::vector<double> energy(scales.size(), 0.0);
  const int n = 2000;
  for (int t = 0; t < n; ++t) {
    const ChannelEstimateSet est = model.estimate(model.draw(rng), rng);
    const PrecoderSet pre = lp_mmse_precoders(est, plan, sc, scales);
    for (std::size_t j = 0; j < energy.size(); ++j) energy[j] += pre.w_comm[j].squaredNorm() / n;
  }
  int served = 0;
  for (std::size_t j = 0; j < energy.size(); ++j) {
    if (scales[j] == 0.0) {
      CHECK(energy[j] == 0.0);
      continue;
    }
    ++served;
    CHECK(energy[j] == doctest::Approx(1.0).epsilon(0.1));
  }
  CHECK(served >= c.K);

  const ChannelEstimateSet est = model.estimate(model.draw(rng), rng);
  const PrecoderSet unit = lp_mmse_precoders(est, plan, sc, {}, NormalizationMode::PerRealization);
  for (std::size_t j = 0; j < unit.w_comm.size(); ++j)
    if (unit.norm_scale[j] > 0.0) CHECK(unit.w_comm[j].norm() == doctest::Approx(1.0));
}

TEST_CASE("MRT sensing beams and MRC combiners") {
  const SystemConfig c = small_config();
  const Scenario sc = build_scenario(c, 4);
  const AssignmentPlan plan = build_assignment(sc);
  PrecoderSet pre;
  pre.S = plan.S;
  pre.n_tx = plan.num_tx();
  pre.M = c.M;
  mrt_sensing_precoders(sc, plan, pre);
  for (int s = 0; s < plan.S; ++s) {
    for (int l : plan.ssa_tx[s]) {
      const int i = plan.tx_index(l);
      const CVec& w = pre.sens(s, i);
      CHECK(w.norm() == doctest::Approx(1.0).epsilon(1e-14));
      const auto& link = sc.tx_link(s, l);
      const double gain = std::norm(array_response(link.azimuth, link.elevation, c.M).conjugate().dot(w));
      CHECK(gain == doctest::Approx(c.M).epsilon(1e-12));
      for (double phi = -kPi; phi <= kPi; phi += 0.01)
        CHECK(std::norm(array_response(phi, link.elevation, c.M).conjugate().dot(w)) <= c.M + 1e-9);
    }
  }
  const CombinerSet comb = mrc_combiners(sc, plan);
  CHECK(comb.n_rx == plan.num_rx());
  for (int s = 0; s < plan.S; ++s) {
    for (int j = 0; j < comb.n_rx; ++j) {
      const CVec& v = comb.at(s, j);
      const auto& link = sc.rx_link(s, plan.rx_aps[j]);
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(std::norm(v.dot(array_response(link.azimuth, link.elevation, c.M))) ==
            doctest::Approx(c.M).epsilon(1e-12));
      for (int t = 0; t < plan.S; ++t) {
        const auto& other = sc.rx_link(t, plan.rx_aps[j]);
        CHECK(std::norm(v.dot(array_response(other.azimuth, other.elevation, c.M))) <= c.M + 1e-9);
      }
    }
  }
}

TEST_CASE("symbol blocks are unit-variance, uncorrelated and reproducible") {
  RandomStream rng(5);
  const SymbolBlock b = draw_symbols(2, 1, 50000, rng);
  CHECK(b.s_comm.rowwise().squaredNorm().maxCoeff() / 50000 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(b.r_sens.squaredNorm() / 50000 == doctest::Approx(1.0).epsilon(0.02));
  const cdouble cross = (b.s_comm.row(0) * b.s_comm.row(1).adjoint())(0) / 50000.0;
  CHECK(std::abs(cross) < 3.0 / std::sqrt(50000.0));
  RandomStream a1(6), a2(6);
  CHECK(draw_symbols(3, 2, 7, a1).s_comm == draw_symbols(3, 2, 7, a2).s_comm);
}

TEST_CASE("transmit frame: zero power, energy and superposition") {
  const SystemConfig c = small_config();
  const Scenario sc = build_scenario(c, 6);
  const AssignmentPlan plan = build_assignment(sc);
  const CommChannelModel model(sc);
  RandomStream rng(7);
  PrecoderSet pre = lp_mmse_precoders(model.estimate(model.draw(rng), rng), plan, sc, {},
                                      NormalizationMode::PerRealization);
  mrt_sensing_precoders(sc, plan, pre);
  const int tau = 40000;
  const SymbolBlock sym = draw_symbols(plan.K, plan.S, tau, rng);

  const TransmitFrame zero = assemble_transmit(plan, pre, PowerVector(plan.num_tx(), plan.K, plan.S), sym);
  for (const auto& x : zero.x) CHECK(x.norm() == 0.0);

  // Full power on one served UE at one AP.
  const int k = 0;
  const int l = plan.serving_sets[k][0];
  const int i = plan.tx_index(l);
  PowerVector one(plan.num_tx(), plan.K, plan.S);
  one.comm(i, k) = std::sqrt(c.P_tx);
  const TransmitFrame f = assemble_transmit(plan, pre, one, sym);
  CHECK(f.x[i].squaredNorm() / tau == doctest::Approx(c.P_tx).epsilon(0.03));

  const PowerVector full = PowerVector::equal_split(plan, c.P_tx);
  PowerVector comm_part = full, sens_part = full;
  for (int ii = 0; ii < plan.num_tx(); ++ii) {
    for (int s = 0; s < plan.S; ++s) comm_part.sens(ii, s) = 0.0;
    for (int kk = 0; kk < plan.K; ++kk) sens_part.comm(ii, kk) = 0.0;
  }
  const TransmitFrame whole = assemble_transmit(plan, pre, full, sym);
  const TransmitFrame a = assemble_transmit(plan, pre, comm_part, sym);
  const TransmitFrame b = assemble_transmit(plan, pre, sens_part, sym);
  for (int ii = 0; ii < plan.num_tx(); ++ii) CHECK((whole.x[ii] - a.x[ii] - b.x[ii]).norm() < 1e-9 * whole.x[ii].norm() + 1e-300);

  PowerVector bad = full;
  for (int ii = 0; ii < plan.num_tx(); ++ii)
    for (int kk = 0; kk < plan.K; ++kk)
      if (!plan.serves(plan.tx_aps[ii], kk)) {
        bad.comm(ii, kk) = 0.1;
        CHECK_THROWS_AS(assemble_transmit(plan, pre, bad, sym), ContractViolation);
        return;
      }
}

}
