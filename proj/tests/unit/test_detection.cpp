#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cfisac/detection.hpp"
#include "cfisac/harness.hpp"

using namespace cfisac;

namespace {

SystemConfig small_config(int S = 2, int R = 2) {
  SystemConfig c;
  c.L = 9;
  c.M = 3;
  c.K = 2;
  c.S = S;
  c.R = R;
  c.area_side = 300.0;
  c.ssa_positions = {{75, 75, 0}, {225, 225, 0}};
  c.ssa_positions.resize(S);
  c.tau_s = 6;
  return c;
}

struct Fixture {
  SetupArtifacts art;
  PowerVector power;
  DetectionEngine engine;
  explicit Fixture(const SystemConfig& c)
      : art(prepare_setup(c, 3, 40, 20)),
        power(PowerVector::equal_split(art.plan, c.P_tx)),
        engine(art.scenario, art.plan, art.precoders, power) {}
};

CMat random_matrix(RandomStream& rng, int r, int c) {
  CMat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.complex_normal();
  return m;
}

}  // namespace

TEST_SUITE("detection") {

TEST_CASE("fast reception matches the literal two-way evaluation") {
  Fixture f(small_config());
  const TwoWayChannelSet G = build_two_way_channels(f.art.scenario);
  RandomStream rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const SensingDraw d = f.engine.draw(rng);
    const TransmitFrame frame = assemble_transmit(f.art.plan, f.art.precoders, f.power, d.symbols);
    for (const std::vector<bool>& h1 : {std::vector<bool>{true, true}, std::vector<bool>{false, true}}) {
      const ReceivedSensingBlock lit = simulate_reception(frame, G, f.engine.combiners(), f.art.plan, h1, d);
      const auto fast = f.engine.receive(d, h1);
      REQUIRE(lit.pairs == f.engine.pairs());
      for (std::size_t p = 0; p < fast.size(); ++p) {
        CHECK((fast[p] - lit.y[p]).norm() <= 1e-10 * lit.y[p].norm());
        const auto [s, r] = lit.pairs[p];
        const CMat g_lit = fis_regressor(frame, G, f.engine.combiners().at(s, f.art.plan.rx_index(r)), f.art.plan, s, r);
        CHECK((f.engine.regressor(d, p) - g_lit).norm() <= 1e-10 * g_lit.norm());
      }
    }
  }
}

TEST_CASE("reception components: hypotheses, interference and noise") {
  Fixture f(small_config());
  const TwoWayChannelSet G = build_two_way_channels(f.art.scenario);
  RandomStream rng(2);
  SensingDraw d = f.engine.draw(rng);
  const TransmitFrame frame = assemble_transmit(f.art.plan, f.art.precoders, f.power, d.symbols);
  const ReceivedSensingBlock h0 = simulate_reception(frame, G, f.engine.combiners(), f.art.plan, {false, false}, d);
  for (std::size_t p = 0; p < h0.y.size(); ++p) {
    CHECK(h0.desired[p].norm() == 0.0);
    CHECK(h0.interference[p].norm() == 0.0);
    CHECK((h0.y[p] - h0.noise[p]).norm() == 0.0);
  }
  for (auto& n : d.noise) n.setZero();
  const ReceivedSensingBlock quiet = simulate_reception(frame, G, f.engine.combiners(), f.art.plan, {false, false}, d);
  for (const auto& y : quiet.y) CHECK(y.norm() == 0.0);

  Fixture one(small_config(1, 1));
  const TwoWayChannelSet G1 = build_two_way_channels(one.art.scenario);
  const SensingDraw d1 = one.engine.draw(rng);
  const TransmitFrame f1 = assemble_transmit(one.art.plan, one.art.precoders, one.power, d1.symbols);
  const ReceivedSensingBlock b = simulate_reception(f1, G1, one.engine.combiners(), one.art.plan, {true}, d1);
  CHECK(b.interference[0].norm() == 0.0);
  CHECK((b.y[0] - b.desired[0] - b.noise[0]).norm() <= 1e-15 * b.y[0].norm());
}

TEST_CASE("combined noise keeps the per-antenna variance") {
  Fixture f(small_config());
  RandomStream rng(3);
  double power = 0.0;
  const int n = 20000;
  for (int t = 0; t < n; ++t) {
    const SensingDraw d = f.engine.draw(rng);
    power += f.engine.receive(d, {false, false})[0].squaredNorm();
  }
  const double per_sample = power / (static_cast<double>(n) * f.engine.tau());
  CHECK(per_sample == doctest::Approx(f.art.scenario.noise_power()).epsilon(0.02));
}

TEST_CASE("scalar FIS statistic matches the hand formula") {
  const cdouble g(0.7, -0.4), y(1.3, 0.9);
  const double sigma2 = 0.3;
  CMat G(1, 1);
  G << g;
  CVec Y(1);
  Y << y;
  const double expect = std::norm(std::conj(g) * y) / (std::norm(g) + sigma2);
  CHECK(fis_statistic(Y, G, sigma2) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("FIS statistic: zero, non-negativity and phase invariance") {
  RandomStream rng(4);
  for (int t = 0; t < 50; ++t) {
    const CMat g = random_matrix(rng, 5, 3);
    const CVec y = random_matrix(rng, 5, 1);
    CHECK(fis_statistic(CVec::Zero(5), g, 0.5) == 0.0);
    const double T = fis_statistic(y, g, 0.5);
    CHECK(T >= 0.0);
    const cdouble phase = std::polar(1.0, 2.0 * kPi * rng.uniform());
    CHECK(std::abs(fis_statistic(phase * y, g, 0.5) - T) <= 1e-10 * T);
    CHECK(std::abs(fis_statistic(y, phase * g, 0.5) - T) <= 1e-10 * T);
  }
  // A correlated RCS prior enters through its inverse.
  CMat R(2, 2);
  R << 1.0, 0.5, 0.5, 1.0;
  const CMat g = random_matrix(rng, 4, 2);
  const CVec y = random_matrix(rng, 4, 1);
  const CVec a = g.adjoint() * y;
  const CMat C = g.adjoint() * g + 0.2 * R.inverse();
  CHECK(fis_statistic(y, g, R.inverse(), 0.2) == doctest::Approx(a.dot(C.inverse() * a).real()).epsilon(1e-12));
}

TEST_CASE("PIS collapses to FIS when the transmit prior is a point mass") {
  RandomStream rng(5);
  for (int t = 0; t < 20; ++t) {
    const int tau = 6, n = 3;
    PisModel m;
    m.kappa = random_matrix(rng, n, 1);
    m.prior_mean = random_matrix(rng, tau, n);
    m.prior_var = Vec::Zero(n);
    const CVec y = random_matrix(rng, tau, 1);
    const double sigma2 = 0.4;
    const PisResult r = pis_statistic(y, m, CMat::Identity(n, n), sigma2, 10, 1e-12);
    const CMat g = m.prior_mean * m.kappa.asDiagonal();
    const double fis = fis_statistic(y, g, sigma2);
    CHECK(std::abs(r.statistic - fis) <= 1e-6 * fis);
    CHECK(r.converged);
  }
}

TEST_CASE("PIS alternating updates never decrease the MAP objective") {
  Fixture f(small_config());
  RandomStream rng(6);
  for (int t = 0; t < 30; ++t) {
    const SensingDraw d = f.engine.draw(rng);
    const auto y = f.engine.receive(d, {true, true});
    for (std::size_t p = 0; p < y.size(); ++p) {
      const PisModel m = f.engine.pis_model(p);
      const PisResult r = pis_statistic(y[p], m, CMat::Identity(m.kappa.size(), m.kappa.size()),
                                        f.art.scenario.noise_power(), 25, 1e-10);
      for (std::size_t i = 1; i < r.objective.size(); ++i)
        CHECK(r.objective[i] >= r.objective[i - 1] - 1e-9 * std::abs(r.objective[i - 1]));
      CHECK(r.statistic >= -1e-9 * y[p].squaredNorm());
    }
  }
  PisModel m = f.engine.pis_model(0);
  const PisResult zero = pis_statistic(CVec::Zero(f.engine.tau()), m, CMat::Identity(m.kappa.size(), m.kappa.size()),
                                       f.art.scenario.noise_power(), 10, 1e-8);
  CHECK(zero.statistic == doctest::Approx(0.0));
}

TEST_CASE("PIS objective is monotone for complex priors and correlated cross sections") {
  RandomStream rng(61);
  for (int t = 0; t < 100; ++t) {
    const int tau = 3 + static_cast<int>(rng.uniform() * 10);
    const int n = 1 + static_cast<int>(rng.uniform() * 3);
    const CMat a = random_matrix(rng, n, n);
    const CMat rinv = a * a.adjoint() + 0.1 * CMat::Identity(n, n);
    PisModel m;
    m.kappa = rng.complex_normal_vector(n);
    m.prior_mean = 0.3 * random_matrix(rng, tau, n);
    m.prior_var = Vec::Constant(n, 0.2 + rng.uniform());
    const CVec y = rng.complex_normal_vector(tau);
    const PisResult r = pis_statistic(y, m, rinv, 0.5, 20, 0.0);
    for (std::size_t i = 1; i < r.objective.size(); ++i)
      CHECK(r.objective[i] >= r.objective[i - 1] - 1e-9 * std::abs(r.objective[i - 1]));
  }
}

TEST_CASE("desired components reproduce the noiseless single-target echo") {
  Fixture f(small_config(1, 1));
  RandomStream rng(7);
  SensingDraw d = f.engine.draw(rng);
  for (auto& n : d.noise) n.setZero();
  const auto y = f.engine.receive(d, {true});
  const CMat c = f.engine.desired_components(d, 0);
  const PisModel m = f.engine.pis_model(0);
  CVec alpha(c.cols());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) alpha(i) = d.rcs.at(0, 0, static_cast<int>(i));
  CHECK((c * m.kappa.cwiseProduct(alpha) - y[0]).norm() <= 1e-10 * y[0].norm());
}

TEST_CASE("weight normalization examples") {
  const auto w = normalize_weights({4.0, 1.0}, 1.0);
  CHECK(w[0] == doctest::Approx(0.8));
  CHECK(w[1] == doctest::Approx(0.2));
  CHECK(normalize_weights({3.7}, 0.25) == std::vector<double>{1.0});
  for (int n = 1; n <= 12; ++n) {
    const auto u = normalize_weights(std::vector<double>(n, 2.5), 0.7);
    for (double x : u) CHECK(x == 1.0 / n);
  }
  const auto v0 = normalize_weights({0.1, 5.0, 7.0}, 0.0);
  for (double x : v0) CHECK(x == 1.0 / 3.0);
  RandomStream rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> raw(2 + t % 5);
    for (double& x : raw) x = std::exp(4.0 * rng.normal());
    const double v = 2.0 * rng.uniform();
    const auto a = normalize_weights(raw, v);
    double sum = 0.0;
    for (double x : a) {
      CHECK(x > 0.0);
      sum += x;
    }
    CHECK(sum == 1.0);
    std::vector<double> scaled = raw;
    for (double& x : scaled) x *= 64.0;
    CHECK(normalize_weights(scaled, v) == a);
  }
  CHECK_THROWS_AS(normalize_weights({1.0, 0.0}, 1.0), ContractViolation);
}

TEST_CASE("channel-aware weights favor the cleaner RX-AP") {
  Fixture f(small_config());
  const auto uniform = compute_weights(f.art.scenario, f.art.plan, f.engine.combiners(), 0.0);
  for (const auto& ws : uniform)
    for (double x : ws) CHECK(x == 1.0 / ws.size());
  const auto w = compute_weights(f.art.scenario, f.art.plan, f.engine.combiners(), 1.0);
  for (int s = 0; s < f.art.plan.S; ++s) {
    // Oracle: the defining ratio evaluated directly.
    std::vector<double> raw;
    for (int r : f.art.plan.ssa_rx[s]) {
      const CVec& v = f.engine.combiners().at(s, f.art.plan.rx_index(r));
      auto proj = [&](int t) {
        const auto& link = f.art.scenario.rx_link(t, r);
        return link.gain * std::norm(v.dot(array_response(link.azimuth, link.elevation, 3)));
      };
      raw.push_back(proj(s) / proj(1 - s));
    }
    double total = 0.0;
    for (double x : raw) total += x;
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(w[s][i] == doctest::Approx(raw[i] / total).epsilon(1e-12));
  }
  Fixture single(small_config(1, 2));
  const auto lone = compute_weights(single.art.scenario, single.art.plan, single.engine.combiners(), 1.0);
  for (double x : lone[0]) CHECK(x == 0.5);
}

TEST_CASE("aggregation and quantile thresholds") {
  CHECK(aggregate({3.5}, {1.0}) == 3.5);
  CHECK(aggregate({1.0, 2.0, 6.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}) == doctest::Approx(3.0));
  CHECK(aggregate({0.0, 0.0}, {0.4, 0.6}) == 0.0);
  CHECK_THROWS_AS(aggregate({1.0}, {0.5, 0.5}), ContractViolation);

  std::vector<double> x = {5, 1, 4, 2, 3};
  CHECK(quantile_threshold(x, 1.0) == 1.0);
  CHECK(quantile_threshold(x, 0.5) == 3.0);
  std::vector<double> big(1000);
  for (int i = 0; i < 1000; ++i) big[i] = i;
  CHECK(quantile_threshold(big, 0.03) == 969.0);
  CHECK(std::count_if(big.begin(), big.end(), [](double v) { return v >= 969.0; }) == 31);
}

TEST_CASE("calibrated detector holds the false-alarm rate on fresh trials") {
  Fixture f(small_config());
  DetectorConfig cfg;
  cfg.n_calib = 4000;
  cfg.n_trials = 500;
  DetectionRunOptions opt;
  opt.seed = 11;
  const auto rep = run_detection(f.engine, f.art.scenario, cfg, {0.0}, opt)[0];
  for (int s = 0; s < 2; ++s) {
    std::vector<bool> h1 = {true, true};
    h1[s] = false;
    const auto rows = simulate_local_statistics(f.engine, cfg, h1, s, 4000, 999, 1);
    int hits = 0;
    for (const auto& row : rows) {
      std::vector<double> local;
      for (int p : f.engine.ssa_pairs(s)) local.push_back(row[p]);
      hits += aggregate(local, rep.weights[s]) >= rep.ssa[s].threshold;
    }
    const double fa = hits / 4000.0;
    CHECK(fa >= 0.02);
    CHECK(fa <= 0.04);
    CHECK(rep.ssa[s].pd >= fa);
    CHECK(rep.ssa[s].pd <= 1.0);
  }
  CHECK(rep.min_pd == std::min(rep.ssa[0].pd, rep.ssa[1].pd));
}

TEST_CASE("huge cross sections are always detected") {
  SystemConfig c = small_config();
  c.sigma_rcs2 = 1e6;
  Fixture f(c);
  DetectorConfig cfg;
  cfg.n_calib = 500;
  cfg.n_trials = 300;
  const auto rep = run_detection(f.engine, f.art.scenario, cfg, {0.0}, {})[0];
  CHECK(rep.min_pd >= 0.99);
}

TEST_CASE("detection results do not depend on the thread count") {
  Fixture f(small_config());
  DetectorConfig cfg;
  cfg.n_calib = 300;
  cfg.n_trials = 200;
  cfg.mode = DetectorMode::PIS;
  DetectionRunOptions one, four;
  one.seed = four.seed = 5;
  four.threads = 4;
  const auto a = run_detection(f.engine, f.art.scenario, cfg, {0.0, 0.25}, one);
  const auto b = run_detection(f.engine, f.art.scenario, cfg, {0.0, 0.25}, four);
  for (std::size_t w = 0; w < a.size(); ++w)
    for (int s = 0; s < 2; ++s) {
      CHECK(a[w].ssa[s].threshold == b[w].ssa[s].threshold);
      CHECK(a[w].ssa[s].pd == b[w].ssa[s].pd);
    }
}

TEST_CASE("detector config validation and JSON") {
  DetectorConfig c;
  c.mode = DetectorMode::PIS;
  c.v_exponent = 0.25;
  const DetectorConfig back = nlohmann::json(c).get<DetectorConfig>();
  CHECK(back.mode == DetectorMode::PIS);
  CHECK(back.v_exponent == 0.25);
  CHECK(back.p_fa == 0.03);
  CHECK_THROWS_AS(nlohmann::json({{"mode", "MAP"}}).get<DetectorConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json({{"thresh", 1}}).get<DetectorConfig>(), ConfigError);
  DetectorConfig bad;
  bad.p_fa = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = DetectorConfig{};
  bad.v_exponent = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}
