#include "cfisac/validation.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "cfisac/harness.hpp"
#include "cfisac/instances.hpp"

namespace cfisac {

namespace {

SystemConfig small_config() {
  SystemConfig c;
  c.L = 9;
  c.M = 2;
  c.K = 3;
  c.S = 2;
  c.area_side = 300.0;
  c.ssa_positions = {{75, 75, 0}, {225, 225, 0}};
  c.tau_s = 5;
  return c;
}

bool check_quadratic_forms() {
  RandomStream rng(101);
  for (int n = 0; n < 20; ++n) {
    const SmallInstance in = random_small_instance(rng);
    const auto forms = sensing_quadratic_forms(
        build_sensing_vectors(in.scenario, in.plan, in.precoders, in.combiners, in.symbols),
        in.scenario.noise_power());
    const Vec quad = sensing_sinr(forms, in.power);
    for (std::size_t p = 0; p < forms.pairs.size(); ++p) {
      const double direct = sensing_sinr_direct(in.scenario, in.plan, in.precoders, in.combiners, in.symbols,
                                                in.power, forms.pairs[p].first, forms.pairs[p].second);
      if (std::abs(quad(static_cast<Eigen::Index>(p)) - direct) > 1e-10 * std::max(std::abs(direct), 1e-300))
        return false;
    }
  }
  return true;
}

bool check_ccp() {
  const SystemConfig cfg = small_config();
  const SetupArtifacts art = prepare_setup(cfg, 7, 50, 20);
  CcpConfig ccp;
  ccp.c_max = 30;
  ccp.ap_power = cfg.P_tx;
  const PowerVector init = PowerVector::equal_split(art.plan, cfg.P_tx);
  const CcpState st = initial_ccp_state(art.comm, art.forms, init);
  for (int k = 0; k < art.comm.K; ++k) {
    const auto lc = linearize_comm_constraint(art.comm, k, st);
    const double exact = std::pow(art.comm.a[k].dot(init.ue_slice(k)), 2) / st.gamma_c;
    if (std::abs(lc.surrogate(init.values(), st.gamma_c) - exact) > 1e-12 * exact) return false;
  }
  const CcpResult res = ccp_power_allocation(art.comm, art.forms, art.plan, ccp, init);
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    if (res.trace[i].objective > res.trace[i - 1].objective + 1e-6 * std::max(1.0, std::abs(res.trace[i - 1].objective)))
      return false;
  const double true_c = comm_sinr(art.comm, res.state.rho).minCoeff();
  const double true_s = sensing_sinr(art.forms, res.state.rho).minCoeff();
  res.state.rho.check_feasible(art.plan, cfg.P_tx);
  return true_c >= res.state.gamma_c * (1 - 1e-3) && true_s >= res.state.gamma_s * (1 - 1e-3);
}

bool check_weights() {
  const auto w = normalize_weights({4.0, 1.0}, 1.0);
  if (std::abs(w[0] - 0.8) > 1e-15 || std::abs(w[1] - 0.2) > 1e-15) return false;
  const auto u = normalize_weights({3.0, 7.0, 11.0}, 0.0);
  for (double x : u)
    if (x != 1.0 / 3.0) return false;
  if (normalize_weights({5.0}, 2.0)[0] != 1.0) return false;
  const auto a = normalize_weights({0.3, 1.7, 2.2}, 0.25);
  const auto b = normalize_weights({0.3 * 1024, 1.7 * 1024, 2.2 * 1024}, 0.25);
  return a == b;
}

bool check_detectors() {
  RandomStream rng(202);
  const int tau = 4, n = 3;
  CMat g(tau, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.complex_normal();
  const CVec y = rng.complex_normal_vector(tau);
  const double sigma2 = 0.3;
  if (fis_statistic(CVec::Zero(tau), g, sigma2) != 0.0) return false;
  const double t = fis_statistic(y, g, sigma2);
  const double rot = fis_statistic(y * std::polar(1.0, 0.7), g, sigma2);
  if (!(t >= 0.0) || std::abs(t - rot) > 1e-10 * t) return false;
  // Scalar case: |g* y|² / (|g|² + σ²).
  CMat g1(1, 1);
  g1(0, 0) = {0.6, -0.2};
  CVec y1(1);
  y1(0) = {1.1, 0.4};
  const double scalar = std::norm(std::conj(g1(0, 0)) * y1(0)) / (std::norm(g1(0, 0)) + sigma2);
  if (std::abs(fis_statistic(y1, g1, sigma2) - scalar) > 1e-14 * scalar) return false;
  // Collapsed prior.
  PisModel pm;
  pm.kappa = rng.complex_normal_vector(n);
  pm.prior_mean = g * pm.kappa.cwiseInverse().asDiagonal();
  pm.prior_var = Vec::Zero(n);
  const auto pis = pis_statistic(y, pm, CMat::Identity(n, n), sigma2, 10, 1e-4);
  return std::abs(pis.statistic - t) <= 1e-6 * t;
}

bool check_quantiles() {
  const std::vector<double> x = {5, 1, 4, 2, 3, 6};
  return quantile_threshold(x, 1.0) == 1.0 && quantile_threshold(x, 0.5) == 3.0 &&
         quantile_threshold(x, 1e-6) == 6.0;
}

bool check_determinism() {
  const SystemConfig cfg = small_config();
  DetectorConfig det;
  det.n_calib = 200;
  det.n_trials = 100;
  CcpConfig ccp;
  ccp.c_max = 10;
  SetupOptions opt;
  opt.n_mc = 20;
  opt.n_norm = 10;
  const auto a = run_setup(cfg, ccp, det, {0.0}, 99, opt);
  opt.threads = 2;
  const auto b = run_setup(cfg, ccp, det, {0.0}, 99, opt);
  return a[0].min_pd == b[0].min_pd && a[0].ssa_pd == b[0].ssa_pd && a[0].gamma_c == b[0].gamma_c;
}

}  // namespace

bool run_validation(std::ostream& os) {
  const std::pair<const char*, std::function<bool()>> checks[] = {
      {"sensing SINR quadratic form matches direct evaluation", check_quadratic_forms},
      {"CCP tangency, monotone objective, true SINRs above returned targets", check_ccp},
      {"weight normalization properties", check_weights},
      {"FIS/PIS statistic invariants", check_detectors},
      {"threshold quantile extremes", check_quantiles},
      {"setup pipeline deterministic across thread counts", check_determinism},
  };
  bool all = true;
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    std::string why;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      why = std::string(" (") + e.what() + ")";
    }
    os << (ok ? "PASS " : "FAIL ") << name << why << '\n';
    all = all && ok;
  }
  return all;
}

}  // namespace cfisac
