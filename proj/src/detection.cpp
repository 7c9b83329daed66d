#include "cfisac/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "cfisac/parallel.hpp"

namespace cfisac {

void DetectorConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("invalid detector config: " + m); };
  if (!(p_fa > 0.0 && p_fa <= 1.0)) fail("p_fa must be in (0, 1]");
  if (!(v_exponent >= 0.0)) fail("v_exponent must be >= 0");
  if (n_calib < 1) fail("n_calib must be >= 1");
  if (n_trials < 0) fail("n_trials must be >= 0");
  if (pis_max_iters < 1 || !(pis_tol > 0.0)) fail("PIS controls must be positive");
}

SensingDraw draw_sensing(const AssignmentPlan& plan, int M, int tau, double noise_power, RandomStream& rng) {
  SensingDraw d;
  d.symbols = draw_symbols(plan.K, plan.S, tau, rng);
  d.rcs = draw_rcs(plan.S, plan.num_rx(), plan.num_tx(), rng);
  d.noise.reserve(plan.num_rx());
  for (int j = 0; j < plan.num_rx(); ++j) {
    CMat n(M, tau);
    for (int m = 0; m < tau; ++m)
      for (int a = 0; a < M; ++a) n(a, m) = rng.complex_normal(noise_power);
    d.noise.push_back(std::move(n));
  }
  return d;
}

ReceivedSensingBlock simulate_reception(const TransmitFrame& frame, const TwoWayChannelSet& two_way,
                                        const CombinerSet& combiners, const AssignmentPlan& plan,
                                        const std::vector<bool>& h1, const SensingDraw& draw) {
  require(static_cast<int>(h1.size()) == plan.S, "simulate_reception: one hypothesis per SSA required");
  ReceivedSensingBlock out;
  out.h1 = h1;
  const int tau = draw.symbols.tau();
  for (int s = 0; s < plan.S; ++s) {
    for (int r : plan.ssa_rx[s]) {
      const int j = plan.rx_index(r);
      const CVec& v = combiners.at(s, j);
      CVec desired = CVec::Zero(tau), interf = CVec::Zero(tau), noise(tau);
      for (int m = 0; m < tau; ++m) {
        for (int t = 0; t < plan.S; ++t) {
          if (!h1[t]) continue;
          cdouble acc = 0.0;
          for (int i = 0; i < plan.num_tx(); ++i)
            acc += draw.rcs.at(t, j, i) * v.dot(two_way.at(t, r, plan.tx_aps[i]) * frame.x[i].col(m));
          (t == s ? desired : interf)(m) += acc;
        }
        noise(m) = v.dot(draw.noise[j].col(m));
      }
      out.pairs.emplace_back(s, r);
      out.y.push_back(desired + interf + noise);
      out.desired.push_back(std::move(desired));
      out.interference.push_back(std::move(interf));
      out.noise.push_back(std::move(noise));
    }
  }
  return out;
}

CMat fis_regressor(const TransmitFrame& frame, const TwoWayChannelSet& two_way, const CVec& v,
                   const AssignmentPlan& plan, int s, int r) {
  const int n = plan.num_tx();
  const int tau = n > 0 ? static_cast<int>(frame.x[0].cols()) : 0;
  CMat g(tau, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::RowVectorXcd vG = v.adjoint() * two_way.at(s, r, plan.tx_aps[i]);
    g.col(i) = (vG * frame.x[i]).transpose();
  }
  return g;
}

double fis_statistic(const CVec& y, const CMat& g, const CMat& rcs_corr_inverse, double noise_power) {
  require(noise_power > 0.0, "fis_statistic: noise power must be > 0");
  require(g.rows() == y.size(), "fis_statistic: regressor and observation lengths differ");
  const CVec a = g.adjoint() * y;
  CMat C = g.adjoint() * g;
  C += noise_power * rcs_corr_inverse;
  Eigen::LLT<CMat> llt(C);
  require(llt.info() == Eigen::Success, "fis_statistic: C is not positive definite");
  return std::max(0.0, a.dot(llt.solve(a)).real());
}

double fis_statistic(const CVec& y, const CMat& g, double noise_power) {
  return fis_statistic(y, g, CMat::Identity(g.cols(), g.cols()), noise_power);
}

namespace {

/// MAP objective J(α, c) without normalizing constants.
double pis_objective(const CVec& y, const PisModel& pm, const CMat& Rinv, double sigma2, const CVec& alpha,
                     const CMat& c) {
  const CVec u = pm.kappa.cwiseProduct(alpha);
  double j = -(y - c * u).squaredNorm() / sigma2;
  for (Eigen::Index i = 0; i < c.cols(); ++i)
    if (pm.prior_var(i) > 0.0) j -= (c.col(i) - pm.prior_mean.col(i)).squaredNorm() / pm.prior_var(i);
  j -= alpha.dot(Rinv * alpha).real();
  return j;
}

}  // namespace

PisResult pis_statistic(const CVec& y, const PisModel& pm, const CMat& Rinv, double sigma2, int max_iters,
                        double tol) {
  require(sigma2 > 0.0, "pis_statistic: noise power must be > 0");
  const Eigen::Index n = pm.kappa.size(), tau = y.size();
  require(pm.prior_mean.rows() == tau && pm.prior_mean.cols() == n && pm.prior_var.size() == n,
          "pis_statistic: model dimensions do not match the observation");
  const double energy = y.squaredNorm();
  PisResult res;
  CVec alpha = CVec::Ones(n);
  CMat c = pm.prior_mean;
  res.objective.push_back(pis_objective(y, pm, Rinv, sigma2, alpha, c));
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < max_iters; ++it) {
    // c-step: per-symbol linear-Gaussian MAP.
    const CVec u = pm.kappa.cwiseProduct(alpha);
    const CVec du = pm.prior_var.cast<cdouble>().cwiseProduct(u.conjugate());
    const double denom = pm.prior_var.dot(u.cwiseAbs2()) + sigma2;  // Σ d|u|² + σ²
    const CVec innov = y - pm.prior_mean * u;
    c = pm.prior_mean + innov * du.transpose() / denom;
    res.objective.push_back(pis_objective(y, pm, Rinv, sigma2, alpha, c));

    // α-step: FIS-style solve with the c-dependent regressor.
    const CMat g = c * pm.kappa.asDiagonal();
    CMat C = g.adjoint() * g;
    C += sigma2 * Rinv;
    Eigen::LLT<CMat> llt(C);
    require(llt.info() == Eigen::Success, "pis_statistic: alpha system is not positive definite");
    alpha = llt.solve(g.adjoint() * y);
    const double J = pis_objective(y, pm, Rinv, sigma2, alpha, c);
    res.objective.push_back(J);
    res.iterations = it + 1;
    res.statistic = sigma2 * J + energy;
    if (it > 0 && std::abs(res.statistic - prev) <= tol * std::max(std::abs(res.statistic), 1e-300)) {
      res.converged = true;
      break;
    }
    prev = res.statistic;
  }
  return res;
}

std::vector<double> normalize_weights(const std::vector<double>& raw, double v) {
  require(!raw.empty(), "normalize_weights: empty weight set");
  const double top = *std::max_element(raw.begin(), raw.end());
  require(top > 0.0, "normalize_weights: raw weights must be positive");
  std::vector<double> w(raw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    require(raw[i] > 0.0, "normalize_weights: raw weights must be positive");
    total += (w[i] = std::pow(raw[i] / top, v));
  }
  double sum = 0.0;
  for (double& x : w) sum += (x /= total);
  const bool uniform = std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); });
  if (sum != 1.0 && !uniform) {
    // Fold the rounding residue into the last weight so the sum is exactly one.
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) head += w[i];
    w.back() = 1.0 - head;
  }
  return w;
}

std::vector<std::vector<double>> compute_weights(const Scenario& scenario, const AssignmentPlan& plan,
                                                 const CombinerSet& combiners, double v) {
  require(v >= 0.0, "compute_weights: exponent must be >= 0");
  const int M = scenario.antennas();
  std::vector<std::vector<double>> out(plan.S);
  for (int s = 0; s < plan.S; ++s) {
    const auto& rs = plan.ssa_rx[s];
    require(!rs.empty(), "compute_weights: SSA without RX-APs");
    if (plan.S == 1) {
      out[s].assign(rs.size(), 1.0 / static_cast<double>(rs.size()));
      continue;
    }
    std::vector<double> raw;
    for (int r : rs) {
      const CVec& vc = combiners.at(s, plan.rx_index(r));
      auto projected = [&](int t) {
        const auto& link = scenario.rx_link(t, r);
        return link.gain * std::norm(vc.dot(array_response(link.azimuth, link.elevation, M)));
      };
      double den = 0.0;
      for (int t = 0; t < plan.S; ++t)
        if (t != s) den += projected(t);
      raw.push_back(projected(s) / std::max(den, std::numeric_limits<double>::min()));
    }
    out[s] = normalize_weights(raw, v);
  }
  return out;
}

double aggregate(const std::vector<double>& local, const std::vector<double>& weights) {
  require(local.size() == weights.size(), "aggregate: statistic and weight counts differ");
  double t = 0.0;
  for (std::size_t i = 0; i < local.size(); ++i) t += weights[i] * local[i];
  return t;
}

double quantile_threshold(std::vector<double> samples, double p_fa) {
  require(!samples.empty(), "quantile_threshold: no samples");
  require(p_fa > 0.0 && p_fa <= 1.0, "quantile_threshold: p_fa must be in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  long idx = static_cast<long>(std::ceil((1.0 - p_fa) * n - 1e-9)) - 1;
  idx = std::clamp(idx, 0L, static_cast<long>(samples.size()) - 1);
  return samples[static_cast<std::size_t>(idx)];
}

DetectionEngine::DetectionEngine(const Scenario& scenario, const AssignmentPlan& plan, const PrecoderSet& pre,
                                 const PowerVector& power)
    : scenario_(&scenario),
      plan_(plan),
      combiners_(mrc_combiners(scenario, plan)),
      S_(plan.S),
      n_tx_(plan.num_tx()),
      n_rx_(plan.num_rx()),
      M_(scenario.antennas()),
      tau_(scenario.config().tau_s),
      noise_(scenario.noise_power()) {
  require(power.n_tx() == n_tx_ && power.K() == plan.K && power.S() == plan.S,
          "DetectionEngine: power vector does not match the plan");
  const int K = plan.K, w = K + S_;
  tx_proj_.assign(S_, CMat::Zero(n_tx_, w));
  for (int t = 0; t < S_; ++t) {
    for (int i = 0; i < n_tx_; ++i) {
      const auto& link = scenario.tx_link(t, plan.tx_aps[i]);
      const CVec a = array_response(link.azimuth, link.elevation, M_);
      for (int k = 0; k < K; ++k)
        if (power.comm(i, k) != 0.0) tx_proj_[t](i, k) = power.comm(i, k) * (a.transpose() * pre.comm(k, i))(0);
      for (int u = 0; u < S_; ++u)
        if (power.sens(i, u) != 0.0) tx_proj_[t](i, K + u) = power.sens(i, u) * (a.transpose() * pre.sens(u, i))(0);
    }
  }
  ssa_pairs_.resize(S_);
  for (int s = 0; s < S_; ++s) {
    for (int r : plan.ssa_rx[s]) {
      const int j = plan.rx_index(r);
      const CVec& v = combiners_.at(s, j);
      CMat coef(S_, n_tx_);
      for (int t = 0; t < S_; ++t) {
        const auto& rx = scenario.rx_link(t, r);
        const cdouble va = v.dot(array_response(rx.azimuth, rx.elevation, M_));
        for (int i = 0; i < n_tx_; ++i) coef(t, i) = std::sqrt(scenario.two_way_gain(t, r, plan.tx_aps[i])) * va;
      }
      Vec sb(n_tx_);
      for (int i = 0; i < n_tx_; ++i) sb(i) = std::sqrt(scenario.two_way_gain(s, r, plan.tx_aps[i]));
      const auto& own = scenario.rx_link(s, r);
      ssa_pairs_[s].push_back(static_cast<int>(pairs_.size()));
      pairs_.emplace_back(s, r);
      pair_rx_idx_.push_back(j);
      coef_.push_back(std::move(coef));
      sqrt_beta_.push_back(std::move(sb));
      kappa_.push_back(v.dot(array_response(own.azimuth, own.elevation, M_)));
    }
  }
}

SensingDraw DetectionEngine::draw(RandomStream& rng) const { return draw_sensing(plan_, M_, tau_, noise_, rng); }

CMat DetectionEngine::projections(const SymbolBlock& sym, int t) const {
  CMat stacked(sym.s_comm.rows() + sym.r_sens.rows(), sym.tau());
  stacked << sym.s_comm, sym.r_sens;
  return tx_proj_[t] * stacked;
}

std::vector<CVec> DetectionEngine::receive(const SensingDraw& d, const std::vector<bool>& h1, int only_ssa) const {
  require(static_cast<int>(h1.size()) == S_, "DetectionEngine::receive: one hypothesis per SSA required");
  CMat stacked(d.symbols.s_comm.rows() + d.symbols.r_sens.rows(), d.symbols.tau());
  stacked << d.symbols.s_comm, d.symbols.r_sens;
  std::vector<CMat> Z(S_);
  for (int t = 0; t < S_; ++t)
    if (h1[t]) Z[t] = tx_proj_[t] * stacked;
  std::vector<CVec> y(pairs_.size());
  CVec mix(n_tx_);
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const int s = pairs_[p].first;
    if (only_ssa >= 0 && s != only_ssa) continue;
    const int j = pair_rx_idx_[p];
    CVec acc = (combiners_.at(s, j).adjoint() * d.noise[j]).transpose();
    for (int t = 0; t < S_; ++t) {
      if (!h1[t]) continue;
      for (int i = 0; i < n_tx_; ++i) mix(i) = coef_[p](t, i) * d.rcs.at(t, j, i);
      acc.noalias() += Z[t].transpose() * mix;
    }
    y[p] = std::move(acc);
  }
  return y;
}

CMat DetectionEngine::desired_components(const SensingDraw& d, std::size_t p) const {
  const int s = pairs_[p].first;
  CMat c = projections(d.symbols, s).transpose();  // τ × n_tx
  return c * sqrt_beta_[p].asDiagonal();
}

CMat DetectionEngine::regressor(const SensingDraw& d, std::size_t p) const {
  const int s = pairs_[p].first;
  CMat g = projections(d.symbols, s).transpose();
  return g * coef_[p].row(s).transpose().asDiagonal();
}

PisModel DetectionEngine::pis_model(std::size_t p) const {
  const int s = pairs_[p].first;
  PisModel m;
  m.kappa = CVec::Constant(n_tx_, kappa_[p]);
  m.prior_mean = CMat::Zero(tau_, n_tx_);
  m.prior_var = tx_proj_[s].rowwise().squaredNorm().cwiseProduct(sqrt_beta_[p].cwiseAbs2());
  return m;
}

std::vector<double> DetectionEngine::local_statistics(const SensingDraw& d, const std::vector<bool>& h1,
                                                      DetectorMode mode, const DetectorConfig& cfg, int only_ssa,
                                                      int* pis_nonconverged) const {
  const auto y = receive(d, h1, only_ssa);
  std::vector<double> out(pairs_.size(), std::numeric_limits<double>::quiet_NaN());
  const CMat eye = CMat::Identity(n_tx_, n_tx_);
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    if (only_ssa >= 0 && pairs_[p].first != only_ssa) continue;
    if (mode == DetectorMode::FIS) {
      out[p] = fis_statistic(y[p], regressor(d, p), eye, noise_);
    } else {
      const PisResult r = pis_statistic(y[p], pis_model(p), eye, noise_, cfg.pis_max_iters, cfg.pis_tol);
      if (!r.converged && pis_nonconverged) ++*pis_nonconverged;
      out[p] = r.statistic;
    }
  }
  return out;
}

std::vector<std::vector<double>> simulate_local_statistics(const DetectionEngine& engine, const DetectorConfig& cfg,
                                                           const std::vector<bool>& h1, int only_ssa, int n,
                                                           std::uint64_t seed, int threads, int* pis_nonconverged) {
  std::vector<std::vector<double>> rows(n);
  std::vector<int> nonconv(n, 0);
  parallel_for(n, threads, [&](int t) {
    RandomStream rng(derive_seed(seed, "trial", static_cast<std::uint64_t>(t)));
    const SensingDraw d = engine.draw(rng);
    rows[t] = engine.local_statistics(d, h1, cfg.mode, cfg, only_ssa, &nonconv[t]);
  });
  if (pis_nonconverged)
    for (int c : nonconv) *pis_nonconverged += c;
  return rows;
}

std::vector<DetectionReport> run_detection(const DetectionEngine& engine, const Scenario& scenario,
                                           const DetectorConfig& cfg, const std::vector<double>& v_exponents,
                                           const DetectionRunOptions& opt) {
  cfg.validate();
  const AssignmentPlan& plan = engine.plan();
  const int S = plan.S;
  std::vector<DetectionReport> reports(v_exponents.size());
  for (std::size_t w = 0; w < v_exponents.size(); ++w) {
    reports[w].v_exponent = v_exponents[w];
    reports[w].weights = compute_weights(scenario, plan, engine.combiners(), v_exponents[w]);
    reports[w].ssa.resize(S);
    reports[w].n_calib = cfg.n_calib;
    reports[w].n_trials = cfg.n_trials;
  }
  auto fused = [&](const std::vector<double>& row, int s, const std::vector<double>& weights) {
    std::vector<double> local;
    for (int p : engine.ssa_pairs(s)) local.push_back(row[p]);
    return aggregate(local, weights);
  };
  if (opt.trial_log) opt.trial_log->precision(17);

  int nonconv = 0;
  for (int s = 0; s < S; ++s) {
    std::vector<bool> h1(S, true);
    h1[s] = false;
    const auto rows = simulate_local_statistics(engine, cfg, h1, s, cfg.n_calib,
                                                derive_seed(opt.seed, "calibration", s), opt.threads, &nonconv);
    for (auto& rep : reports) {
      std::vector<double> samples(rows.size());
      for (std::size_t t = 0; t < rows.size(); ++t) samples[t] = fused(rows[t], s, rep.weights[s]);
      rep.ssa[s].threshold = quantile_threshold(samples, cfg.p_fa);
      const auto hits = std::count_if(samples.begin(), samples.end(),
                                      [&](double x) { return x >= rep.ssa[s].threshold; });
      rep.ssa[s].empirical_pfa = static_cast<double>(hits) / static_cast<double>(samples.size());
      if (opt.trial_log)
        for (std::size_t t = 0; t < samples.size(); ++t)
          *opt.trial_log << rep.v_exponent << ',' << s << ',' << t << ',' << samples[t] << ",H0\n";
    }
  }

  if (cfg.n_trials > 0) {
    const std::vector<bool> all(S, true);
    const auto rows = simulate_local_statistics(engine, cfg, all, -1, cfg.n_trials,
                                                derive_seed(opt.seed, "detection"), opt.threads, &nonconv);
    for (auto& rep : reports) {
      for (int s = 0; s < S; ++s) {
        long hits = 0;
        for (std::size_t t = 0; t < rows.size(); ++t) {
          const double ts = fused(rows[t], s, rep.weights[s]);
          hits += ts >= rep.ssa[s].threshold;
          if (opt.trial_log) *opt.trial_log << rep.v_exponent << ',' << s << ',' << t << ',' << ts << ",H1\n";
        }
        rep.ssa[s].pd = static_cast<double>(hits) / cfg.n_trials;
      }
      rep.min_pd = 1.0;
      for (const auto& x : rep.ssa) rep.min_pd = std::min(rep.min_pd, x.pd);
    }
  } else {
    for (auto& rep : reports) {
      for (auto& x : rep.ssa) x.pd = std::numeric_limits<double>::quiet_NaN();
      rep.min_pd = std::numeric_limits<double>::quiet_NaN();
    }
  }
  for (auto& rep : reports) rep.pis_nonconverged = nonconv;
  return reports;
}

void to_json(nlohmann::json& j, const DetectorConfig& c) {
  j = {{"mode", c.mode == DetectorMode::FIS ? "FIS" : "PIS"},
       {"v_exponent", c.v_exponent},
       {"p_fa", c.p_fa},
       {"n_calib", c.n_calib},
       {"n_trials", c.n_trials},
       {"pis_max_iters", c.pis_max_iters},
       {"pis_tol", c.pis_tol}};
}

void from_json(const nlohmann::json& j, DetectorConfig& c) {
  static const char* known[] = {"mode", "v_exponent", "p_fa", "n_calib", "n_trials", "pis_max_iters", "pis_tol"};
  for (const auto& [key, _] : j.items())
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; }))
      throw ConfigError("unknown detector key '" + key + "'");
  DetectorConfig d;
  const std::string mode = j.value("mode", std::string("FIS"));
  if (mode == "FIS") c.mode = DetectorMode::FIS;
  else if (mode == "PIS") c.mode = DetectorMode::PIS;
  else throw ConfigError("detector mode must be FIS or PIS, got '" + mode + "'");
  c.v_exponent = j.value("v_exponent", d.v_exponent);
  c.p_fa = j.value("p_fa", d.p_fa);
  c.n_calib = j.value("n_calib", d.n_calib);
  c.n_trials = j.value("n_trials", d.n_trials);
  c.pis_max_iters = j.value("pis_max_iters", d.pis_max_iters);
  c.pis_tol = j.value("pis_tol", d.pis_tol);
}

void to_json(nlohmann::json& j, const DetectionReport& r) {
  nlohmann::json ssa = nlohmann::json::array();
  for (const auto& s : r.ssa) ssa.push_back({{"threshold", s.threshold}, {"empirical_pfa", s.empirical_pfa}, {"pd", s.pd}});
  j = {{"v_exponent", r.v_exponent}, {"ssa", ssa},           {"weights", r.weights},
       {"min_pd", r.min_pd},         {"n_calib", r.n_calib}, {"n_trials", r.n_trials},
       {"pis_nonconverged", r.pis_nonconverged}};
}

}  // namespace cfisac
