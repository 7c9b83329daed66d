#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfisac/beamforming.hpp"
#include "cfisac/channel.hpp"

namespace cfisac {

enum class DetectorMode { FIS, PIS };

struct DetectorConfig {
  DetectorMode mode = DetectorMode::FIS;
  double v_exponent = 0.0;
  double p_fa = 0.03;
  int n_calib = 10000;   ///< H₀ trials per SSA
  int n_trials = 2000;   ///< all-H₁ trials
  int pis_max_iters = 10;
  double pis_tol = 1e-4;

  void validate() const;
};

/// Per-trial randomness of the sensing block.
struct SensingDraw {
  SymbolBlock symbols;
  RcsRealization rcs;
  std::vector<CMat> noise;  ///< per RX-AP position, M × τ, entries CN(0, σ²)
};

SensingDraw draw_sensing(const AssignmentPlan& plan, int M, int tau, double noise_power, RandomStream& rng);

/// y_{s,r}[m] for every pair (s, r ∈ R_s), optionally split into components.
struct ReceivedSensingBlock {
  std::vector<std::pair<int, int>> pairs;  ///< (s, global RX-AP)
  std::vector<bool> h1;                    ///< hypothesis per SSA
  std::vector<CVec> y;                     ///< per pair, length τ
  std::vector<CVec> desired, interference, noise;
};

/// Literal evaluation with the full two-way matrices.
ReceivedSensingBlock simulate_reception(const TransmitFrame& frame, const TwoWayChannelSet& two_way,
                                        const CombinerSet& combiners, const AssignmentPlan& plan,
                                        const std::vector<bool>& h1, const SensingDraw& draw);

/// Rows m of the FIS regressor: g(m, i) = v^H G_{s,r,l_i} x_i[m].
CMat fis_regressor(const TransmitFrame& frame, const TwoWayChannelSet& two_way, const CVec& combiner,
                   const AssignmentPlan& plan, int s, int r);

/// T = a^H C⁻¹ a, a = Σ_m conj(g_m) y[m], C = Σ_m conj(g_m) g_m^T + σ² R_rcs⁻¹.
double fis_statistic(const CVec& y, const CMat& g, const CMat& rcs_corr_inverse, double noise_power);
/// Identity RCS correlation.
double fis_statistic(const CVec& y, const CMat& g, double noise_power);

/// Observation model for the partially informed receiver:
///   y[m] = Σ_i κ_i α_i c_i[m] + n[m],  c[m] ~ CN(μ[m], diag(prior_var)).
struct PisModel {
  CVec kappa;       ///< n_tx
  CMat prior_mean;  ///< τ × n_tx
  Vec prior_var;    ///< n_tx; zero entries pin c_i to its mean
};

struct PisResult {
  double statistic = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective;  ///< MAP objective after each full alternating update
};

/// Alternating MAP over (α, c) starting from α = 1. The statistic is
/// σ²·(max J + Σ|y|²/σ²), which equals the FIS statistic when the prior
/// collapses onto the true c.
PisResult pis_statistic(const CVec& y, const PisModel& model, const CMat& rcs_corr_inverse, double noise_power,
                        int max_iters, double tol);

/// Normalized weights per SSA, indexed like plan.ssa_rx.
std::vector<std::vector<double>> compute_weights(const Scenario& scenario, const AssignmentPlan& plan,
                                                 const CombinerSet& combiners, double v_exponent);
/// Normalizes raw SIR-like values w̄ with exponent v.
std::vector<double> normalize_weights(const std::vector<double>& raw, double v_exponent);

/// T_s = Σ_r w_{s,r} T_{s,r}.
double aggregate(const std::vector<double>& local, const std::vector<double>& weights);

/// Empirical (1 − p_fa) quantile: sorted sample at index ceil((1 − p_fa)·n) − 1.
double quantile_threshold(std::vector<double> samples, double p_fa);

/// Per-setup frozen state for fast Monte Carlo. Uses the rank-one structure
/// of the two-way matrices: y = Σ_t Σ_i coef·α·(a_tx^T x_i[m]) + v^H n.
class DetectionEngine {
 public:
  DetectionEngine(const Scenario& scenario, const AssignmentPlan& plan, const PrecoderSet& precoders,
                  const PowerVector& power);

  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  /// Pair indices belonging to SSA s.
  const std::vector<int>& ssa_pairs(int s) const { return ssa_pairs_[s]; }
  int tau() const { return tau_; }
  const CombinerSet& combiners() const { return combiners_; }
  const AssignmentPlan& plan() const { return plan_; }

  /// y for the pairs of `only_ssa` (or all pairs when -1); others are left empty.
  std::vector<CVec> receive(const SensingDraw& draw, const std::vector<bool>& h1, int only_ssa = -1) const;
  /// FIS regressor from the symbols of the draw.
  CMat regressor(const SensingDraw& draw, std::size_t pair) const;
  /// PIS observation model for a pair; prior mean zero.
  PisModel pis_model(std::size_t pair) const;
  /// Regressor coefficient c_i[m] = √β a_tx^T x_i[m] of the desired target.
  CMat desired_components(const SensingDraw& draw, std::size_t pair) const;

  /// Local statistics for the pairs of `only_ssa` (or all).
  std::vector<double> local_statistics(const SensingDraw& draw, const std::vector<bool>& h1, DetectorMode mode,
                                       const DetectorConfig& cfg, int only_ssa, int* pis_nonconverged) const;

  SensingDraw draw(RandomStream& rng) const;

 private:
  CMat projections(const SymbolBlock& symbols, int t) const;  ///< n_tx × τ: a_tx(t,l_i)^T x_i[m]

  const Scenario* scenario_;
  AssignmentPlan plan_;
  CombinerSet combiners_;
  int S_, n_tx_, n_rx_, M_, tau_;
  double noise_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::vector<int>> ssa_pairs_;
  std::vector<int> pair_rx_idx_;
  std::vector<CMat> tx_proj_;   ///< per t: n_tx × (K+S), √p a_tx^T w
  std::vector<CMat> coef_;      ///< per pair: S × n_tx, √β_{t,r,l} v^H a_rx(t,r)
  std::vector<Vec> sqrt_beta_;  ///< per pair: √β_{s,r,l} of the pair's own target
  std::vector<cdouble> kappa_;  ///< per pair: v^H a_rx(s,r)
};

struct SsaDetection {
  double threshold = 0.0;
  double empirical_pfa = 0.0;  ///< on the calibration samples
  double pd = 0.0;
};

struct DetectionReport {
  double v_exponent = 0.0;
  std::vector<SsaDetection> ssa;
  std::vector<std::vector<double>> weights;
  double min_pd = 0.0;
  int n_calib = 0, n_trials = 0;
  int pis_nonconverged = 0;
};

struct DetectionRunOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  std::ostream* trial_log = nullptr;  ///< CSV rows: v_exponent,ssa,trial,T_s,hypothesis
};

/// Calibrates thresholds and estimates detection probabilities for every
/// weighting exponent on the same calibration and detection trials.
std::vector<DetectionReport> run_detection(const DetectionEngine& engine, const Scenario& scenario,
                                           const DetectorConfig& cfg, const std::vector<double>& v_exponents,
                                           const DetectionRunOptions& options);

/// Local statistics of `n` independent trials under hypothesis `h1`, one row
/// per trial indexed like engine.pairs() (NaN for pairs not evaluated).
/// Trial t draws from derive_seed(seed, "trial", t), so results do not depend
/// on the thread count.
std::vector<std::vector<double>> simulate_local_statistics(const DetectionEngine& engine, const DetectorConfig& cfg,
                                                           const std::vector<bool>& h1, int only_ssa, int n,
                                                           std::uint64_t seed, int threads,
                                                           int* pis_nonconverged = nullptr);

void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);
void to_json(nlohmann::json& j, const DetectionReport& r);

}  // namespace cfisac
