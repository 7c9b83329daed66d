#include "cfisac/scenario.hpp"

#include <bit>
#include <cmath>

#include "cfisac/rng.hpp"

namespace cfisac {

namespace {

struct Geometry {
  double d2 = 0.0;
  double d3 = 0.0;
  double azimuth = 0.0;
  double elevation = 0.0;
};

// Angles are measured at `from`. The ULA axis is y, so broadside is +x.
Geometry geometry(const Point3& from, const Point3& to) {
  const Point3 d = to - from;
  Geometry g;
  g.d2 = std::hypot(d.x(), d.y());
  g.d3 = d.norm();
  g.azimuth = std::atan2(d.y(), d.x());
  g.elevation = std::atan2(d.z(), g.d2);
  return g;
}

std::vector<Point3> ap_grid(const SystemConfig& c) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(c.L))));
  if (side * side != c.L) throw ConfigError("grid layout needs a square AP count, got L=" + std::to_string(c.L));
  if (!(c.area_side > 0.0)) throw ConfigError("area_side must be > 0");
  const double spacing = c.area_side / side;
  std::vector<Point3> aps;
  aps.reserve(c.L);
  for (int iy = 0; iy < side; ++iy)
    for (int ix = 0; ix < side; ++ix)
      aps.emplace_back((ix + 0.5) * spacing, (iy + 0.5) * spacing, c.ap_height);
  return aps;
}

}  // namespace

Scenario::Scenario(SystemConfig config, std::vector<Point3> aps, std::vector<Point3> ues,
                   std::vector<Point3> ssas, std::vector<CommLinkStats> comm,
                   std::vector<SensingLinkStats> sensing, std::vector<double> two_way)
    : config_(std::move(config)),
      noise_power_(config_.noise_power()),
      aps_(std::move(aps)),
      ues_(std::move(ues)),
      ssas_(std::move(ssas)),
      comm_(std::move(comm)),
      sensing_(std::move(sensing)),
      two_way_(std::move(two_way)) {}

Mat Scenario::ue_gain_table() const {
  Mat g(num_ues(), num_aps());
  for (int k = 0; k < num_ues(); ++k)
    for (int l = 0; l < num_aps(); ++l) g(k, l) = comm_link(k, l).total_gain();
  return g;
}

Mat Scenario::ssa_gain_table() const {
  Mat g(num_ssas(), num_aps());
  for (int s = 0; s < num_ssas(); ++s)
    for (int l = 0; l < num_aps(); ++l) g(s, l) = rx_link(s, l).gain;
  return g;
}

CVec array_response(double azimuth, double elevation, int M) {
  CVec a(M);
  const double phase = kPi * std::sin(azimuth) * std::cos(elevation);
  for (int m = 0; m < M; ++m) a(m) = std::polar(1.0, m * phase);
  return a;
}

double free_space_gain(double distance, double carrier_freq) {
  require(distance > 0.0, "free_space_gain: distance must be > 0");
  const double lambda = kSpeedOfLight / carrier_freq;
  const double x = lambda / (4.0 * kPi * distance);
  return x * x;
}

double two_way_gain(double d_tx, double d_rx, double sigma_rcs2, double carrier_freq) {
  require(d_tx > 0.0 && d_rx > 0.0, "two_way_gain: distances must be > 0");
  const double lambda = kSpeedOfLight / carrier_freq;
  const double four_pi_cubed = std::pow(4.0 * kPi, 3);
  return lambda * lambda * sigma_rcs2 / (four_pi_cubed * d_tx * d_tx * d_rx * d_rx);
}

double umi_los_probability(double distance_2d, const PropagationParams& p) {
  const double d = std::max(distance_2d, 1e-9);
  const double e = std::exp(-d / p.los_prob_d2);
  return std::min(p.los_prob_d1 / d, 1.0) * (1.0 - e) + e;
}

double umi_path_loss_db(double distance_3d, double carrier_freq, bool los, const PropagationParams& p) {
  const double f_ghz = carrier_freq / 1e9;
  if (los) return p.los_slope * std::log10(distance_3d) + p.los_intercept + p.los_freq_coeff * std::log10(f_ghz);
  return p.nlos_slope * std::log10(distance_3d) + p.nlos_intercept + p.nlos_freq_coeff * std::log10(f_ghz);
}

double rician_k_factor(double distance_3d, const PropagationParams& p) {
  return db_to_linear(p.k_factor_intercept_db - p.k_factor_slope_db_per_m * distance_3d);
}

CMat local_scattering_correlation(int M, double azimuth, double elevation, double spread_rad) {
  CMat R(M, M);
  const double ce = std::cos(elevation);
  if (spread_rad <= 0.0) {
    const CVec a = array_response(azimuth, elevation, M);
    return a * a.adjoint();
  }
  // Simpson rule over ±6 standard deviations of the Gaussian angular density.
  constexpr int kIntervals = 600;
  const double lo = -6.0 * spread_rad;
  const double h = 12.0 * spread_rad / kIntervals;
  std::vector<cdouble> first_col(M, cdouble(0.0));
  double mass = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double delta = lo + i * h;
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double pdf = std::exp(-0.5 * delta * delta / (spread_rad * spread_rad));
    mass += w * pdf;
    const double phase = kPi * std::sin(azimuth + delta) * ce;
    for (int d = 0; d < M; ++d) first_col[d] += w * pdf * std::polar(1.0, d * phase);
  }
  for (int d = 0; d < M; ++d) first_col[d] /= mass;
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < M; ++n) R(m, n) = m >= n ? first_col[m - n] : std::conj(first_col[n - m]);
  return R;
}

Scenario build_scenario_with_ues(const SystemConfig& config, const std::vector<Point3>& ues,
                                 std::uint64_t los_seed) {
  config.validate();
  std::vector<Point3> aps = ap_grid(config);
  std::vector<Point3> ssas;
  for (int s = 0; s < config.S; ++s)
    ssas.emplace_back(config.ssa_positions[s].x(), config.ssa_positions[s].y(), config.target_height);

  const int L = config.L, K = static_cast<int>(ues.size()), S = config.S, M = config.M;
  const auto& prop = config.propagation;
  const double spread = prop.angular_spread_deg * kPi / 180.0;

  // Each link owns its LOS coin so identical positions produce identical rows.
  std::vector<CommLinkStats> comm(static_cast<std::size_t>(K) * L);
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      const Geometry g = geometry(aps[l], ues[k]);
      // Position-keyed coin: the same UE location sees the same LOS state.
      const std::uint64_t pos_key =
          std::bit_cast<std::uint64_t>(ues[k].x()) * 0x9e3779b97f4a7c15ULL ^ std::bit_cast<std::uint64_t>(ues[k].y());
      RandomStream link_coin(derive_seed(derive_seed(los_seed, "los", static_cast<std::uint64_t>(l)), "ue", pos_key));
      CommLinkStats& st = comm[k * L + l];
      st.los = link_coin.uniform() < umi_los_probability(g.d2, prop);
      st.beta = db_to_linear(-umi_path_loss_db(g.d3, config.carrier_freq, st.los, prop));
      st.rician_k = st.los ? rician_k_factor(g.d3, prop) : 0.0;
      st.azimuth = g.azimuth;
      st.elevation = g.elevation;
      const double los_share = st.rician_k / (st.rician_k + 1.0);
      const double nlos_share = 1.0 / (st.rician_k + 1.0);
      st.los_mean = std::sqrt(st.beta * los_share) * array_response(g.azimuth, g.elevation, M);
      st.nlos_corr = (st.beta * nlos_share) * local_scattering_correlation(M, g.azimuth, g.elevation, spread);
    }
  }

  std::vector<SensingLinkStats> sensing(static_cast<std::size_t>(S) * L);
  for (int s = 0; s < S; ++s) {
    for (int l = 0; l < L; ++l) {
      const Geometry g = geometry(aps[l], ssas[s]);
      SensingLinkStats& st = sensing[s * L + l];
      st.distance = g.d3;
      st.gain = free_space_gain(g.d3, config.carrier_freq);
      st.azimuth = g.azimuth;
      st.elevation = g.elevation;
    }
  }

  std::vector<double> two_way(static_cast<std::size_t>(S) * L * L);
  for (int s = 0; s < S; ++s)
    for (int r = 0; r < L; ++r)
      for (int l = 0; l < L; ++l)
        two_way[(static_cast<std::size_t>(s) * L + r) * L + l] =
            two_way_gain(sensing[s * L + l].distance, sensing[s * L + r].distance, config.sigma_rcs2,
                         config.carrier_freq);

  return Scenario(config, std::move(aps), ues, std::move(ssas), std::move(comm), std::move(sensing),
                  std::move(two_way));
}

Scenario build_scenario(const SystemConfig& config, std::uint64_t ue_drop_seed) {
  config.validate();
  RandomStream drop(derive_seed(ue_drop_seed, "ue-drop"));
  std::vector<Point3> ues;
  ues.reserve(config.K);
  for (int k = 0; k < config.K; ++k) {
    const double x = drop.uniform() * config.area_side;
    const double y = drop.uniform() * config.area_side;
    ues.emplace_back(x, y, config.ue_height);
  }
  return build_scenario_with_ues(config, ues, derive_seed(ue_drop_seed, "los-state"));
}

}  // namespace cfisac
