#include "cfisac/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cfisac {

double SystemConfig::noise_power() const {
  if (sigma_n2 > 0.0) return sigma_n2;
  // -174 dBm/Hz thermal floor
  const double dbm = -174.0 + 10.0 * std::log10(bandwidth) + noise_figure_db;
  return db_to_linear(dbm - 30.0);
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (L < 1 || M < 1 || K < 1 || S < 1 || T < 1 || R < 1) fail("counts L, M, K, S, T, R must be >= 1");
  if (L < 2 * S) fail("need L >= 2S so every SSA gets a distinct first RX-AP and TX-AP");
  if (tau_s < 1) fail("tau_s must be >= 1");
  if (!(area_side > 0.0)) fail("area_side must be > 0");
  if (!(P_tx > 0.0) || !(p_ul > 0.0)) fail("powers must be > 0");
  if (!(carrier_freq > 0.0) || !(bandwidth > 0.0)) fail("carrier_freq and bandwidth must be > 0");
  if (sigma_n2 < 0.0) fail("sigma_n2 must be >= 0 (0 derives it from the noise figure)");
  if (!(sigma_rcs2 > 0.0)) fail("sigma_rcs2 must be > 0");
  if (!(beta_th_over_noise >= 0.0)) fail("beta_th_over_noise must be >= 0");
  if (static_cast<int>(ssa_positions.size()) < S) fail("fewer ssa_positions than S");
  if (!(propagation.angular_spread_deg >= 0.0)) fail("angular spread must be >= 0");
}

void to_json(nlohmann::json& j, const PropagationParams& p) {
  j = {{"los_slope", p.los_slope},
       {"los_intercept", p.los_intercept},
       {"los_freq_coeff", p.los_freq_coeff},
       {"nlos_slope", p.nlos_slope},
       {"nlos_intercept", p.nlos_intercept},
       {"nlos_freq_coeff", p.nlos_freq_coeff},
       {"los_prob_d1", p.los_prob_d1},
       {"los_prob_d2", p.los_prob_d2},
       {"k_factor_intercept_db", p.k_factor_intercept_db},
       {"k_factor_slope_db_per_m", p.k_factor_slope_db_per_m},
       {"angular_spread_deg", p.angular_spread_deg}};
}

void from_json(const nlohmann::json& j, PropagationParams& p) {
  PropagationParams d;
  p.los_slope = j.value("los_slope", d.los_slope);
  p.los_intercept = j.value("los_intercept", d.los_intercept);
  p.los_freq_coeff = j.value("los_freq_coeff", d.los_freq_coeff);
  p.nlos_slope = j.value("nlos_slope", d.nlos_slope);
  p.nlos_intercept = j.value("nlos_intercept", d.nlos_intercept);
  p.nlos_freq_coeff = j.value("nlos_freq_coeff", d.nlos_freq_coeff);
  p.los_prob_d1 = j.value("los_prob_d1", d.los_prob_d1);
  p.los_prob_d2 = j.value("los_prob_d2", d.los_prob_d2);
  p.k_factor_intercept_db = j.value("k_factor_intercept_db", d.k_factor_intercept_db);
  p.k_factor_slope_db_per_m = j.value("k_factor_slope_db_per_m", d.k_factor_slope_db_per_m);
  p.angular_spread_deg = j.value("angular_spread_deg", d.angular_spread_deg);
}

void to_json(nlohmann::json& j, const SystemConfig& c) {
  nlohmann::json ssas = nlohmann::json::array();
  for (const auto& p : c.ssa_positions) ssas.push_back({p.x(), p.y()});
  j = {{"L", c.L},
       {"M", c.M},
       {"K", c.K},
       {"S", c.S},
       {"T", c.T},
       {"R", c.R},
       {"area_side", c.area_side},
       {"ap_height", c.ap_height},
       {"ue_height", c.ue_height},
       {"target_height", c.target_height},
       {"ssa_positions", ssas},
       {"P_tx", c.P_tx},
       {"p_ul", c.p_ul},
       {"carrier_freq", c.carrier_freq},
       {"bandwidth", c.bandwidth},
       {"noise_figure_db", c.noise_figure_db},
       {"sigma_n2", c.sigma_n2},
       {"sigma_rcs2", c.sigma_rcs2},
       {"tau_s", c.tau_s},
       {"beta_th_over_noise", c.beta_th_over_noise},
       {"rng_seed", c.rng_seed},
       {"propagation", c.propagation}};
}

void from_json(const nlohmann::json& j, SystemConfig& c) {
  static const char* known[] = {"L", "M", "K", "S", "T", "R", "area_side", "ap_height", "ue_height",
                                "target_height", "ssa_positions", "P_tx", "p_ul", "carrier_freq",
                                "bandwidth", "noise_figure_db", "sigma_n2", "sigma_rcs2",
                                "sigma_rcs2_dbsm", "tau_s", "beta_th_over_noise", "rng_seed",
                                "propagation"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown system config key '" + key + "'");
  }
  SystemConfig d;
  c.L = j.value("L", d.L);
  c.M = j.value("M", d.M);
  c.K = j.value("K", d.K);
  c.S = j.value("S", d.S);
  c.T = j.value("T", d.T);
  c.R = j.value("R", d.R);
  c.area_side = j.value("area_side", d.area_side);
  c.ap_height = j.value("ap_height", d.ap_height);
  c.ue_height = j.value("ue_height", d.ue_height);
  c.target_height = j.value("target_height", d.target_height);
  if (j.contains("ssa_positions")) {
    c.ssa_positions.clear();
    for (const auto& p : j.at("ssa_positions")) {
      if (!p.is_array() || p.size() < 2) throw ConfigError("ssa_positions entries must be [x, y]");
      c.ssa_positions.emplace_back(p[0].get<double>(), p[1].get<double>(), 0.0);
    }
  } else {
    c.ssa_positions = d.ssa_positions;
  }
  c.P_tx = j.value("P_tx", d.P_tx);
  c.p_ul = j.value("p_ul", d.p_ul);
  c.carrier_freq = j.value("carrier_freq", d.carrier_freq);
  c.bandwidth = j.value("bandwidth", d.bandwidth);
  c.noise_figure_db = j.value("noise_figure_db", d.noise_figure_db);
  c.sigma_n2 = j.value("sigma_n2", d.sigma_n2);
  c.sigma_rcs2 = j.value("sigma_rcs2", d.sigma_rcs2);
  if (j.contains("sigma_rcs2_dbsm")) c.sigma_rcs2 = db_to_linear(j.at("sigma_rcs2_dbsm").get<double>());
  c.tau_s = j.value("tau_s", d.tau_s);
  c.beta_th_over_noise = j.value("beta_th_over_noise", d.beta_th_over_noise);
  c.rng_seed = j.value("rng_seed", d.rng_seed);
  c.propagation = j.value("propagation", d.propagation);
}

SystemConfig load_system_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
  SystemConfig c;
  try {
    c = j.get<SystemConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value in '" + path + "': " + e.what());
  }
  c.validate();
  return c;
}

std::string stable_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cfisac
