#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfisac/types.hpp"

namespace cfisac {

/// Urban-microcell propagation constants. Path loss in dB is
/// `slope * log10(d_m) + intercept + freq_coeff * log10(f_GHz)`.
struct PropagationParams {
  double los_slope = 22.0;
  double los_intercept = 28.0;
  double los_freq_coeff = 20.0;
  double nlos_slope = 36.7;
  double nlos_intercept = 22.7;
  double nlos_freq_coeff = 26.0;
  double los_prob_d1 = 18.0;  ///< meters
  double los_prob_d2 = 36.0;  ///< meters
  double k_factor_intercept_db = 13.0;
  double k_factor_slope_db_per_m = 0.03;
  double angular_spread_deg = 15.0;
};

struct SystemConfig {
  int L = 25;  ///< APs
  int M = 4;   ///< antennas per AP
  int K = 8;   ///< UEs
  int S = 4;   ///< sensing service areas
  int T = 1;   ///< TX-APs per SSA
  int R = 1;   ///< RX-APs per SSA

  double area_side = 500.0;       ///< m
  double ap_height = 10.0;        ///< m
  double ue_height = 1.5;         ///< m
  double target_height = 1.5;     ///< m
  std::vector<Point3> ssa_positions = {{125, 125, 0}, {125, 375, 0}, {375, 125, 0}, {375, 375, 0}};

  double P_tx = 1.0;              ///< W per AP
  double p_ul = 0.2;              ///< W pilot power
  double carrier_freq = 2e9;      ///< Hz
  double bandwidth = 20e6;        ///< Hz
  double noise_figure_db = 7.0;
  double sigma_n2 = 0.0;          ///< W; 0 means derive from bandwidth and noise figure
  double sigma_rcs2 = 0.31622776601683794;  ///< m^2 (-5 dBsm)
  int tau_s = 20;
  double beta_th_over_noise = 80000.0;
  std::uint64_t rng_seed = 1;

  PropagationParams propagation;

  /// Noise variance in watts, derived from thermal noise when `sigma_n2` is 0.
  double noise_power() const;
  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  double beta_th() const { return beta_th_over_noise * noise_power(); }

  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

void to_json(nlohmann::json& j, const PropagationParams& p);
void from_json(const nlohmann::json& j, PropagationParams& p);
void to_json(nlohmann::json& j, const SystemConfig& c);
void from_json(const nlohmann::json& j, SystemConfig& c);

SystemConfig load_system_config(const std::string& path);

/// 64-bit FNV-1a hash of a string, rendered as 16 hex digits.
std::string stable_hash(const std::string& text);

}  // namespace cfisac
