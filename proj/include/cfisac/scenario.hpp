#pragma once

#include <cstdint>
#include <vector>

#include "cfisac/config.hpp"
#include "cfisac/types.hpp"

namespace cfisac {

/// Large-scale statistics of one AP-UE communication link.
struct CommLinkStats {
  double beta = 0.0;       ///< per-antenna path gain (linear)
  double rician_k = 0.0;   ///< linear K-factor, 0 on NLOS links
  bool los = false;
  double azimuth = 0.0;
  double elevation = 0.0;
  CVec los_mean;           ///< h̄: deterministic LOS component, path loss included
  CMat nlos_corr;          ///< R̃: NLOS spatial correlation, path loss included

  /// trace(R̃) + ||h̄||^2, the gain used for UE association.
  double total_gain() const { return nlos_corr.real().trace() + los_mean.squaredNorm(); }
};

/// One-way LOS link between an AP and an SSA (either direction).
struct SensingLinkStats {
  double gain = 0.0;  ///< free-space one-way gain
  double azimuth = 0.0;
  double elevation = 0.0;
  double distance = 0.0;
};

/// Immutable simulation world: geometry plus every large-scale link statistic.
class Scenario {
 public:
  Scenario(SystemConfig config, std::vector<Point3> aps, std::vector<Point3> ues, std::vector<Point3> ssas,
           std::vector<CommLinkStats> comm, std::vector<SensingLinkStats> sensing,
           std::vector<double> two_way);

  const SystemConfig& config() const { return config_; }
  int num_aps() const { return static_cast<int>(aps_.size()); }
  int num_ues() const { return static_cast<int>(ues_.size()); }
  int num_ssas() const { return static_cast<int>(ssas_.size()); }
  int antennas() const { return config_.M; }
  double noise_power() const { return noise_power_; }

  const std::vector<Point3>& ap_positions() const { return aps_; }
  const std::vector<Point3>& ue_positions() const { return ues_; }
  const std::vector<Point3>& ssa_positions() const { return ssas_; }

  const CommLinkStats& comm_link(int k, int l) const { return comm_[k * num_aps() + l]; }
  /// TX-AP l toward SSA s (β_sl, φ_{s,l}, ϑ_{s,l}).
  const SensingLinkStats& tx_link(int s, int l) const { return sensing_[s * num_aps() + l]; }
  /// SSA s toward RX-AP r (β̄_sr, φ_{s,r}, θ_{s,r}). Same LOS geometry as tx_link.
  const SensingLinkStats& rx_link(int s, int r) const { return sensing_[s * num_aps() + r]; }
  /// β_{s,r,l}: TX-AP l → SSA s → RX-AP r radar-equation gain.
  double two_way_gain(int s, int r, int l) const {
    return two_way_[(static_cast<std::size_t>(s) * num_aps() + r) * num_aps() + l];
  }

  /// K×L matrix of total link gains β_{l,k}.
  Mat ue_gain_table() const;
  /// S×L matrix of one-way SSA→AP gains used to rank APs for sensing.
  Mat ssa_gain_table() const;

 private:
  SystemConfig config_;
  double noise_power_;
  std::vector<Point3> aps_, ues_, ssas_;
  std::vector<CommLinkStats> comm_;
  std::vector<SensingLinkStats> sensing_;
  std::vector<double> two_way_;
};

/// AP grid, random UE drop, fixed SSAs, UMi link statistics.
/// Pure function of (config, ue_drop_seed).
Scenario build_scenario(const SystemConfig& config, std::uint64_t ue_drop_seed);

/// Builds a scenario from explicit UE positions (no randomness except LOS draws).
Scenario build_scenario_with_ues(const SystemConfig& config, const std::vector<Point3>& ues,
                                 std::uint64_t los_seed);

/// ULA response, entry m = exp(j m π sin(azimuth) cos(elevation)).
CVec array_response(double azimuth, double elevation, int M);

/// λ² σ_rcs² / ((4π)³ d_tx² d_rx²).
double two_way_gain(double d_tx, double d_rx, double sigma_rcs2, double carrier_freq);

/// (λ / (4π d))².
double free_space_gain(double distance, double carrier_freq);

double umi_los_probability(double distance_2d, const PropagationParams& p);
double umi_path_loss_db(double distance_3d, double carrier_freq, bool los, const PropagationParams& p);
double rician_k_factor(double distance_3d, const PropagationParams& p);

/// Local-scattering correlation for a ULA with Gaussian azimuth spread (radians),
/// normalized to unit diagonal (trace M).
CMat local_scattering_correlation(int M, double azimuth, double elevation, double spread_rad);

}  // namespace cfisac
