#pragma once

#include <memory>
#include <vector>

#include "cfisac/rng.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

/// One small-scale realization of every AP-UE channel.
struct CommChannelSet {
  int K = 0, L = 0;
  std::vector<CVec> h;       ///< h_kl = e^{jψ} h̄ + h̃, index k*L + l
  std::vector<double> psi;   ///< LOS phase ψ_kl in [0, 2π)

  const CVec& at(int k, int l) const { return h[k * L + l]; }
};

/// LMMSE estimates plus the (deterministic) error correlation per link.
struct ChannelEstimateSet {
  int K = 0, L = 0;
  std::vector<CVec> h_hat;          ///< ĥ_kl
  std::shared_ptr<const std::vector<CMat>> err_corr;  ///< Z_kl, shared with the generating model

  const CVec& at(int k, int l) const { return h_hat[k * L + l]; }
  const CMat& error(int k, int l) const { return (*err_corr)[k * L + l]; }
};

/// Precomputes per-link factorizations and estimator matrices so repeated
/// draws are cheap. Pilots are orthogonal with length tau_p = K.
class CommChannelModel {
 public:
  explicit CommChannelModel(const Scenario& scenario);

  CommChannelSet draw(RandomStream& rng) const;

  /// Phase-unaware LMMSE from the despread pilot observation
  /// y = h + n, n ~ CN(0, σ²/(p_ul τ_p) I).
  ChannelEstimateSet estimate(const CommChannelSet& channels, RandomStream& rng) const;

  /// R_kl = h̄h̄^H + R̃_kl.
  const CMat& prior_corr(int k, int l) const { return prior_[k * L_ + l]; }
  const CMat& error_corr(int k, int l) const { return (*error_)[k * L_ + l]; }
  double pilot_noise() const { return pilot_noise_; }
  int K() const { return K_; }
  int L() const { return L_; }

 private:
  const Scenario* scenario_;
  int K_, L_, M_;
  double pilot_noise_;
  std::vector<CMat> nlos_sqrt_;   ///< R̃^{1/2}
  std::vector<CMat> prior_;       ///< R
  std::vector<CMat> estimator_;   ///< R (R + νI)^{-1}
  std::shared_ptr<std::vector<CMat>> error_;  ///< Z
};

CommChannelSet draw_comm_channels(const Scenario& scenario, RandomStream& rng);

/// Hermitian PSD square root by eigen-decomposition, negative eigenvalues
/// clipped to zero. Throws ContractViolation when the matrix is clearly
/// indefinite (min eigenvalue below -1e-9 of the largest).
CMat psd_sqrt(const CMat& A);

/// Rank-one two-way matrices G_{s,r,l} = √β a_rx a_tx^T for all s and all AP pairs.
struct TwoWayChannelSet {
  int S = 0, L = 0, M = 0;
  std::vector<CMat> G;  ///< index (s*L + r)*L + l

  const CMat& at(int s, int r, int l) const { return G[(static_cast<std::size_t>(s) * L + r) * L + l]; }
};

TwoWayChannelSet build_two_way_channels(const Scenario& scenario);

/// Swerling-I normalized RCS draws α_{s,r,l} for r in `rx_aps`, l in `tx_aps`.
struct RcsRealization {
  int S = 0, n_rx = 0, n_tx = 0;
  std::vector<cdouble> alpha;  ///< index (s*n_rx + r_idx)*n_tx + l_idx

  cdouble at(int s, int r_idx, int l_idx) const {
    return alpha[(static_cast<std::size_t>(s) * n_rx + r_idx) * n_tx + l_idx];
  }
};

/// RCS correlation across TX-APs; identity gives i.i.d. CN(0,1) draws.
class RcsModel {
 public:
  explicit RcsModel(int n_tx);
  RcsModel(const CMat& corr);

  const CMat& corr() const { return corr_; }
  const CMat& corr_inverse() const { return corr_inv_; }
  bool identity() const { return identity_; }

  RcsRealization draw(int S, int n_rx, RandomStream& rng) const;

 private:
  CMat corr_, factor_, corr_inv_;
  bool identity_;
};

RcsRealization draw_rcs(int S, int n_rx, int n_tx, RandomStream& rng);

}  // namespace cfisac
