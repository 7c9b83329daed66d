#include "cfisac/channel.hpp"

#include <cmath>

namespace cfisac {

CMat psd_sqrt(const CMat& A) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(A);
  const Vec& ev = eig.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (ev.minCoeff() < -1e-9 * scale) throw ContractViolation("psd_sqrt: matrix is not positive semidefinite");
  const Vec root = ev.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
}

CommChannelModel::CommChannelModel(const Scenario& scenario)
    : scenario_(&scenario), K_(scenario.num_ues()), L_(scenario.num_aps()), M_(scenario.antennas()) {
  const double tau_p = K_;
  pilot_noise_ = scenario.noise_power() / (scenario.config().p_ul * tau_p);
  const std::size_t n = static_cast<std::size_t>(K_) * L_;
  nlos_sqrt_.reserve(n);
  prior_.reserve(n);
  estimator_.reserve(n);
  error_ = std::make_shared<std::vector<CMat>>();
  error_->reserve(n);
  const CMat I = CMat::Identity(M_, M_);
  for (int k = 0; k < K_; ++k) {
    for (int l = 0; l < L_; ++l) {
      const CommLinkStats& st = scenario.comm_link(k, l);
      nlos_sqrt_.push_back(psd_sqrt(st.nlos_corr));
      CMat R = st.los_mean * st.los_mean.adjoint() + st.nlos_corr;
      // R (R + νI)^{-1}; both factors are Hermitian and commute.
      CMat E = (R + pilot_noise_ * I).ldlt().solve(R).adjoint();
      CMat Z = R - E * R;
      Z = 0.5 * (Z + Z.adjoint()).eval();
      prior_.push_back(std::move(R));
      estimator_.push_back(std::move(E));
      error_->push_back(std::move(Z));
    }
  }
}

CommChannelSet CommChannelModel::draw(RandomStream& rng) const {
  CommChannelSet set;
  set.K = K_;
  set.L = L_;
  set.h.reserve(static_cast<std::size_t>(K_) * L_);
  set.psi.reserve(static_cast<std::size_t>(K_) * L_);
  for (int k = 0; k < K_; ++k) {
    for (int l = 0; l < L_; ++l) {
      const CommLinkStats& st = scenario_->comm_link(k, l);
      const double psi = 2.0 * kPi * rng.uniform();
      CVec h = std::polar(1.0, psi) * st.los_mean + nlos_sqrt_[k * L_ + l] * rng.complex_normal_vector(M_);
      set.h.push_back(std::move(h));
      set.psi.push_back(psi);
    }
  }
  return set;
}

ChannelEstimateSet CommChannelModel::estimate(const CommChannelSet& channels, RandomStream& rng) const {
  require(channels.K == K_ && channels.L == L_, "estimate: channel set does not match the model");
  ChannelEstimateSet est;
  est.K = K_;
  est.L = L_;
  est.err_corr = error_;
  est.h_hat.reserve(channels.h.size());
  for (int k = 0; k < K_; ++k) {
    for (int l = 0; l < L_; ++l) {
      CVec y = channels.at(k, l) + rng.complex_normal_vector(M_, pilot_noise_);
      est.h_hat.push_back(estimator_[k * L_ + l] * y);
    }
  }
  return est;
}

CommChannelSet draw_comm_channels(const Scenario& scenario, RandomStream& rng) {
  return CommChannelModel(scenario).draw(rng);
}

TwoWayChannelSet build_two_way_channels(const Scenario& scenario) {
  TwoWayChannelSet set;
  set.S = scenario.num_ssas();
  set.L = scenario.num_aps();
  set.M = scenario.antennas();
  set.G.reserve(static_cast<std::size_t>(set.S) * set.L * set.L);
  for (int s = 0; s < set.S; ++s) {
    for (int r = 0; r < set.L; ++r) {
      const auto& rx = scenario.rx_link(s, r);
      const CVec a_rx = array_response(rx.azimuth, rx.elevation, set.M);
      for (int l = 0; l < set.L; ++l) {
        const auto& tx = scenario.tx_link(s, l);
        const CVec a_tx = array_response(tx.azimuth, tx.elevation, set.M);
        set.G.push_back(std::sqrt(scenario.two_way_gain(s, r, l)) * a_rx * a_tx.transpose());
      }
    }
  }
  return set;
}

RcsModel::RcsModel(int n_tx)
    : corr_(CMat::Identity(n_tx, n_tx)), factor_(corr_), corr_inv_(corr_), identity_(true) {}

RcsModel::RcsModel(const CMat& corr) : corr_(corr), identity_(false) {
  require(corr.rows() == corr.cols(), "RcsModel: correlation must be square");
  Eigen::LLT<CMat> llt(corr);
  require(llt.info() == Eigen::Success, "RcsModel: correlation must be positive definite");
  factor_ = llt.matrixL();
  corr_inv_ = llt.solve(CMat::Identity(corr.rows(), corr.cols()));
  identity_ = corr.isIdentity(0.0);
}

RcsRealization RcsModel::draw(int S, int n_rx, RandomStream& rng) const {
  RcsRealization out;
  out.S = S;
  out.n_rx = n_rx;
  out.n_tx = static_cast<int>(corr_.rows());
  out.alpha.resize(static_cast<std::size_t>(S) * n_rx * out.n_tx);
  for (int s = 0; s < S; ++s) {
    for (int r = 0; r < n_rx; ++r) {
      const std::size_t base = (static_cast<std::size_t>(s) * n_rx + r) * out.n_tx;
      if (identity_) {
        for (int l = 0; l < out.n_tx; ++l) out.alpha[base + l] = rng.complex_normal();
      } else {
        const CVec a = factor_ * rng.complex_normal_vector(out.n_tx);
        for (int l = 0; l < out.n_tx; ++l) out.alpha[base + l] = a(l);
      }
    }
  }
  return out;
}

RcsRealization draw_rcs(int S, int n_rx, int n_tx, RandomStream& rng) {
  return RcsModel(n_tx).draw(S, n_rx, rng);
}

}  // namespace cfisac
