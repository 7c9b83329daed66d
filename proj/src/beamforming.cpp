#include "cfisac/beamforming.hpp"

#include <cmath>

namespace cfisac {

std::vector<CVec> lp_mmse_directions(const ChannelEstimateSet& est, const AssignmentPlan& plan, int M, double p_ul,
                                     double sigma2) {
  const int n_tx = plan.num_tx();
  std::vector<CVec> out(static_cast<std::size_t>(plan.K) * n_tx, CVec::Zero(M));
  for (int i = 0; i < n_tx; ++i) {
    const int l = plan.tx_aps[i];
    const auto& ues = plan.ap_ues[l];
    if (ues.empty()) continue;
    CMat C = sigma2 * CMat::Identity(M, M);
    for (int u : ues) {
      const CVec& h = est.at(u, l);
      C.noalias() += p_ul * (h * h.adjoint() + est.error(u, l));
    }
    Eigen::LLT<CMat> llt(C);
    require(llt.info() == Eigen::Success, "lp_mmse_directions: regularized matrix is not positive definite");
    for (int k : ues) out[k * n_tx + i] = p_ul * llt.solve(est.at(k, l));
  }
  return out;
}

std::vector<double> lp_mmse_norm_scales(const CommChannelModel& model, const AssignmentPlan& plan,
                                        const Scenario& scenario, int n_norm, RandomStream& rng) {
  require(n_norm >= 1, "lp_mmse_norm_scales: n_norm must be >= 1");
  const int n_tx = plan.num_tx();
  std::vector<double> acc(static_cast<std::size_t>(plan.K) * n_tx, 0.0);
  for (int n = 0; n < n_norm; ++n) {
    const CommChannelSet ch = model.draw(rng);
    const ChannelEstimateSet est = model.estimate(ch, rng);
    const auto w = lp_mmse_directions(est, plan, scenario.antennas(), scenario.config().p_ul, scenario.noise_power());
    for (std::size_t j = 0; j < w.size(); ++j) acc[j] += w[j].squaredNorm();
  }
  for (double& a : acc) a = std::sqrt(a / n_norm);
  return acc;
}

PrecoderSet lp_mmse_precoders(const ChannelEstimateSet& est, const AssignmentPlan& plan, const Scenario& scenario,
                              const std::vector<double>& norm_scales, NormalizationMode mode) {
  PrecoderSet p;
  p.K = plan.K;
  p.S = plan.S;
  p.n_tx = plan.num_tx();
  p.M = scenario.antennas();
  p.w_comm = lp_mmse_directions(est, plan, p.M, scenario.config().p_ul, scenario.noise_power());
  p.w_sens.assign(static_cast<std::size_t>(p.S) * p.n_tx, CVec::Zero(p.M));
  p.norm_scale.assign(p.w_comm.size(), 0.0);
  for (std::size_t j = 0; j < p.w_comm.size(); ++j) {
    const double norm = p.w_comm[j].norm();
    if (norm == 0.0) continue;
    double scale = mode == NormalizationMode::Ensemble ? norm_scales.at(j) : norm;
    require(scale > 0.0, "lp_mmse_precoders: missing normalization for a served pair");
    p.w_comm[j] /= scale;
    p.norm_scale[j] = scale;
  }
  return p;
}

void mrt_sensing_precoders(const Scenario& scenario, const AssignmentPlan& plan, PrecoderSet& p) {
  const int M = scenario.antennas();
  if (p.w_sens.size() != static_cast<std::size_t>(plan.S) * plan.num_tx())
    p.w_sens.assign(static_cast<std::size_t>(plan.S) * plan.num_tx(), CVec::Zero(M));
  for (int s = 0; s < plan.S; ++s) {
    for (int l : plan.ssa_tx[s]) {
      const int i = plan.tx_index(l);
      const auto& link = scenario.tx_link(s, l);
      p.w_sens[s * plan.num_tx() + i] = array_response(link.azimuth, link.elevation, M).conjugate() / std::sqrt(M);
    }
  }
}

CombinerSet mrc_combiners(const Scenario& scenario, const AssignmentPlan& plan) {
  CombinerSet c;
  c.S = plan.S;
  c.n_rx = plan.num_rx();
  const int M = scenario.antennas();
  c.v.reserve(static_cast<std::size_t>(c.S) * c.n_rx);
  for (int s = 0; s < c.S; ++s) {
    for (int r : plan.rx_aps) {
      const auto& link = scenario.rx_link(s, r);
      c.v.push_back(array_response(link.azimuth, link.elevation, M) / std::sqrt(M));
    }
  }
  return c;
}

SymbolBlock draw_symbols(int K, int S, int tau, RandomStream& rng) {
  SymbolBlock b;
  b.s_comm.resize(K, tau);
  b.r_sens.resize(S, tau);
  for (int m = 0; m < tau; ++m) {
    for (int k = 0; k < K; ++k) b.s_comm(k, m) = rng.complex_normal();
    for (int s = 0; s < S; ++s) b.r_sens(s, m) = rng.complex_normal();
  }
  return b;
}

TransmitFrame assemble_transmit(const AssignmentPlan& plan, const PrecoderSet& pre, const PowerVector& power,
                                const SymbolBlock& sym) {
  const int n_tx = plan.num_tx();
  const Vec mask = PowerVector::support_mask(plan);
  for (Eigen::Index j = 0; j < power.size(); ++j)
    require(mask(j) != 0.0 || power.values()(j) == 0.0, "assemble_transmit: power on an unassigned pair");
  TransmitFrame f;
  f.x.reserve(n_tx);
  for (int i = 0; i < n_tx; ++i) {
    const int l = plan.tx_aps[i];
    CMat x = CMat::Zero(pre.M, sym.tau());
    for (int k : plan.ap_ues[l]) x.noalias() += power.comm(i, k) * pre.comm(k, i) * sym.s_comm.row(k);
    for (int s : plan.ap_targets[l]) x.noalias() += power.sens(i, s) * pre.sens(s, i) * sym.r_sens.row(s);
    f.x.push_back(std::move(x));
  }
  return f;
}

}  // namespace cfisac
