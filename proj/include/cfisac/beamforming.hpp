#pragma once

#include <vector>

#include "cfisac/assignment.hpp"
#include "cfisac/channel.hpp"
#include "cfisac/power_vector.hpp"
#include "cfisac/rng.hpp"

namespace cfisac {

enum class NormalizationMode { Ensemble, PerRealization };

/// Precoders indexed by (stream, TX-AP position). Entries for unassigned
/// pairs are zero vectors.
struct PrecoderSet {
  int K = 0, S = 0, n_tx = 0, M = 0;
  std::vector<CVec> w_comm;        ///< index k*n_tx + i
  std::vector<CVec> w_sens;        ///< index s*n_tx + i
  std::vector<double> norm_scale;  ///< √E{||w̄||²}, index k*n_tx + i

  const CVec& comm(int k, int i) const { return w_comm[k * n_tx + i]; }
  const CVec& sens(int s, int i) const { return w_sens[s * n_tx + i]; }
};

/// MRC combiners v_{s,r} for every SSA and every RX-AP position.
struct CombinerSet {
  int S = 0, n_rx = 0;
  std::vector<CVec> v;  ///< index s*n_rx + j

  const CVec& at(int s, int rx_idx) const { return v[s * n_rx + rx_idx]; }
};

struct SymbolBlock {
  CMat s_comm;  ///< K × τ
  CMat r_sens;  ///< S × τ
  int tau() const { return static_cast<int>(s_comm.cols()); }
};

struct TransmitFrame {
  std::vector<CMat> x;  ///< per TX-AP position, M × τ
};

/// Unnormalized LP-MMSE directions w̄_{k,l} for the served pairs.
std::vector<CVec> lp_mmse_directions(const ChannelEstimateSet& est, const AssignmentPlan& plan, int M,
                                     double p_ul, double sigma2);

/// √E{||w̄_{k,l}||²} from `n_norm` independent channel/estimate draws.
std::vector<double> lp_mmse_norm_scales(const CommChannelModel& model, const AssignmentPlan& plan,
                                        const Scenario& scenario, int n_norm, RandomStream& rng);

/// Fills w_comm of a PrecoderSet. `norm_scales` comes from lp_mmse_norm_scales
/// and is ignored in PerRealization mode.
PrecoderSet lp_mmse_precoders(const ChannelEstimateSet& est, const AssignmentPlan& plan, const Scenario& scenario,
                              const std::vector<double>& norm_scales,
                              NormalizationMode mode = NormalizationMode::Ensemble);

/// Adds ω_{s,l} = conj(a(φ_{s,l}, ϑ_{s,l})) / √M for l ∈ T_s.
void mrt_sensing_precoders(const Scenario& scenario, const AssignmentPlan& plan, PrecoderSet& precoders);

/// v_{s,r} = a(φ_{s,r}, θ_{s,r}) / √M.
CombinerSet mrc_combiners(const Scenario& scenario, const AssignmentPlan& plan);

/// i.i.d. CN(0,1) symbols.
SymbolBlock draw_symbols(int K, int S, int tau, RandomStream& rng);

TransmitFrame assemble_transmit(const AssignmentPlan& plan, const PrecoderSet& precoders, const PowerVector& power,
                                const SymbolBlock& symbols);

}  // namespace cfisac
