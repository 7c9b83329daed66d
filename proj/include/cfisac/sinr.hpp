#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "cfisac/beamforming.hpp"
#include "cfisac/channel.hpp"

namespace cfisac {

/// Expectation terms of the downlink SINR, indexed by TX-AP position.
/// Only the real parts of B and C matter for real amplitude vectors; those
/// are what is stored.
struct CommSinrModel {
  int K = 0, S = 0, n_tx = 0, n_mc = 0;
  double noise = 0.0;
  std::vector<Vec> a;  ///< [a_k]_i = Re E{h^H w_{k}} ≥ 0
  std::vector<Mat> B;  ///< index k*K + j
  std::vector<Mat> C;  ///< index k*S + s

  const Mat& b(int k, int j) const { return B[k * K + j]; }
  const Mat& c(int k, int s) const { return C[k * S + s]; }
};

/// Sample means over n_mc independent channel + estimate draws. B_kk is
/// projected onto the PSD cone by eigenvalue clipping.
CommSinrModel estimate_comm_sinr_terms(const Scenario& scenario, const AssignmentPlan& plan,
                                       const CommChannelModel& model, const std::vector<double>& norm_scales,
                                       int n_mc, RandomStream& rng);

/// SINR_k = |a_k^T ρ_k|² / (Σ_j ρ_j^T B_kj ρ_j + Σ_s q_s^T C_ks q_s + σ²).
Vec comm_sinr(const CommSinrModel& model, const PowerVector& power);

/// Symmetric part, then negative eigenvalues clipped to zero.
Mat project_psd(const Mat& A);

/// d, e, f, g families for every (s, r ∈ R_s).
struct SensingVectors {
  int S = 0, K = 0, n_tx = 0, tau = 0;
  std::vector<std::pair<int, int>> pairs;  ///< (s, global RX-AP r)

  // Per pair p: d[p][i*tau + m] (K), e[p][i*tau + m] (S);
  // f[p][(t*n_tx + i)*tau + m] (K), g[p][...] (S). Rows with t == s are empty.
  std::vector<std::vector<CVec>> d, e, f, g;
};

SensingVectors build_sensing_vectors(const Scenario& scenario, const AssignmentPlan& plan,
                                     const PrecoderSet& precoders, const CombinerSet& combiners,
                                     const SymbolBlock& symbols);

/// Block-diagonal forms: for pair p, block i of A is (K+S)×(K+S).
struct SensingQuadraticForms {
  int S = 0, K = 0, n_tx = 0, tau = 0;
  double noise = 0.0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<Mat>> A_blocks, B_blocks;

  int block() const { return K + S; }
  int dim() const { return n_tx * block(); }
  double signal(std::size_t p, const Vec& rho) const;        ///< ρ^T A ρ
  double interference(std::size_t p, const Vec& rho) const;  ///< ρ^T B ρ
  Mat dense_A(std::size_t p) const;
  Mat dense_B(std::size_t p) const;
};

SensingQuadraticForms sensing_quadratic_forms(const SensingVectors& vectors, double noise);

/// ρ^T A ρ / (ρ^T B ρ + τ σ²) for every pair.
Vec sensing_sinr(const SensingQuadraticForms& forms, const PowerVector& power);

/// Brute-force evaluation from the transmit frame and the two-way matrices.
double sensing_sinr_direct(const Scenario& scenario, const AssignmentPlan& plan, const PrecoderSet& precoders,
                           const CombinerSet& combiners, const SymbolBlock& symbols, const PowerVector& power,
                           int s, int r);

void to_json(nlohmann::json& j, const CommSinrModel& m);
void from_json(const nlohmann::json& j, CommSinrModel& m);
void to_json(nlohmann::json& j, const SensingQuadraticForms& f);
void from_json(const nlohmann::json& j, SensingQuadraticForms& f);

}  // namespace cfisac
