#include "cfisac/sinr.hpp"

#include <cmath>

namespace cfisac {

Mat project_psd(const Mat& A) {
  const Mat sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  if (eig.eigenvalues().minCoeff() >= 0.0) return sym;
  const Vec ev = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

CommSinrModel estimate_comm_sinr_terms(const Scenario& scenario, const AssignmentPlan& plan,
                                       const CommChannelModel& model, const std::vector<double>& norm_scales,
                                       int n_mc, RandomStream& rng) {
  require(n_mc >= 1, "estimate_comm_sinr_terms: n_mc must be >= 1");
  const int K = plan.K, S = plan.S, n = plan.num_tx(), M = scenario.antennas();
  CommSinrModel out;
  out.K = K;
  out.S = S;
  out.n_tx = n;
  out.n_mc = n_mc;
  out.noise = scenario.noise_power();

  PrecoderSet sens;
  sens.S = S;
  sens.n_tx = n;
  sens.M = M;
  mrt_sensing_precoders(scenario, plan, sens);

  std::vector<CVec> a_acc(K, CVec::Zero(n));
  std::vector<CMat> B_acc(static_cast<std::size_t>(K) * K, CMat::Zero(n, n));
  std::vector<CMat> C_acc(static_cast<std::size_t>(K) * S, CMat::Zero(n, n));
  CVec u(n);
  for (int draw = 0; draw < n_mc; ++draw) {
    const CommChannelSet ch = model.draw(rng);
    const ChannelEstimateSet est = model.estimate(ch, rng);
    const PrecoderSet pre = lp_mmse_precoders(est, plan, scenario, norm_scales);
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < K; ++j) {
        u.setZero();
        for (int i = 0; i < n; ++i) {
          const int l = plan.tx_aps[i];
          if (plan.serves(l, j)) u(i) = ch.at(k, l).dot(pre.comm(j, i));  // h^H w
        }
        if (j == k) a_acc[k] += u;
        B_acc[k * K + j].noalias() += u * u.adjoint();
      }
      for (int s = 0; s < S; ++s) {
        u.setZero();
        for (int i = 0; i < n; ++i) {
          const int l = plan.tx_aps[i];
          if (plan.senses(l, s)) u(i) = ch.at(k, l).dot(sens.sens(s, i));
        }
        C_acc[k * S + s].noalias() += u * u.adjoint();
      }
    }
  }
  const double inv = 1.0 / n_mc;
  out.a.resize(K);
  out.B.resize(static_cast<std::size_t>(K) * K);
  out.C.resize(static_cast<std::size_t>(K) * S);
  for (int k = 0; k < K; ++k) out.a[k] = (a_acc[k] * inv).real().cwiseMax(0.0);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < K; ++j) {
      Mat b = (B_acc[k * K + j] * inv).real();
      if (j == k) b -= out.a[k] * out.a[k].transpose();
      out.B[k * K + j] = project_psd(b);
    }
    for (int s = 0; s < S; ++s) out.C[k * S + s] = project_psd((C_acc[k * S + s] * inv).real());
  }
  return out;
}

Vec comm_sinr(const CommSinrModel& m, const PowerVector& power) {
  require(power.K() == m.K && power.S() == m.S && power.n_tx() == m.n_tx, "comm_sinr: power shape mismatch");
  std::vector<Vec> rho(m.K), q(m.S);
  for (int k = 0; k < m.K; ++k) rho[k] = power.ue_slice(k);
  for (int s = 0; s < m.S; ++s) q[s] = power.ssa_slice(s);
  Vec out(m.K);
  for (int k = 0; k < m.K; ++k) {
    const double sig = m.a[k].dot(rho[k]);
    double den = m.noise;
    for (int j = 0; j < m.K; ++j) den += rho[j].dot(m.b(k, j) * rho[j]);
    for (int s = 0; s < m.S; ++s) den += q[s].dot(m.c(k, s) * q[s]);
    out(k) = sig * sig / den;
  }
  return out;
}

SensingVectors build_sensing_vectors(const Scenario& scenario, const AssignmentPlan& plan,
                                     const PrecoderSet& pre, const CombinerSet& comb, const SymbolBlock& sym) {
  const TwoWayChannelSet two_way = build_two_way_channels(scenario);
  SensingVectors out;
  out.S = plan.S;
  out.K = plan.K;
  out.n_tx = plan.num_tx();
  out.tau = sym.tau();
  const int S = out.S, K = out.K, n = out.n_tx, tau = out.tau;
  for (int s = 0; s < S; ++s)
    for (int r : plan.ssa_rx[s]) out.pairs.emplace_back(s, r);

  // Projections v^H G_{t,r,l} w and v^H G_{t,r,l} ω, then multiplied by the symbols.
  auto fill = [&](const Eigen::RowVectorXcd& vG, int i, std::vector<CVec>& dst_comm, std::vector<CVec>& dst_sens,
                  std::size_t base) {
    CVec pc(K), ps(S);
    for (int k = 0; k < K; ++k) pc(k) = (vG * pre.comm(k, i))(0);
    for (int t = 0; t < S; ++t) ps(t) = (vG * pre.sens(t, i))(0);
    for (int m = 0; m < tau; ++m) {
      dst_comm[base + m] = pc.cwiseProduct(sym.s_comm.col(m));
      dst_sens[base + m] = ps.cwiseProduct(sym.r_sens.col(m));
    }
  };

  for (const auto& [s, r] : out.pairs) {
    const CVec& v = comb.at(s, plan.rx_index(r));
    std::vector<CVec> d(static_cast<std::size_t>(n) * tau), e(d.size());
    std::vector<CVec> f(static_cast<std::size_t>(S) * n * tau), g(f.size());
    for (int i = 0; i < n; ++i) {
      const int l = plan.tx_aps[i];
      fill(v.adjoint() * two_way.at(s, r, l), i, d, e, static_cast<std::size_t>(i) * tau);
      for (int t = 0; t < S; ++t) {
        if (t == s) continue;
        fill(v.adjoint() * two_way.at(t, r, l), i, f, g, (static_cast<std::size_t>(t) * n + i) * tau);
      }
    }
    out.d.push_back(std::move(d));
    out.e.push_back(std::move(e));
    out.f.push_back(std::move(f));
    out.g.push_back(std::move(g));
  }
  return out;
}

namespace {

void add_real_outer(Mat& block, const CVec& top, const CVec& bottom) {
  CVec z(top.size() + bottom.size());
  z << top, bottom;
  block.noalias() += (z * z.adjoint()).real();
}

double block_quadratic(const std::vector<Mat>& blocks, const Vec& rho, int width) {
  double acc = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto seg = rho.segment(static_cast<Eigen::Index>(i) * width, width);
    acc += seg.dot(blocks[i] * seg);
  }
  return acc;
}

Mat dense(const std::vector<Mat>& blocks, int width) {
  const auto n = static_cast<Eigen::Index>(blocks.size());
  Mat D = Mat::Zero(n * width, n * width);
  for (Eigen::Index i = 0; i < n; ++i) D.block(i * width, i * width, width, width) = blocks[i];
  return D;
}

}  // namespace

double SensingQuadraticForms::signal(std::size_t p, const Vec& rho) const {
  return block_quadratic(A_blocks[p], rho, block());
}
double SensingQuadraticForms::interference(std::size_t p, const Vec& rho) const {
  return block_quadratic(B_blocks[p], rho, block());
}
Mat SensingQuadraticForms::dense_A(std::size_t p) const { return dense(A_blocks[p], block()); }
Mat SensingQuadraticForms::dense_B(std::size_t p) const { return dense(B_blocks[p], block()); }

SensingQuadraticForms sensing_quadratic_forms(const SensingVectors& v, double noise) {
  SensingQuadraticForms out;
  out.S = v.S;
  out.K = v.K;
  out.n_tx = v.n_tx;
  out.tau = v.tau;
  out.noise = noise;
  out.pairs = v.pairs;
  const int w = v.K + v.S;
  for (std::size_t p = 0; p < v.pairs.size(); ++p) {
    const int s = v.pairs[p].first;
    std::vector<Mat> A(v.n_tx, Mat::Zero(w, w)), B(v.n_tx, Mat::Zero(w, w));
    for (int i = 0; i < v.n_tx; ++i) {
      for (int m = 0; m < v.tau; ++m) {
        const std::size_t idx = static_cast<std::size_t>(i) * v.tau + m;
        add_real_outer(A[i], v.d[p][idx], v.e[p][idx]);
        for (int t = 0; t < v.S; ++t) {
          if (t == s) continue;
          const std::size_t jdx = (static_cast<std::size_t>(t) * v.n_tx + i) * v.tau + m;
          add_real_outer(B[i], v.f[p][jdx], v.g[p][jdx]);
        }
      }
      A[i] = 0.5 * (A[i] + A[i].transpose()).eval();
      B[i] = 0.5 * (B[i] + B[i].transpose()).eval();
    }
    out.A_blocks.push_back(std::move(A));
    out.B_blocks.push_back(std::move(B));
  }
  return out;
}

Vec sensing_sinr(const SensingQuadraticForms& forms, const PowerVector& power) {
  require(power.size() == forms.dim(), "sensing_sinr: dimension mismatch");
  Vec out(static_cast<Eigen::Index>(forms.pairs.size()));
  for (std::size_t p = 0; p < forms.pairs.size(); ++p)
    out(static_cast<Eigen::Index>(p)) =
        forms.signal(p, power.values()) / (forms.interference(p, power.values()) + forms.tau * forms.noise);
  return out;
}

double sensing_sinr_direct(const Scenario& scenario, const AssignmentPlan& plan, const PrecoderSet& precoders,
                           const CombinerSet& combiners, const SymbolBlock& symbols, const PowerVector& power,
                           int s, int r) {
  const TransmitFrame frame = assemble_transmit(plan, precoders, power, symbols);
  const TwoWayChannelSet G = build_two_way_channels(scenario);
  const CVec& v = combiners.at(s, plan.rx_index(r));
  double num = 0.0, den = 0.0;
  for (int m = 0; m < symbols.tau(); ++m) {
    for (int i = 0; i < plan.num_tx(); ++i) {
      const int l = plan.tx_aps[i];
      const CVec x = frame.x[i].col(m);
      num += std::norm(v.dot(G.at(s, r, l) * x));
      for (int t = 0; t < plan.S; ++t)
        if (t != s) den += std::norm(v.dot(G.at(t, r, l) * x));
    }
  }
  return num / (den + symbols.tau() * scenario.noise_power());
}

namespace {

nlohmann::json mat_json(const Mat& A) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    std::vector<double> row(A.cols());
    for (Eigen::Index j = 0; j < A.cols(); ++j) row[j] = A(i, j);
    rows.push_back(row);
  }
  return rows;
}

Mat json_mat(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) A(i, k) = j[i][k].get<double>();
  return A;
}

}  // namespace

void to_json(nlohmann::json& j, const CommSinrModel& m) {
  nlohmann::json a = nlohmann::json::array(), B = nlohmann::json::array(), C = nlohmann::json::array();
  for (const auto& v : m.a) a.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  for (const auto& b : m.B) B.push_back(mat_json(b));
  for (const auto& c : m.C) C.push_back(mat_json(c));
  j = {{"K", m.K}, {"S", m.S}, {"n_tx", m.n_tx}, {"n_mc", m.n_mc}, {"noise", m.noise}, {"a", a}, {"B", B}, {"C", C}};
}

void from_json(const nlohmann::json& j, CommSinrModel& m) {
  m.K = j.at("K").get<int>();
  m.S = j.at("S").get<int>();
  m.n_tx = j.at("n_tx").get<int>();
  m.n_mc = j.at("n_mc").get<int>();
  m.noise = j.at("noise").get<double>();
  m.a.clear();
  m.B.clear();
  m.C.clear();
  for (const auto& v : j.at("a")) {
    const auto x = v.get<std::vector<double>>();
    m.a.push_back(Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())));
  }
  for (const auto& b : j.at("B")) m.B.push_back(json_mat(b));
  for (const auto& c : j.at("C")) m.C.push_back(json_mat(c));
  require(static_cast<int>(m.a.size()) == m.K && static_cast<int>(m.B.size()) == m.K * m.K &&
              static_cast<int>(m.C.size()) == m.K * m.S,
          "CommSinrModel JSON: inconsistent sizes");
}

void to_json(nlohmann::json& j, const SensingQuadraticForms& f) {
  nlohmann::json pairs = nlohmann::json::array(), A = nlohmann::json::array(), B = nlohmann::json::array();
  for (std::size_t p = 0; p < f.pairs.size(); ++p) {
    pairs.push_back({f.pairs[p].first, f.pairs[p].second});
    nlohmann::json a = nlohmann::json::array(), b = nlohmann::json::array();
    for (const auto& blk : f.A_blocks[p]) a.push_back(mat_json(blk));
    for (const auto& blk : f.B_blocks[p]) b.push_back(mat_json(blk));
    A.push_back(a);
    B.push_back(b);
  }
  j = {{"S", f.S}, {"K", f.K}, {"n_tx", f.n_tx}, {"tau", f.tau}, {"noise", f.noise},
       {"pairs", pairs}, {"A_blocks", A}, {"B_blocks", B}};
}

void from_json(const nlohmann::json& j, SensingQuadraticForms& f) {
  f.S = j.at("S").get<int>();
  f.K = j.at("K").get<int>();
  f.n_tx = j.at("n_tx").get<int>();
  f.tau = j.at("tau").get<int>();
  f.noise = j.at("noise").get<double>();
  f.pairs.clear();
  f.A_blocks.clear();
  f.B_blocks.clear();
  for (const auto& p : j.at("pairs")) f.pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
  for (const auto& a : j.at("A_blocks")) {
    std::vector<Mat> blocks;
    for (const auto& blk : a) blocks.push_back(json_mat(blk));
    f.A_blocks.push_back(std::move(blocks));
  }
  for (const auto& b : j.at("B_blocks")) {
    std::vector<Mat> blocks;
    for (const auto& blk : b) blocks.push_back(json_mat(blk));
    f.B_blocks.push_back(std::move(blocks));
  }
  require(f.A_blocks.size() == f.pairs.size() && f.B_blocks.size() == f.pairs.size(),
          "SensingQuadraticForms JSON: inconsistent sizes");
}

}  // namespace cfisac
