#include "cfisac/power.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace cfisac {

double CcpConfig::penalty() const { return lambda_penalty > 0.0 ? lambda_penalty : 100.0 * std::max(omega0, omega1); }

void CcpConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("invalid CCP config: " + m); };
  if (!(omega0 >= 0.0) || !(omega1 >= 0.0) || omega0 + omega1 <= 0.0) fail("weights must be >= 0, not both 0");
  if (lambda_penalty < 0.0) fail("lambda_penalty must be >= 0 (0 selects the default)");
  if (!(eps1 > 0.0 && eps2 > 0.0 && eps3 > 0.0 && eps4 > 0.0)) fail("tolerances must be > 0");
  if (c_max < 1) fail("c_max must be >= 1");
  if (!(subproblem_tol > 0.0)) fail("subproblem_tol must be > 0");
  if (!(ap_power > 0.0)) fail("ap_power must be > 0");
  if (max_retries < 0) fail("max_retries must be >= 0");
}

namespace {

// Smallest γ used as a linearization point.
constexpr double kGammaFloor = 1e-9;

int comm_dim(const CommSinrModel& m) { return m.n_tx * (m.K + m.S); }

/// Σ_j ρ_j^T B_kj ρ_j + Σ_s q_s^T C_ks q_s as one dense form over ρ.
Mat comm_interference_matrix(const CommSinrModel& m, int k) {
  const int w = m.K + m.S, n = m.n_tx;
  Mat Q = Mat::Zero(n * w, n * w);
  auto scatter = [&](const Mat& blk, int stream) {
    for (int i = 0; i < n; ++i)
      for (int i2 = 0; i2 < n; ++i2) Q(i * w + stream, i2 * w + stream) += blk(i, i2);
  };
  for (int j = 0; j < m.K; ++j) scatter(m.b(k, j), j);
  for (int s = 0; s < m.S; ++s) scatter(m.c(k, s), m.K + s);
  return Q;
}

}  // namespace

LinearizedConstraint linearize_comm_constraint(const CommSinrModel& model, int k, const CcpState& state) {
  require(state.gamma_c > 0.0, "linearize_comm_constraint: gamma_c at the linearization point must be > 0");
  require(k >= 0 && k < model.K, "linearize_comm_constraint: UE index out of range");
  require(state.rho.size() == comm_dim(model), "linearize_comm_constraint: power vector size mismatch");
  const int w = model.K + model.S;
  Vec a = Vec::Zero(comm_dim(model));
  for (int i = 0; i < model.n_tx; ++i) a(i * w + k) = model.a[k](i);
  const double g = state.gamma_c;
  const double proj = a.dot(state.rho.values());
  LinearizedConstraint c;
  c.signal = (2.0 * proj / g) * a;
  c.gamma_coef = -proj * proj / (g * g);
  c.Q = comm_interference_matrix(model, k);
  c.noise = model.noise;
  require(proj > 0.0, "linearize_comm_constraint: zero desired signal for UE " + std::to_string(k));
  c.scale = g * g / (proj * proj);
  return c;
}

LinearizedConstraint linearize_sensing_constraint(const SensingQuadraticForms& forms, std::size_t pair,
                                                  const CcpState& state) {
  require(state.gamma_s > 0.0, "linearize_sensing_constraint: gamma_s at the linearization point must be > 0");
  require(pair < forms.pairs.size(), "linearize_sensing_constraint: pair index out of range");
  require(state.rho.size() == forms.dim(), "linearize_sensing_constraint: power vector size mismatch");
  const Mat A = forms.dense_A(pair);
  const Vec Arho = A * state.rho.values();
  const double g = state.gamma_s;
  const double energy = state.rho.values().dot(Arho);
  LinearizedConstraint c;
  c.signal = (2.0 / g) * Arho;
  c.gamma_coef = -energy / (g * g);
  c.Q = forms.dense_B(pair);
  c.noise = forms.tau * forms.noise;
  require(energy > 0.0, "linearize_sensing_constraint: zero echo energy for pair " + std::to_string(pair));
  c.scale = g * g / energy;
  return c;
}

double ccp_objective(const CcpState& s, const CcpConfig& cfg) {
  return -cfg.omega0 * s.gamma_s - cfg.omega1 * s.gamma_c + cfg.penalty() * (s.xi.sum() + s.chi.sum());
}

CcpState initial_ccp_state(const CommSinrModel& model, const SensingQuadraticForms& forms, const PowerVector& init) {
  CcpState s;
  s.rho = init;
  s.gamma_c = model.K > 0 ? comm_sinr(model, init).minCoeff() : 0.0;
  s.gamma_s = forms.pairs.empty() ? 0.0 : sensing_sinr(forms, init).minCoeff();
  s.xi = Vec::Zero(model.K);
  s.chi = Vec::Zero(static_cast<Eigen::Index>(forms.pairs.size()));
  return s;
}

PowerVector dirichlet_split(const AssignmentPlan& plan, double P_tx, RandomStream& rng) {
  PowerVector p(plan.num_tx(), plan.K, plan.S);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (int i = 0; i < plan.num_tx(); ++i) {
    const int l = plan.tx_aps[i];
    std::vector<int> entries;
    for (int k : plan.ap_ues[l]) entries.push_back(p.comm_index(i, k));
    for (int s : plan.ap_targets[l]) entries.push_back(p.sens_index(i, s));
    if (entries.empty()) continue;
    std::vector<double> wts(entries.size());
    double total = 0.0;
    for (double& x : wts) total += (x = gamma(rng.engine()) + 1e-12);
    for (std::size_t e = 0; e < entries.size(); ++e) p.values()(entries[e]) = std::sqrt(P_tx * wts[e] / total);
  }
  return p;
}

CcpState solve_convex_subproblem(const CommSinrModel& model, const SensingQuadraticForms& forms,
                                 const AssignmentPlan& plan, const CcpState& state, const CcpConfig& cfg,
                                 SubproblemInfo* info) {
  const int K = model.K;
  const int n_pairs = static_cast<int>(forms.pairs.size());
  const Vec mask = PowerVector::support_mask(plan);
  require(mask.size() == comm_dim(model) && forms.dim() == mask.size(),
          "solve_convex_subproblem: model, forms and plan disagree on dimensions");

  std::vector<int> free;
  for (Eigen::Index j = 0; j < mask.size(); ++j)
    if (mask(j) != 0.0) free.push_back(static_cast<int>(j));
  const int nf = static_cast<int>(free.size());
  const bool has_c = K > 0, has_s = n_pairs > 0;
  const int ig_s = nf, ig_c = nf + (has_s ? 1 : 0);
  const int i_xi = ig_c + (has_c ? 1 : 0);
  const int i_chi = i_xi + (has_c ? K : 0);
  const int n = i_chi + (has_s ? n_pairs : 0);

  ConvexProblem prob;
  prob.c = Vec::Zero(n);
  const double lambda = cfg.penalty();
  if (has_s) prob.c(ig_s) = -cfg.omega0;
  if (has_c) prob.c(ig_c) = -cfg.omega1;
  prob.c.tail(n - i_xi).setConstant(lambda);

  // Every variable is non-negative. The amplitude cap ρ ≤ √P_tx is implied
  // by the per-AP budget below; stating it twice only makes the barrier
  // degenerate at single-stream APs.
  prob.G = -Mat::Identity(n, n);
  prob.h = Vec::Zero(n);

  // Per-AP power.
  std::vector<int> pos(mask.size(), -1);
  for (int f = 0; f < nf; ++f) pos[free[f]] = f;
  const int w = model.K + model.S;
  for (int i = 0; i < model.n_tx; ++i) {
    QuadraticConstraint qc;
    for (int e = 0; e < w; ++e)
      if (pos[i * w + e] >= 0) qc.idx.push_back(pos[i * w + e]);
    if (qc.idx.empty()) continue;
    qc.P = Mat::Identity(static_cast<Eigen::Index>(qc.idx.size()), static_cast<Eigen::Index>(qc.idx.size()));
    qc.q = Vec::Zero(n);
    qc.r = -cfg.ap_power;
    prob.quadratic.push_back(std::move(qc));
  }
  const std::size_t first_sinr = prob.quadratic.size();

  // Rescaled linearized SINR constraints:
  //   scale·(ρ^T Q ρ + noise − signal·ρ) + γ − slack ≤ 0.
  std::vector<int> all_free(nf);
  for (int f = 0; f < nf; ++f) all_free[f] = f;
  auto add = [&](const LinearizedConstraint& lc, int gamma_var, int slack_var) {
    QuadraticConstraint qc;
    qc.idx = all_free;
    qc.P.resize(nf, nf);
    qc.q = Vec::Zero(n);
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) qc.P(a, b) = lc.scale * lc.Q(free[a], free[b]);
      qc.q(a) = -lc.scale * lc.signal(free[a]);
    }
    qc.P = 0.5 * (qc.P + qc.P.transpose()).eval();
    qc.q(gamma_var) = -lc.scale * lc.gamma_coef;  // = 1
    qc.q(slack_var) = -1.0;
    qc.r = lc.scale * lc.noise;
    prob.quadratic.push_back(std::move(qc));
  };
  CcpState lin = state;
  lin.gamma_c = std::max(state.gamma_c, kGammaFloor);
  lin.gamma_s = std::max(state.gamma_s, kGammaFloor);
  if (has_c)
    for (int k = 0; k < K; ++k) add(linearize_comm_constraint(model, k, lin), ig_c, i_xi + k);
  if (has_s)
    for (int p = 0; p < n_pairs; ++p) add(linearize_sensing_constraint(forms, p, lin), ig_s, i_chi + p);

  // Strictly feasible start: shrink toward a half-budget equal split, then
  // pick γ and slacks so every SINR constraint holds with margin.
  const Vec half = PowerVector::equal_split(plan, 0.5 * cfg.ap_power).values();
  Vec x0 = Vec::Zero(n);
  for (int f = 0; f < nf; ++f) x0(f) = 0.9 * state.rho.values()(free[f]) + 0.1 * half(free[f]);
  if (has_s) x0(ig_s) = 0.9 * lin.gamma_s;
  if (has_c) x0(ig_c) = 0.9 * lin.gamma_c;
  for (std::size_t q = first_sinr; q < prob.quadratic.size(); ++q) {
    const int slack_var = i_xi + static_cast<int>(q - first_sinr);
    x0(slack_var) = 0.0;
    const double need = prob.quadratic[q].value(x0);
    const double gamma0 = x0(slack_var < i_chi ? ig_c : ig_s);
    x0(slack_var) = std::max(0.0, need) + 1e-2 * std::max(gamma0, 1e-6);
  }

  BarrierOptions opt;
  opt.rel_gap = cfg.subproblem_tol;
  const BarrierResult res = solve_barrier(prob, x0, opt);
  if (!res.x.allFinite()) throw SolverFailure("solve_convex_subproblem: non-finite solution");
  if (info) {
    info->newton_steps = res.newton_steps;
    info->gap_bound = res.gap_bound;
    info->certified = res.certified;
  }

  CcpState out;
  out.rho = PowerVector(model.n_tx, model.K, model.S);
  for (int f = 0; f < nf; ++f) out.rho.values()(free[f]) = std::clamp(res.x(f), 0.0, std::sqrt(cfg.ap_power));
  // Guard against round-off pushing an AP a hair over budget.
  for (int i = 0; i < model.n_tx; ++i) {
    const double pw = out.rho.ap_power(i);
    if (pw > cfg.ap_power) out.rho.values().segment(i * w, w) *= std::sqrt(cfg.ap_power / pw);
  }

  // Polish: b_q is the γ at which constraint q is tight with zero slack.
  Vec xr = res.x;
  for (int f = 0; f < nf; ++f) xr(f) = out.rho.values()(free[f]);
  auto polish = [&](int gamma_var, int slack_begin, int count, double& gamma, Vec& slack) {
    slack = Vec::Zero(count);
    if (count == 0) {
      gamma = 0.0;
      return;
    }
    Vec b(count);
    for (int q = 0; q < count; ++q) {
      Vec xt = xr;
      xt(gamma_var) = 0.0;
      xt(slack_begin + q) = 0.0;
      const auto& qc = prob.quadratic[first_sinr + (slack_begin - i_xi) + q];
      b(q) = -qc.value(xt);
    }
    gamma = std::max(0.0, b.minCoeff());
    slack = (gamma - b.array()).max(0.0).matrix();
  };
  if (has_c) polish(ig_c, i_xi, K, out.gamma_c, out.xi);
  else out.xi = Vec::Zero(0);
  if (has_s) polish(ig_s, i_chi, n_pairs, out.gamma_s, out.chi);
  else out.chi = Vec::Zero(0);
  out.iteration = state.iteration + 1;
  return out;
}

CcpResult ccp_power_allocation(const CommSinrModel& model, const SensingQuadraticForms& forms,
                               const AssignmentPlan& plan, const CcpConfig& cfg, const PowerVector& init) {
  cfg.validate();
  init.check_feasible(plan, cfg.ap_power, 1e-9);
  CcpResult result;
  PowerVector start = init;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    result.trace.clear();
    result.retries = attempt;
    CcpState st = initial_ccp_state(model, forms, start);
    result.trace.push_back({0, st.gamma_s, st.gamma_c, st.xi.sum(), st.chi.sum(), ccp_objective(st, cfg), 0.0, 0});
    try {
      while (st.iteration < cfg.c_max) {
        SubproblemInfo info;
        CcpState next = solve_convex_subproblem(model, forms, plan, st, cfg, &info);
        const double sub_objective = ccp_objective(next, cfg);
        // The new ρ achieves its true minimum SINRs, which are never below the
        // subproblem's γ less its slack. Re-anchoring there keeps the next
        // linearization tight and cannot raise the objective.
        const CcpState achieved = initial_ccp_state(model, forms, next.rho);
        next.gamma_s = achieved.gamma_s;
        next.gamma_c = achieved.gamma_c;
        const double d_rho = (next.rho.values() - st.rho.values()).norm();
        const bool done = std::abs(next.gamma_s - st.gamma_s) <= cfg.eps1 &&
                          std::abs(next.gamma_c - st.gamma_c) <= cfg.eps2 && d_rho <= cfg.eps3 &&
                          next.xi.sum() + next.chi.sum() <= cfg.eps4;
        result.trace.push_back({next.iteration, next.gamma_s, next.gamma_c, next.xi.sum(), next.chi.sum(),
                                sub_objective, d_rho, info.newton_steps});
        st = std::move(next);
        if (done) {
          st.converged = true;
          break;
        }
      }
      result.state = std::move(st);
      return result;
    } catch (const SolverFailure& e) {
      last_error = e.what();
      last_error += " (CCP iteration " + std::to_string(st.iteration) + ", attempt " + std::to_string(attempt) + ")";
      RandomStream rng(derive_seed(cfg.seed, "ccp-reinit", static_cast<std::uint64_t>(attempt)));
      start = dirichlet_split(plan, cfg.ap_power, rng);
    }
  }
  throw CcpFailure("power allocation failed after " + std::to_string(cfg.max_retries) + " retries: " + last_error);
}

void write_ccp_trace_csv(std::ostream& os, const std::vector<CcpTraceRow>& trace) {
  os << "iteration,gamma_s,gamma_c,slack_xi,slack_chi,objective,delta_rho,newton_steps\n";
  os.precision(17);
  for (const auto& r : trace)
    os << r.iteration << ',' << r.gamma_s << ',' << r.gamma_c << ',' << r.slack_xi << ',' << r.slack_chi << ','
       << r.objective << ',' << r.delta_rho << ',' << r.newton_steps << '\n';
}

void to_json(nlohmann::json& j, const CcpConfig& c) {
  j = {{"omega0", c.omega0}, {"omega1", c.omega1}, {"lambda_penalty", c.lambda_penalty},
       {"eps1", c.eps1},     {"eps2", c.eps2},     {"eps3", c.eps3},
       {"eps4", c.eps4},     {"c_max", c.c_max},   {"subproblem_tol", c.subproblem_tol},
       {"ap_power", c.ap_power}, {"max_retries", c.max_retries}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, CcpConfig& c) {
  static const char* known[] = {"omega0", "omega1", "lambda_penalty", "eps1", "eps2", "eps3", "eps4",
                                "c_max", "subproblem_tol", "ap_power", "max_retries", "seed"};
  for (const auto& [key, _] : j.items())
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; }))
      throw ConfigError("unknown CCP config key '" + key + "'");
  CcpConfig d;
  c.omega0 = j.value("omega0", d.omega0);
  c.omega1 = j.value("omega1", d.omega1);
  c.lambda_penalty = j.value("lambda_penalty", d.lambda_penalty);
  c.eps1 = j.value("eps1", d.eps1);
  c.eps2 = j.value("eps2", d.eps2);
  c.eps3 = j.value("eps3", d.eps3);
  c.eps4 = j.value("eps4", d.eps4);
  c.c_max = j.value("c_max", d.c_max);
  c.subproblem_tol = j.value("subproblem_tol", d.subproblem_tol);
  c.ap_power = j.value("ap_power", d.ap_power);
  c.max_retries = j.value("max_retries", d.max_retries);
  c.seed = j.value("seed", d.seed);
}

void to_json(nlohmann::json& j, const PowerVector& p) {
  const Vec& v = p.values();
  j = {{"n_tx", p.n_tx()}, {"K", p.K()}, {"S", p.S()}, {"rho", std::vector<double>(v.data(), v.data() + v.size())}};
}

void from_json(const nlohmann::json& j, PowerVector& p) {
  const auto rho = j.at("rho").get<std::vector<double>>();
  p = PowerVector(j.at("n_tx").get<int>(), j.at("K").get<int>(), j.at("S").get<int>(),
                  Eigen::Map<const Vec>(rho.data(), static_cast<Eigen::Index>(rho.size())));
}

void to_json(nlohmann::json& j, const PowerBundle& b) {
  j = {{"plan", b.plan}, {"comm_model", b.model}, {"sensing_forms", b.forms}, {"ccp", b.config}, {"init", b.init}};
}

void from_json(const nlohmann::json& j, PowerBundle& b) {
  b.plan = j.at("plan").get<AssignmentPlan>();
  b.model = j.at("comm_model").get<CommSinrModel>();
  b.forms = j.at("sensing_forms").get<SensingQuadraticForms>();
  b.config = j.value("ccp", CcpConfig{});
  b.init = j.contains("init") ? j.at("init").get<PowerVector>() : PowerVector::equal_split(b.plan, b.config.ap_power);
}

void to_json(nlohmann::json& j, const CcpState& s) {
  j = {{"rho", s.rho},
       {"gamma_s", s.gamma_s},
       {"gamma_c", s.gamma_c},
       {"xi", std::vector<double>(s.xi.data(), s.xi.data() + s.xi.size())},
       {"chi", std::vector<double>(s.chi.data(), s.chi.data() + s.chi.size())},
       {"iteration", s.iteration},
       {"converged", s.converged}};
}

}  // namespace cfisac
