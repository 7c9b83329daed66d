#include "cfisac/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "cfisac/validation.hpp"

namespace cfisac {

namespace {

constexpr const char* kVersion = "1.0.0";
const char* const kSweepParams[] = {"sigma_rcs2", "omega0", "v_exponent", "R", "T", "S"};

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

/// nlohmann writes NaN as null; read it back as NaN.
double number_or_nan(const nlohmann::json& j) { return j.is_null() ? nan() : j.get<double>(); }

int as_count(const std::string& param, double value) {
  if (value != std::floor(value) || value < 1.0 || value > 1e6)
    throw ConfigError("sweep value " + std::to_string(value) + " for '" + param + "' must be a positive integer");
  return static_cast<int>(value);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

}  // namespace

bool is_sweep_param(const std::string& name) {
  return std::any_of(std::begin(kSweepParams), std::end(kSweepParams), [&](const char* p) { return name == p; });
}

void ExperimentSpec::validate() const {
  base.validate();
  detector.validate();
  ccp.validate();
  if (n_setups < 1) throw ConfigError("n_setups must be >= 1");
  if (n_mc < 1 || n_norm < 1) throw ConfigError("n_mc and n_norm must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (sweep) {
    if (!is_sweep_param(sweep->param)) throw ConfigError("unknown sweep parameter '" + sweep->param + "'");
    if (sweep->values.empty()) throw ConfigError("sweep has no values");
    for (double v : sweep->values) {
      SystemConfig c = base;
      CcpConfig p = ccp;
      DetectorConfig d = detector;
      apply_sweep_value(sweep->param, v, c, p, d);
      c.validate();
      p.validate();
      d.validate();
    }
  }
}

void apply_sweep_value(const std::string& param, double value, SystemConfig& cfg, CcpConfig& ccp,
                       DetectorConfig& det) {
  if (param == "sigma_rcs2") cfg.sigma_rcs2 = db_to_linear(value);
  else if (param == "omega0") ccp.omega0 = value;
  else if (param == "v_exponent") det.v_exponent = value;
  else if (param == "R") cfg.R = as_count(param, value);
  else if (param == "T") cfg.T = as_count(param, value);
  else if (param == "S") cfg.S = as_count(param, value);
  else throw ConfigError("unknown sweep parameter '" + param + "'");
}

SetupArtifacts prepare_setup(const SystemConfig& cfg, std::uint64_t setup_seed, int n_mc, int n_norm) {
  Scenario scenario = build_scenario(cfg, derive_seed(setup_seed, "scenario"));
  AssignmentPlan plan = build_assignment(scenario);
  const CommChannelModel model(scenario);

  RandomStream norm_rng(derive_seed(setup_seed, "normalization"));
  const auto norm_scales = lp_mmse_norm_scales(model, plan, scenario, n_norm, norm_rng);
  RandomStream mc_rng(derive_seed(setup_seed, "comm-mc"));
  CommSinrModel comm = estimate_comm_sinr_terms(scenario, plan, model, norm_scales, n_mc, mc_rng);

  // Frozen per-setup realization: channel estimate, precoders, symbol block.
  RandomStream real_rng(derive_seed(setup_seed, "channels"));
  const CommChannelSet channels = model.draw(real_rng);
  const ChannelEstimateSet estimate = model.estimate(channels, real_rng);
  PrecoderSet precoders = lp_mmse_precoders(estimate, plan, scenario, norm_scales);
  mrt_sensing_precoders(scenario, plan, precoders);
  CombinerSet combiners = mrc_combiners(scenario, plan);
  RandomStream sym_rng(derive_seed(setup_seed, "symbols"));
  SymbolBlock symbols = draw_symbols(plan.K, plan.S, cfg.tau_s, sym_rng);
  SensingQuadraticForms forms = sensing_quadratic_forms(
      build_sensing_vectors(scenario, plan, precoders, combiners, symbols), scenario.noise_power());
  return {std::move(scenario), std::move(plan),    std::move(comm), std::move(precoders),
          std::move(combiners), std::move(symbols), std::move(forms)};
}

std::vector<SetupOutcome> run_setup(const SystemConfig& cfg, const CcpConfig& ccp_in, const DetectorConfig& det,
                                    const std::vector<double>& v_exponents, std::uint64_t setup_seed,
                                    const SetupOptions& opt) {
  const SetupArtifacts art = prepare_setup(cfg, setup_seed, opt.n_mc, opt.n_norm);
  const Scenario& scenario = art.scenario;
  const AssignmentPlan& plan = art.plan;
  const CommSinrModel& comm = art.comm;
  const SensingQuadraticForms& forms = art.forms;
  const PrecoderSet& precoders = art.precoders;

  CcpConfig ccp = ccp_in;
  ccp.ap_power = cfg.P_tx;
  ccp.seed = derive_seed(setup_seed, "ccp");
  const CcpResult result =
      ccp_power_allocation(comm, forms, plan, ccp, PowerVector::equal_split(plan, cfg.P_tx));
  if (opt.trace) *opt.trace = result.trace;
  const PowerVector& power = result.state.rho;
  power.check_feasible(plan, cfg.P_tx, 1e-9);

  SetupOutcome base;
  base.seed = setup_seed;
  base.min_comm_sinr = comm_sinr(comm, power).minCoeff();
  base.min_sensing_sinr = sensing_sinr(forms, power).minCoeff();
  base.gamma_s = result.state.gamma_s;
  base.gamma_c = result.state.gamma_c;
  base.ccp_iterations = result.state.iteration;
  base.ccp_converged = result.state.converged;
  base.min_pd = nan();

  std::vector<SetupOutcome> out(v_exponents.size(), base);
  if (!opt.detection) return out;
  const DetectionEngine engine(scenario, plan, precoders, power);
  DetectionRunOptions dopt;
  dopt.seed = derive_seed(setup_seed, "detection");
  dopt.threads = opt.threads;
  const auto reports = run_detection(engine, scenario, det, v_exponents, dopt);
  for (std::size_t w = 0; w < reports.size(); ++w) {
    out[w].min_pd = reports[w].min_pd;
    for (const auto& s : reports[w].ssa) {
      out[w].ssa_pd.push_back(s.pd);
      out[w].ssa_pfa.push_back(s.empirical_pfa);
    }
    out[w].pis_nonconverged = reports[w].pis_nonconverged;
  }
  return out;
}

std::string config_hash(const ExperimentSpec& spec, double value) {
  SystemConfig cfg = spec.base;
  CcpConfig ccp = spec.ccp;
  DetectorConfig det = spec.detector;
  if (spec.sweep) apply_sweep_value(spec.sweep->param, value, cfg, ccp, det);
  const nlohmann::json j = {{"config", cfg},         {"ccp", ccp},           {"detector", det},
                            {"detection", spec.detection}, {"n_setups", spec.n_setups}, {"seed", spec.seed},
                            {"n_mc", spec.n_mc},     {"n_norm", spec.n_norm}};
  return stable_hash(j.dump());
}

namespace {

SweepRow summarize(const ExperimentSpec& spec, double value, const std::vector<SetupOutcome>& outs) {
  SweepRow row;
  row.sweep_value = value;
  row.n_setups = static_cast<int>(outs.size());
  row.config_hash = config_hash(spec, value);
  double pd = 0.0, var = 0.0, comm_db = 0.0, sens_db = 0.0, conv = 0.0;
  for (const auto& o : outs) {
    pd += o.min_pd;
    var += o.min_pd * (1.0 - o.min_pd) / std::max(1, spec.detector.n_trials);
    comm_db += linear_to_db(o.min_comm_sinr);
    sens_db += linear_to_db(o.min_sensing_sinr);
    conv += o.ccp_converged ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(outs.size());
  row.min_detection_prob = spec.detection ? pd / n : nan();
  row.min_pd_stderr = spec.detection ? std::sqrt(var) / n : nan();
  row.mean_min_comm_sinr_db = comm_db / n;
  row.mean_min_sensing_sinr_db = sens_db / n;
  row.ccp_converged_fraction = conv / n;
  return row;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, bool emit_on_failure) {
  spec.validate();
  ExperimentReport report;
  report.name = spec.name;
  report.param = spec.sweep ? spec.sweep->param : "none";
  report.seed = spec.seed;
  const std::vector<double> values = spec.sweep ? spec.sweep->values : std::vector<double>{0.0};
  const bool weight_sweep = spec.sweep && spec.sweep->param == "v_exponent";

  SetupOptions opt;
  opt.n_mc = spec.n_mc;
  opt.n_norm = spec.n_norm;
  opt.threads = spec.threads;
  opt.detection = spec.detection;

  // A weight sweep shares every upstream step, so all exponents are scored on
  // the same trials of one pipeline run per setup.
  const std::vector<std::vector<double>> groups =
      weight_sweep ? std::vector<std::vector<double>>{values} : [&] {
        std::vector<std::vector<double>> g;
        for (double v : values) g.push_back({v});
        return g;
      }();

  std::vector<std::vector<SetupOutcome>> per_value(values.size());
  std::vector<double> elapsed(values.size(), 0.0);
  std::size_t value_base = 0;
  for (const auto& group : groups) {
    SystemConfig cfg = spec.base;
    CcpConfig ccp = spec.ccp;
    DetectorConfig det = spec.detector;
    if (spec.sweep && !weight_sweep) apply_sweep_value(spec.sweep->param, group.front(), cfg, ccp, det);
    const std::vector<double> exponents = weight_sweep ? group : std::vector<double>{det.v_exponent};
    for (int k = 0; k < spec.n_setups; ++k) {
      const std::uint64_t setup_seed = derive_seed(spec.seed, "setup", static_cast<std::uint64_t>(k));
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const auto outs = run_setup(cfg, ccp, det, exponents, setup_seed, opt);
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (std::size_t w = 0; w < outs.size(); ++w) {
          per_value[value_base + w].push_back(outs[w]);
          elapsed[value_base + w] += dt / static_cast<double>(outs.size());
          report.setups.push_back({values[value_base + w], k, outs[w]});
        }
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "experiment '" << spec.name << "' failed at sweep value " << format_double(group.front())
            << ", setup " << k << " (seed " << setup_seed << "): " << e.what();
        report.partial = true;
        report.error = msg.str();
        for (std::size_t v = 0; v < values.size(); ++v)
          if (!per_value[v].empty() && static_cast<int>(per_value[v].size()) == spec.n_setups)
            report.rows.push_back(summarize(spec, values[v], per_value[v]));
        if (emit_on_failure) {
          try {
            emit_results(report, spec, spec.output_dir);
          } catch (const std::exception&) {
            // the original failure is the one worth reporting
          }
        }
        throw ExperimentFailure(msg.str());
      }
    }
    value_base += group.size();
  }
  for (std::size_t v = 0; v < values.size(); ++v) {
    report.rows.push_back(summarize(spec, values[v], per_value[v]));
    report.rows.back().wall_time = elapsed[v];
  }
  return report;
}

void write_summary_csv(std::ostream& os, const ExperimentReport& r) {
  os << "sweep_param,sweep_value,min_detection_prob,min_pd_stderr,mean_min_comm_sinr_db,"
        "mean_min_sensing_sinr_db,ccp_converged_fraction,n_setups,config_hash\n";
  for (const auto& row : r.rows)
    os << r.param << ',' << format_double(row.sweep_value) << ',' << format_double(row.min_detection_prob) << ','
       << format_double(row.min_pd_stderr) << ',' << format_double(row.mean_min_comm_sinr_db) << ','
       << format_double(row.mean_min_sensing_sinr_db) << ',' << format_double(row.ccp_converged_fraction) << ','
       << row.n_setups << ',' << row.config_hash << '\n';
}

void write_setups_csv(std::ostream& os, const ExperimentReport& r) {
  os << "sweep_param,sweep_value,setup,seed,min_pd,min_comm_sinr_db,min_sensing_sinr_db,gamma_s,gamma_c,"
        "ccp_iterations,ccp_converged,config_hash\n";
  std::vector<std::pair<double, std::string>> hashes;
  for (const auto& row : r.rows) hashes.emplace_back(row.sweep_value, row.config_hash);
  for (const auto& s : r.setups) {
    std::string hash;
    for (const auto& [v, h] : hashes)
      if (v == s.sweep_value) hash = h;
    const auto& o = s.outcome;
    os << r.param << ',' << format_double(s.sweep_value) << ',' << s.setup << ',' << o.seed << ','
       << format_double(o.min_pd) << ',' << format_double(linear_to_db(o.min_comm_sinr)) << ','
       << format_double(linear_to_db(o.min_sensing_sinr)) << ',' << format_double(o.gamma_s) << ','
       << format_double(o.gamma_c) << ',' << o.ccp_iterations << ',' << (o.ccp_converged ? 1 : 0) << ',' << hash
       << '\n';
  }
}

void emit_results(const ExperimentReport& report, const ExperimentSpec& spec, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  auto open = [&](const std::string& file) {
    const std::string path = (std::filesystem::path(dir) / (report.name + file)).string();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    return os;
  };
  {
    auto os = open("_summary.csv");
    write_summary_csv(os, report);
  }
  {
    auto os = open("_setups.csv");
    write_setups_csv(os, report);
  }
  nlohmann::json manifest = {
      {"name", report.name},
      {"seed", report.seed},
      {"spec", spec},
      {"config_hashes", nlohmann::json::array()},
      {"versions",
       {{"cfisac", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"report", report}};
  for (const auto& row : report.rows) manifest["config_hashes"].push_back(row.config_hash);
  auto os = open("_manifest.json");
  os << manifest.dump(2) << '\n';
}

void to_json(nlohmann::json& j, const ExperimentSpec& s) {
  j = {{"name", s.name},           {"base", s.base},         {"n_setups", s.n_setups},
       {"seed", s.seed},           {"detector", s.detector}, {"ccp", s.ccp},
       {"detection", s.detection}, {"n_mc", s.n_mc},         {"n_norm", s.n_norm},
       {"threads", s.threads},     {"output_dir", s.output_dir}};
  if (s.sweep) j["sweep"] = {{"param", s.sweep->param}, {"values", s.sweep->values}};
}

void from_json(const nlohmann::json& j, ExperimentSpec& s) {
  static const char* known[] = {"name", "base", "sweep", "n_setups", "seed", "detector", "ccp",
                                "detection", "n_mc", "n_norm", "threads", "output_dir"};
  for (const auto& [key, _] : j.items())
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; }))
      throw ConfigError("unknown experiment spec key '" + key + "'");
  ExperimentSpec d;
  s.name = j.value("name", d.name);
  s.base = j.contains("base") ? j.at("base").get<SystemConfig>() : d.base;
  s.sweep.reset();
  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    s.sweep = SweepSpec{sw.at("param").get<std::string>(), sw.at("values").get<std::vector<double>>()};
  }
  s.n_setups = j.value("n_setups", d.n_setups);
  s.seed = j.value("seed", d.seed);
  s.detector = j.contains("detector") ? j.at("detector").get<DetectorConfig>() : d.detector;
  s.ccp = j.contains("ccp") ? j.at("ccp").get<CcpConfig>() : d.ccp;
  s.detection = j.value("detection", d.detection);
  s.n_mc = j.value("n_mc", d.n_mc);
  s.n_norm = j.value("n_norm", d.n_norm);
  s.threads = j.value("threads", d.threads);
  s.output_dir = j.value("output_dir", d.output_dir);
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file '" + path + "'");
  ExperimentSpec spec;
  try {
    nlohmann::json j;
    in >> j;
    spec = j.get<ExperimentSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad spec file '" + path + "': " + e.what());
  }
  spec.validate();
  return spec;
}

void to_json(nlohmann::json& j, const SweepRow& r) {
  j = {{"sweep_value", r.sweep_value},
       {"min_detection_prob", r.min_detection_prob},
       {"min_pd_stderr", r.min_pd_stderr},
       {"mean_min_comm_sinr_db", r.mean_min_comm_sinr_db},
       {"mean_min_sensing_sinr_db", r.mean_min_sensing_sinr_db},
       {"ccp_converged_fraction", r.ccp_converged_fraction},
       {"n_setups", r.n_setups},
       {"config_hash", r.config_hash},
       {"wall_time", r.wall_time}};
}

void from_json(const nlohmann::json& j, SweepRow& r) {
  r.sweep_value = number_or_nan(j.at("sweep_value"));
  r.min_detection_prob = number_or_nan(j.at("min_detection_prob"));
  r.min_pd_stderr = number_or_nan(j.at("min_pd_stderr"));
  r.mean_min_comm_sinr_db = number_or_nan(j.at("mean_min_comm_sinr_db"));
  r.mean_min_sensing_sinr_db = number_or_nan(j.at("mean_min_sensing_sinr_db"));
  r.ccp_converged_fraction = number_or_nan(j.at("ccp_converged_fraction"));
  r.n_setups = j.at("n_setups").get<int>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.wall_time = number_or_nan(j.at("wall_time"));
}

namespace {

nlohmann::json outcome_json(const SetupOutcome& o) {
  return {{"seed", o.seed},
          {"min_pd", o.min_pd},
          {"ssa_pd", o.ssa_pd},
          {"ssa_pfa", o.ssa_pfa},
          {"min_comm_sinr", o.min_comm_sinr},
          {"min_sensing_sinr", o.min_sensing_sinr},
          {"gamma_s", o.gamma_s},
          {"gamma_c", o.gamma_c},
          {"ccp_iterations", o.ccp_iterations},
          {"ccp_converged", o.ccp_converged},
          {"pis_nonconverged", o.pis_nonconverged}};
}

SetupOutcome outcome_from_json(const nlohmann::json& j) {
  SetupOutcome o;
  o.seed = j.at("seed").get<std::uint64_t>();
  o.min_pd = number_or_nan(j.at("min_pd"));
  for (const auto& x : j.at("ssa_pd")) o.ssa_pd.push_back(number_or_nan(x));
  for (const auto& x : j.at("ssa_pfa")) o.ssa_pfa.push_back(number_or_nan(x));
  o.min_comm_sinr = number_or_nan(j.at("min_comm_sinr"));
  o.min_sensing_sinr = number_or_nan(j.at("min_sensing_sinr"));
  o.gamma_s = number_or_nan(j.at("gamma_s"));
  o.gamma_c = number_or_nan(j.at("gamma_c"));
  o.ccp_iterations = j.at("ccp_iterations").get<int>();
  o.ccp_converged = j.at("ccp_converged").get<bool>();
  o.pis_nonconverged = j.at("pis_nonconverged").get<int>();
  return o;
}

}  // namespace

void to_json(nlohmann::json& j, const ExperimentReport& r) {
  nlohmann::json setups = nlohmann::json::array();
  for (const auto& s : r.setups)
    setups.push_back({{"sweep_value", s.sweep_value}, {"setup", s.setup}, {"outcome", outcome_json(s.outcome)}});
  j = {{"name", r.name}, {"param", r.param},     {"seed", r.seed},       {"rows", r.rows},
       {"setups", setups}, {"partial", r.partial}, {"error", r.error}};
}

void from_json(const nlohmann::json& j, ExperimentReport& r) {
  r.name = j.at("name").get<std::string>();
  r.param = j.at("param").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.rows = j.at("rows").get<std::vector<SweepRow>>();
  r.setups.clear();
  for (const auto& s : j.at("setups"))
    r.setups.push_back({number_or_nan(s.at("sweep_value")), s.at("setup").get<int>(), outcome_from_json(s.at("outcome"))});
  r.partial = j.at("partial").get<bool>();
  r.error = j.at("error").get<std::string>();
}

namespace {

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse sweep value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--values is empty");
  return out;
}

void print_rows(const ExperimentReport& report) {
  write_summary_csv(std::cout, report);
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Cell-free ISAC simulator: power allocation and distributed target detection", "cfisac"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir;
  app.add_option("--seed", seed, "Master seed (overrides the spec file)");
  app.add_option("--threads", threads, "Worker threads for Monte Carlo trials")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory (overrides the spec file)");

  std::string spec_path, bundle_path, param, values;
  auto* run = app.add_subcommand("run", "Run the experiment described by a spec file");
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate detection thresholds for the first setup of a spec file");
  calibrate->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  auto* sweep = app.add_subcommand("sweep", "Run a spec with the sweep replaced on the command line");
  sweep->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  sweep->add_option("--param", param, "sigma_rcs2 | omega0 | v_exponent | R | T | S")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  auto* validate = app.add_subcommand("validate", "Run the built-in oracle and property checks");
  auto* power = app.add_subcommand("power", "Run the CCP power allocation on a serialized bundle");
  power->add_option("bundle", bundle_path, "Bundle JSON (plan, comm_model, sensing_forms, ccp, init)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*validate) return run_validation(std::cout) ? 0 : 1;

    if (*power) {
      std::ifstream in(bundle_path);
      if (!in) throw ConfigError("cannot open bundle '" + bundle_path + "'");
      PowerBundle bundle;
      try {
        bundle = nlohmann::json::parse(in).get<PowerBundle>();
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad bundle '" + bundle_path + "': " + e.what());
      }
      const CcpResult res = ccp_power_allocation(bundle.model, bundle.forms, bundle.plan, bundle.config, bundle.init);
      const std::string dir = out_dir.empty() ? "." : out_dir;
      std::filesystem::create_directories(dir);
      std::ofstream trace(std::filesystem::path(dir) / "ccp_trace.csv");
      write_ccp_trace_csv(trace, res.trace);
      std::ofstream state(std::filesystem::path(dir) / "ccp_state.json");
      state << nlohmann::json(res.state).dump(2) << '\n';
      std::cout << "gamma_s=" << res.state.gamma_s << " gamma_c=" << res.state.gamma_c
                << " iterations=" << res.state.iteration << " converged=" << res.state.converged << '\n';
      return 0;
    }

    ExperimentSpec spec = load_experiment_spec(spec_path);
    if (seed) spec.seed = *seed;
    if (threads) spec.threads = *threads;
    if (!out_dir.empty()) spec.output_dir = out_dir;

    if (*calibrate) {
      SystemConfig cfg = spec.base;
      CcpConfig ccp = spec.ccp;
      DetectorConfig det = spec.detector;
      if (spec.sweep) apply_sweep_value(spec.sweep->param, spec.sweep->values.front(), cfg, ccp, det);
      det.n_trials = 0;
      SetupOptions opt;
      opt.n_mc = spec.n_mc;
      opt.n_norm = spec.n_norm;
      opt.threads = spec.threads;
      const auto outs = run_setup(cfg, ccp, det, {det.v_exponent}, derive_seed(spec.seed, "setup", 0), opt);
      const nlohmann::json j = {{"seed", outs[0].seed}, {"ssa_empirical_pfa", outs[0].ssa_pfa},
                                {"gamma_s", outs[0].gamma_s}, {"gamma_c", outs[0].gamma_c}};
      std::cout << j.dump(2) << '\n';
      return 0;
    }

    if (*sweep) {
      if (!is_sweep_param(param)) throw ConfigError("unknown sweep parameter '" + param + "'");
      spec.sweep = SweepSpec{param, parse_values(values)};
      spec.validate();
    }
    const ExperimentReport report = run_experiment(spec);
    emit_results(report, spec, spec.output_dir);
    print_rows(report);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cfisac
