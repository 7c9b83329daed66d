#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfisac/config.hpp"
#include "cfisac/detection.hpp"
#include "cfisac/power.hpp"

namespace cfisac {

struct SweepSpec {
  std::string param;          ///< sigma_rcs2 (dBsm) | omega0 | v_exponent | R | T | S
  std::vector<double> values;
};

struct ExperimentSpec {
  std::string name = "experiment";
  SystemConfig base;
  std::optional<SweepSpec> sweep;
  int n_setups = 20;
  std::uint64_t seed = 1;
  DetectorConfig detector;
  CcpConfig ccp;
  bool detection = true;   ///< false skips calibration and detection trials
  int n_mc = 500;          ///< draws for the SINR expectation terms
  int n_norm = 200;        ///< draws for the precoder normalization
  int threads = 1;
  std::string output_dir = "results";

  void validate() const;
};

bool is_sweep_param(const std::string& name);

/// Applies one sweep value to copies of the base config, CCP and detector settings.
void apply_sweep_value(const std::string& param, double value, SystemConfig& cfg, CcpConfig& ccp,
                       DetectorConfig& det);

/// Everything upstream of the power allocation for one UE drop.
struct SetupArtifacts {
  Scenario scenario;
  AssignmentPlan plan;
  CommSinrModel comm;
  PrecoderSet precoders;   ///< one frozen estimate realization, with MRT sensing beams
  CombinerSet combiners;
  SymbolBlock symbols;
  SensingQuadraticForms forms;
};

SetupArtifacts prepare_setup(const SystemConfig& cfg, std::uint64_t setup_seed, int n_mc, int n_norm);

/// Outcome of the full pipeline for one UE drop.
struct SetupOutcome {
  std::uint64_t seed = 0;
  double min_pd = 0.0;             ///< NaN when detection is disabled
  std::vector<double> ssa_pd;
  std::vector<double> ssa_pfa;
  double min_comm_sinr = 0.0;      ///< linear, at the allocated power
  double min_sensing_sinr = 0.0;   ///< linear
  double gamma_s = 0.0, gamma_c = 0.0;
  int ccp_iterations = 0;
  bool ccp_converged = false;
  int pis_nonconverged = 0;
};

struct SetupOptions {
  int n_mc = 500;
  int n_norm = 200;
  int threads = 1;
  bool detection = true;
  std::vector<CcpTraceRow>* trace = nullptr;
};

/// scenario → assignment → SINR terms → CCP → calibration → detection.
/// One outcome per weighting exponent (all evaluated on the same trials).
std::vector<SetupOutcome> run_setup(const SystemConfig& cfg, const CcpConfig& ccp, const DetectorConfig& det,
                                    const std::vector<double>& v_exponents, std::uint64_t setup_seed,
                                    const SetupOptions& options);

struct SetupRecord {
  double sweep_value = 0.0;
  int setup = 0;
  SetupOutcome outcome;
};

struct SweepRow {
  double sweep_value = 0.0;
  double min_detection_prob = 0.0;  ///< mean over setups of the per-setup min P_d
  double min_pd_stderr = 0.0;       ///< binomial standard error of that mean
  double mean_min_comm_sinr_db = 0.0;
  double mean_min_sensing_sinr_db = 0.0;
  double ccp_converged_fraction = 0.0;
  int n_setups = 0;
  std::string config_hash;
  double wall_time = 0.0;           ///< seconds; kept out of the CSV
};

struct ExperimentReport {
  std::string name;
  std::string param;
  std::uint64_t seed = 0;
  std::vector<SweepRow> rows;
  std::vector<SetupRecord> setups;
  bool partial = false;
  std::string error;
};

class ExperimentFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs every sweep value × setup. On failure, the partial report is
/// written (when `emit_on_failure`) and ExperimentFailure names the sweep
/// value and setup seed.
ExperimentReport run_experiment(const ExperimentSpec& spec, bool emit_on_failure = true);

/// Hash of the effective configuration behind one sweep value.
std::string config_hash(const ExperimentSpec& spec, double sweep_value);

void write_summary_csv(std::ostream& os, const ExperimentReport& report);
void write_setups_csv(std::ostream& os, const ExperimentReport& report);
/// <dir>/<name>_summary.csv, <name>_setups.csv, <name>_manifest.json.
void emit_results(const ExperimentReport& report, const ExperimentSpec& spec, const std::string& dir);

void to_json(nlohmann::json& j, const ExperimentSpec& s);
void from_json(const nlohmann::json& j, ExperimentSpec& s);
ExperimentSpec load_experiment_spec(const std::string& path);

void to_json(nlohmann::json& j, const SweepRow& r);
void from_json(const nlohmann::json& j, SweepRow& r);
void to_json(nlohmann::json& j, const ExperimentReport& r);
void from_json(const nlohmann::json& j, ExperimentReport& r);

/// Command-line entry point; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace cfisac
