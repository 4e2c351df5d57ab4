#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmc.hpp"
#include "training.hpp"

namespace epinn::run {

// Schedule presets behind the --scale switch. Desk scale keeps every
// benchmark within laptop/CI budgets; paper scale matches the published
// training budgets.
struct Scale {
    long base_epochs;
    long epinet_epochs;
    long hmc_total;
    long hmc_burn_in;
    long M;
};

Scale desk_scale();  // 30000 / 5000, HMC 2500 / 500, M = 2000
Scale paper_scale(); // 100000 / 10000, HMC 11000 / 1000, M = 10000
Scale named_scale(const std::string& name);

struct ExperimentConfig {
    std::string scale = "desk";
    std::string problem = "poisson1d";
    std::string method = "epinn"; // epinn | dropout | bpinn
    double rho = 0.0;             // one of {0.0, 0.1, 0.3}
    double dropout_rate = -1.0;   // required iff method == dropout
    long base_epochs = 30000;
    long epinet_epochs = 5000;
    int n_colloc = 0;   // 0: problem default
    int n_sensors = -1; // <0: problem default
    std::vector<int> epinet_hidden{32, 32, 32};
    bayes::HmcConfig hmc{5e-5, 50, 500, 2500, 0};
    long M = 2000;
    double divergence_threshold = 1e8;
    std::uint64_t seed = 0;
    std::string out_dir = "out";

    void validate() const; // throws ConfigError
};

// JSON <-> config. parse applies the "scale" key first, then explicit keys
// (so a file can pin a scale and still override individual schedule fields);
// serialize emits every field, so serialize(parse(s)) is byte-stable.
// An optional "sweep" block is tolerated here and read by
// sweep_spec_from_json_text.
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);

// Re-pins the schedule fields (base/epinet epochs, HMC total/burn-in, M).
void apply_scale(ExperimentConfig& cfg, const std::string& name);

struct RunMetrics {
    double sharpness = 0.0;
    double coverage = 0.0;
    double rmse = 0.0;
    double time_s = 0.0;
    double time_epinet_s = 0.0;
};

struct KappaResult {
    double mean = 0.0;
    double std = 0.0;
};

struct RunRecord {
    ExperimentConfig config;
    std::string status = "ok"; // ok | failed
    std::string error;
    RunMetrics metrics;
    std::optional<KappaResult> kappa;

    // Paths are relative to config.out_dir; `files` lists every emitted file.
    std::string metrics_csv, prediction_csv, training_log_csv, epinet_training_log_csv;
    std::string checkpoint_base, checkpoint_epinet, chain_file;
    std::string kappa_csv, kappa_histogram_csv;
    std::string config_json, record_json;
    std::vector<std::string> files;
};

std::string record_to_json_text(const RunRecord& rec);

// Trains (or samples), evaluates on the validation grid, and writes the
// run directory. Divergence is reported through the returned record
// (status = "failed") with whatever logs were produced; config errors throw.
RunRecord run(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepSpec {
    std::string axis;           // n_colloc | epinet_width | epinet_epochs | base_epochs | rho
    std::vector<double> values; // empty + use_default_grid: the built-in grid
    bool use_default_grid = true;
    ExperimentConfig base;
};

// Reads the config file's "sweep" block ({"axis": ..., "values": [...]})
// along with the base config; a missing block throws ConfigError.
SweepSpec sweep_spec_from_json_text(const std::string& text);

// Built-in desk-scaled ablation grid for one axis.
std::vector<double> default_grid(const std::string& axis);

struct SweepResult {
    std::vector<RunRecord> records;
    std::string aggregate_csv; // relative to base.out_dir
    bool any_failed = false;
};

// Runs every grid value sequentially; individual failures are recorded in
// the aggregate table and the sweep continues.
SweepResult sweep(const SweepSpec& spec);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct ReportResult {
    std::string report_csv;              // consolidated metrics table
    std::string kappa_csv;               // present when any run has kappa rows
    std::vector<std::string> band_files; // one per run, mean +/- 2 sigma vs x
};

// Merges completed run directories into one table (rows sorted by
// (rho, method)) and emits plot-ready band files.
ReportResult report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Check
// ---------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Fast self-contained oracle/invariant suite; when run_dir is non-empty the
// directory's artifacts are validated against the pinned schemas as well.
std::vector<CheckResult> check(const std::string& run_dir = {});

} // namespace epinn::run
