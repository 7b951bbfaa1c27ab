#pragma once
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rwrp/potential.hpp"
#include "rwrp/walk.hpp"

namespace rwrp {

// Driver configuration for one experiment run.  The on-disk format is JSON
// with nested sections and self-describing key names (units and meanings in
// the name, e.g. walk.drift_h, disorder.beta, walk.dimension_d).  Parsing is
// strict: an unknown key at any nesting level is an error, as is a value of
// the wrong shape.  Every field except io.out_dir and budget_nodes is
// semantic: it changes computed numbers and therefore enters the config hash.
struct ExperimentConfig {
    std::string experiment;

    // walk
    int dimension_d = 2;
    double drift_h = 1.0;

    // potential + disorder strength
    PotentialSpec potential;
    double beta = 0.0;
    std::vector<double> beta_grid;

    // path lengths
    int n_steps = 6;
    std::vector<int> n_grid;

    // series / renewal geometry
    int level_l = 1;
    int span_window_l = 6;
    int period_p = 1;
    int k_cap = 24;
    double tol = 1e-8;

    // strip chain
    int cutoff = 6;
    int span_max = 5;
    long long sigma_max_steps = 1000;
    double max_uncaptured = 0.5;

    // sampling
    long long n_samples = 10000;
    long long n_envs = 200;
    uint64_t master_seed = 1;

    // checks
    double slack = 1e-6;
    double k_restrict_cap = 2.0;
    std::array<int, 8> offset_dy{};

    // non-semantic
    std::string out_dir = "runs";
    double budget_nodes = 5e7;
};

// the experiment names accepted by run_experiment, in dispatch order
const std::vector<std::string>& experiment_names();

// per-experiment defaults sized to finish in seconds; throws
// std::invalid_argument for an unknown experiment name
ExperimentConfig default_config(const std::string& experiment);

// strict parse of the nested JSON described above; unknown keys are errors
ExperimentConfig parse_config_json(const std::string& text);

// deterministic serialization of the semantic fields (fixed key order,
// %.17g numbers); excludes io.out_dir and budget_nodes
std::string canonical_config(const ExperimentConfig& cfg);

// FNV-1a 64 over canonical_config: configs that could compute different
// numbers (including tolerances) hash differently
uint64_t config_hash(const ExperimentConfig& cfg);

// One run's persisted result.  scalars/verdicts/tables are fully determined
// by (config, master_seed); wall_ms is informational and is written to
// timings.jsonl only, never to records.jsonl or CSVs, so identical reruns
// produce byte-identical record files.
struct RunRecord {
    int schema_version = 1;
    std::string tool_version;
    std::string experiment;
    uint64_t config_hash = 0;
    uint64_t master_seed = 0;
    bool pass = false;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::string> verdicts;  // "check: PASS ..." / "check: FAIL ..."
    // named tables; header column count fixes the row shape
    std::map<std::string, std::vector<std::string>> table_headers;
    std::map<std::string, std::vector<std::vector<double>>> tables;
    double wall_ms = 0.0;
};

// serialize one record as a single canonical JSON line (no timing fields)
std::string record_json_line(const RunRecord& rec);

// dispatch on cfg.experiment; throws std::invalid_argument for an unknown
// name and BudgetExceeded when an engine refuses the node budget
RunRecord run_experiment(const ExperimentConfig& cfg);

// append the record line to <out_dir>/records.jsonl, the wall time to
// <out_dir>/timings.jsonl, and rewrite one CSV per table (CSVs are derived
// views of the record, never primary data)
void write_records(const ExperimentConfig& cfg, const RunRecord& rec);

// write one named table as CSV: header line + %.12g rows (12 significant
// digits round-trip doubles in these magnitudes); header-only when the table
// is empty; throws std::invalid_argument for an unknown table name
void emit_csv(const RunRecord& rec, const std::string& table,
              const std::string& path);

// exit codes: 0 success, 1 experiment ran but a check failed, 2 usage /
// unknown experiment / bad config (nothing written in that case)
int cli_main(int argc, char** argv);

} // namespace rwrp
