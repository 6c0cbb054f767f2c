#pragma once

// Sweep orchestration: experiment configs, deterministic seeded runs over a
// parameter grid, resumable CSV output, and aggregation.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "idbc/channel.hpp"
#include "idbc/id_dmc.hpp"

namespace idbc {

// Grid axes in nesting order n (outermost), rates, messages, eps, mu. The
// rate and message tuple arities are fixed by the scheme:
//   dmc: rates (pool, bin),          messages (m)
//   bc:  rates (pool, bin_y, bin_z), messages (m_y, m_z)
//   bc3: rates (pool, b1, b2, b3),   messages (m1, m2, m3)
//   cm:  rates (pool, bin_y, bin_z), messages (m, m_y, m_z)
//   fb:  rates (pool, bin_z, rate_y_hat), messages (m_y, m_z)
struct GridAxes {
    std::vector<int> n;
    std::vector<std::vector<double>> rates;
    std::vector<std::vector<std::int64_t>> messages;
    std::vector<double> eps;
    std::vector<double> mu;  // optional concentration axis, dmc only
};

struct ExperimentConfig {
    std::string channel_path;
    std::string scheme;  // dmc | bc | bc3 | cm | fb
    GridAxes grid;
    std::vector<std::uint64_t> seeds;
    EvalOptions eval;
    std::string criterion = "avg";  // bc only: avg | max
    std::vector<double> input_pmf;  // empty = uniform over the channel input
    double eps_tc = 2.0;            // fb transmission-decoder slack
    std::int64_t memory_budget = std::int64_t{1} << 28;
    std::string output_path;  // empty = keep records in memory only
};

// JSON config file; relative channel and output paths resolve against the
// config file's directory.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir);

// 64-bit FNV-1a over the canonical config serialization plus the channel
// file bytes, as 16 hex digits; stable across platforms.
std::string config_hash(const ExperimentConfig& cfg);

std::int64_t grid_point_count(const ExperimentConfig& cfg);

struct GridPoint {
    std::int64_t index = 0;
    int n = 0;
    std::vector<double> rates;
    std::vector<std::int64_t> messages;
    double eps = 0.0;
    std::optional<double> mu;
};

GridPoint grid_point_at(const ExperimentConfig& cfg, std::int64_t index);

// Runs every grid point through the scheme's validator and returns the flags
// verbatim with the grid index prefixed; empty means the sweep may start.
// Structural problems (unknown scheme, wrong channel kind, wrong tuple
// arity) throw instead of flagging.
std::vector<std::string> validate_config(const ExperimentConfig& cfg, const Channel& ch);

struct RunRecord {
    std::string config_hash;
    std::string scheme;
    std::int64_t grid_index = 0;
    std::uint64_t seed = 0;
    int n = 0;
    std::string status = "ok";  // ok | budget | error
    std::string detail;         // evaluation method or the failure message
    // Headline error quantities; sides a scheme does not have stay empty.
    // The three-receiver code maps receivers 0/1/2 onto y/z/w.
    std::optional<double> y_max_missed;
    std::optional<double> y_max_wrong;
    std::optional<double> z_max_missed;
    std::optional<double> z_max_wrong;
    std::optional<double> w_max_missed;
    std::optional<double> w_max_wrong;
    std::optional<bool> gmu_pass;  // dmc points with a mu coordinate
    double wall_seconds = 0.0;     // informational; never serialized
};

std::string run_record_csv_header();
std::string run_record_to_csv(const RunRecord& rec);

struct SweepResult {
    std::vector<RunRecord> records;  // grid-major, seeds inner
    std::int64_t computed = 0;       // records computed by this invocation
    std::int64_t reused = 0;         // records restored from the output file
    bool all_ok = true;              // every record finished with status ok
};

// Deterministic, resumable sweep. Existing output rows whose config hash
// matches are kept and their work skipped; a hash mismatch rewrites the file
// from scratch. Budget violations are recorded on the affected record and
// the sweep continues. jobs = 0 reads IDBC_WORKERS and falls back to 1;
// results land in grid order regardless of the worker count.
SweepResult run_sweep(const ExperimentConfig& cfg, int jobs = 0);

struct QuantityStats {
    std::string quantity;
    double median = 0.0;
    double ci_low = 0.0;   // order-statistic 95% interval around the median
    double ci_high = 0.0;
    std::int64_t count = 0;
};

struct PointSummary {
    std::int64_t grid_index = 0;
    int n = 0;
    std::vector<QuantityStats> stats;  // over records with status ok
    std::int64_t failed = 0;           // non-ok records, flagged not dropped
};

struct SlopeFit {
    std::int64_t group = 0;  // index within the non-n axes
    std::string quantity;
    double slope = 0.0;
    double intercept = 0.0;
    std::int64_t points_used = 0;
};

struct Summary {
    std::vector<PointSummary> points;
    std::vector<SlopeFit> slopes;
    std::int64_t failed_records = 0;
};

// Medians with confidence intervals per grid point, plus least-squares
// slopes of ln(median error) against n across grid points that differ only
// in n. Medians enter a fit only when positive and below 0.5, and a fit
// needs at least two such points.
Summary summarize(const ExperimentConfig& cfg, const std::vector<RunRecord>& records);

}  // namespace idbc
