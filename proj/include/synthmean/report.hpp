#pragma once

#include "synthmean/cohort.hpp"
#include "synthmean/diagnostics.hpp"
#include "synthmean/estimators.hpp"
#include "synthmean/reference.hpp"
#include "synthmean/resampling.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace synthmean {

inline constexpr const char *kMethodCompleteCase = "complete_case";
inline constexpr const char *kMethodGcompLinear = "gcomp_linear";
inline constexpr const char *kMethodGcompSaturated = "gcomp_saturated";
inline constexpr const char *kMethodSynthesis = "synthesis";
inline constexpr const char *kMethodBounds = "bounds";
inline constexpr const char *kMethodDiagnostic = "diagnostic";

/// Everything that defines an analysis run. The JSON echo of this struct is
/// sufficient to reproduce the run byte for byte; the worker count is
/// deliberately not part of it (results do not depend on it).
struct RunConfig {
    std::string cohort_path;
    char delimiter = ',';
    ColumnMapping mapping;
    std::string reference_path; // may be empty when no method needs it
    int cutoff = 8;
    AgeRange age_range{2, 17};
    std::vector<std::string> methods = {kMethodCompleteCase, kMethodGcompLinear,
                                        kMethodSynthesis, kMethodBounds};
    std::uint64_t replicates = 20000;
    std::uint64_t seed = 1;
    double plug_lo = 70.0;
    double plug_hi = 120.0;
    std::string output_dir = ".";
    int diagnostic_point_draws = 100;

    /// Execution-only: not echoed, never influence results.
    int workers = 1;
    bool keep_replicates = false;

    nlohmann::ordered_json to_json() const;
    static RunConfig from_json(const nlohmann::ordered_json &j);

    /// Throws on unknown methods, duplicate methods, or inverted settings.
    void validate() const;
};

struct EstimateEntry {
    std::string method;
    bool ok = true;
    std::string error; // set when !ok

    double point = 0.0; // replicate median
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double sd = 0.0;
    double full_data_estimate = 0.0;
    std::uint64_t replicates_attempted = 0;
    std::uint64_t replicate_failures = 0;
    std::uint64_t seed = 0;
};

struct BoundsReport {
    BoundsResult bounds;
    double positive_region_mean = 0.0;
};

struct AnalysisReport {
    RunConfig config;
    ParseReport parse;
    std::size_t cohort_n = 0;
    double total_weight = 0.0;
    double weighted_pct_nonpositive = 0.0;
    std::vector<MissingnessRow> age_table;
    std::vector<EstimateEntry> estimates;
    std::optional<BoundsReport> bounds;
    std::optional<DiagnosticResult> diagnostic;
    std::vector<std::string> warnings;

    /// Per-method replicate values, populated only when
    /// config.keep_replicates is set (for --dump-replicates). Not part of
    /// the JSON report.
    std::vector<std::pair<std::string, std::vector<double>>> replicate_values;

    nlohmann::ordered_json to_json() const;
    /// Serialized report (2-space indent, trailing newline); this is what
    /// gets written to report.json and what determinism tests compare.
    std::string to_json_text() const;
};

/// Runs the configured analysis end to end. Deterministic given the config
/// (including the seed); the worker count never changes the result.
AnalysisReport run_analysis(const RunConfig &config);

/// Variant reusing an already-parsed cohort (the CLI parses once so the
/// parse report can be emitted even when estimation fails).
AnalysisReport run_analysis(const RunConfig &config, const ParseResult &parsed);

/// Writes the per-age participation table as CSV (age, n, weighted_pct,
/// n_missing, pct_missing).
void emit_table1(const Cohort &cohort, const std::filesystem::path &path);

/// Writes the three figure-data CSVs: <prefix>observed.csv,
/// <prefix>model_curves.csv, <prefix>simulated.csv. Simulated draws sample
/// each age's cohort composition uniformly, draws_per_age rows per age.
void emit_figure_data(const Cohort &cohort, const ReferenceTable &table,
                      const std::filesystem::path &prefix, std::size_t draws_per_age,
                      std::uint64_t seed);

/// Writes the diagnostic rows as CSV (age, stat_mean, math_mean, diff,
/// ci_lo, ci_hi).
void emit_diagnostic_csv(const DiagnosticResult &result, const std::filesystem::path &path);

/// Writes replicate values as a single-column CSV.
void emit_replicates_csv(std::span<const double> values, const std::filesystem::path &path);

nlohmann::ordered_json parse_report_json(const ParseReport &report);

/// Writes content to path via a temporary file and rename, so failed runs
/// never leave a partial file behind.
void write_file_atomic(const std::filesystem::path &path, const std::string &content);

} // namespace synthmean
