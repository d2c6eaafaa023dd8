#include "synthmean/csv.hpp"
#include "synthmean/errors.hpp"
#include "synthmean/report.hpp"
#include "synthmean/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using synthmean::RunConfig;

namespace {

struct CliState {
    RunConfig config;
    std::string config_path;
    bool dump_replicates = false;

    // simulate/figures extras
    std::size_t draws = 20000;
    std::vector<int> sim_ages;
    std::string sim_gender = "both";
    double sim_percentile = 50.0;
};

void add_shared_options(CLI::App *cmd, CliState &state, bool with_cohort,
                        bool with_reference) {
    if (with_cohort) {
        cmd->add_option("--cohort", state.config.cohort_path, "Cohort CSV path");
        cmd->add_option("--col-id", state.config.mapping.id, "Column name for the id");
        cmd->add_option("--col-age", state.config.mapping.age, "Column name for age");
        cmd->add_option("--col-gender", state.config.mapping.gender,
                        "Column name for gender");
        cmd->add_option("--col-height", state.config.mapping.height,
                        "Column name for height (cm)");
        cmd->add_option("--col-readings", state.config.mapping.readings,
                        "Reading column names (1-3)")
            ->expected(1, 3);
        cmd->add_option("--col-weight", state.config.mapping.weight,
                        "Column name for the sampling weight");
        cmd->add_option_function<std::string>(
            "--col-height-percentile",
            [&state](const std::string &value) {
                state.config.mapping.height_percentile = value;
            },
            "Column of precomputed height percentiles (skips the empirical computation)");
        cmd->add_option("--age-min", state.config.age_range.min, "Minimum retained age");
        cmd->add_option("--age-max", state.config.age_range.max, "Maximum retained age");
    }
    if (with_reference) {
        cmd->add_option("--reference", state.config.reference_path,
                        "Reference distribution CSV path");
    }
    cmd->add_option("--delimiter", state.config.delimiter, "Field delimiter");
    cmd->add_option("--cutoff", state.config.cutoff,
                    "Positivity cutoff age (ages below it form the nonpositive region)");
    cmd->add_option("--seed", state.config.seed, "Root random seed");
    cmd->add_option("--replicates", state.config.replicates, "Bootstrap replicate count");
    cmd->add_option("--workers", state.config.workers,
                    "Worker threads for the replicate loop (1 = serial, 0 = all cores)");
    cmd->add_option("--bounds", [&state](const std::vector<std::string> &values) {
            if (values.size() != 2) {
                return false;
            }
            const auto lo = synthmean::parse_double(values[0]);
            const auto hi = synthmean::parse_double(values[1]);
            if (!lo || !hi) {
                return false;
            }
            state.config.plug_lo = *lo;
            state.config.plug_hi = *hi;
            return true;
        },
        "Plug-in bound values LO HI for the nonpositive-region mean (mm Hg)")
        ->expected(2);
    cmd->add_option("--output-dir", state.config.output_dir, "Output directory");
    cmd->add_option("--config", state.config_path,
                    "Load a run configuration from a JSON file (a report's config echo "
                    "works); explicit flags override it");
}

RunConfig assemble_config(const CLI::App *cmd, const CliState &state) {
    if (state.config_path.empty()) {
        return state.config;
    }
    std::ifstream in(state.config_path);
    if (!in) {
        throw synthmean::SchemaError("cannot open config file '" + state.config_path + "'");
    }
    nlohmann::ordered_json j;
    in >> j;
    RunConfig config = RunConfig::from_json(j);
    config.workers = state.config.workers;

    // Explicit flags beat the loaded file.
    auto given = [cmd](const std::string &name) {
        const auto *opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--cohort")) config.cohort_path = state.config.cohort_path;
    if (given("--reference")) config.reference_path = state.config.reference_path;
    if (given("--delimiter")) config.delimiter = state.config.delimiter;
    if (given("--cutoff")) config.cutoff = state.config.cutoff;
    if (given("--seed")) config.seed = state.config.seed;
    if (given("--replicates")) config.replicates = state.config.replicates;
    if (given("--age-min")) config.age_range.min = state.config.age_range.min;
    if (given("--age-max")) config.age_range.max = state.config.age_range.max;
    if (given("--bounds")) {
        config.plug_lo = state.config.plug_lo;
        config.plug_hi = state.config.plug_hi;
    }
    if (given("--output-dir")) config.output_dir = state.config.output_dir;
    if (given("--col-id")) config.mapping.id = state.config.mapping.id;
    if (given("--col-age")) config.mapping.age = state.config.mapping.age;
    if (given("--col-gender")) config.mapping.gender = state.config.mapping.gender;
    if (given("--col-height")) config.mapping.height = state.config.mapping.height;
    if (given("--col-readings")) config.mapping.readings = state.config.mapping.readings;
    if (given("--col-weight")) config.mapping.weight = state.config.mapping.weight;
    if (given("--col-height-percentile")) {
        config.mapping.height_percentile = state.config.mapping.height_percentile;
    }
    return config;
}

void apply_output_dir_env(const CLI::App *cmd, RunConfig &config) {
    const auto *opt = cmd->get_option_no_throw("--output-dir");
    const bool flag_given = opt != nullptr && opt->count() > 0;
    const char *env = std::getenv("SYNTHMEAN_OUTPUT_DIR");
    if (!flag_given && env != nullptr && env[0] != '\0') {
        config.output_dir = env;
    }
}

fs::path ensure_output_dir(const RunConfig &config) {
    const fs::path dir(config.output_dir);
    if (!dir.empty()) {
        fs::create_directories(dir);
    }
    return dir;
}

synthmean::ParseResult parse_cohort_file(const RunConfig &config) {
    std::ifstream in(config.cohort_path);
    if (!in) {
        throw synthmean::SchemaError("cannot open cohort file '" + config.cohort_path + "'");
    }
    return synthmean::parse_cohort(in, config.mapping, config.cutoff, config.age_range,
                                   config.delimiter);
}

void write_parse_report(const synthmean::ParseReport &report, const fs::path &dir) {
    synthmean::write_file_atomic(dir / "parse_report.json",
                                 synthmean::parse_report_json(report).dump(2) + "\n");
}

int run_report_command(const CLI::App *cmd, CliState &state,
                       const std::vector<std::string> &methods) {
    RunConfig config = assemble_config(cmd, state);
    apply_output_dir_env(cmd, config);
    if (!methods.empty()) {
        config.methods = methods;
    }
    config.keep_replicates = state.dump_replicates;
    config.validate();

    const fs::path dir = ensure_output_dir(config);
    const synthmean::ParseResult parsed = parse_cohort_file(config);
    write_parse_report(parsed.report, dir);

    const synthmean::AnalysisReport report = synthmean::run_analysis(config, parsed);
    synthmean::write_file_atomic(dir / "report.json", report.to_json_text());
    synthmean::emit_table1(parsed.cohort, dir / "table1.csv");
    if (report.diagnostic) {
        synthmean::emit_diagnostic_csv(*report.diagnostic, dir / "diagnostic.csv");
    }
    for (const auto &[method, values] : report.replicate_values) {
        synthmean::emit_replicates_csv(values, dir / ("replicates_" + method + ".csv"));
    }

    std::cout << "report: " << (dir / "report.json").string() << "\n";
    for (const auto &e : report.estimates) {
        if (e.ok) {
            std::cout << "  " << e.method << ": " << synthmean::format_double(e.point)
                      << " (95% CI: " << synthmean::format_double(e.ci_lower) << ", "
                      << synthmean::format_double(e.ci_upper) << ")\n";
        } else {
            std::cout << "  " << e.method << ": not estimable (" << e.error << ")\n";
        }
    }
    if (report.bounds) {
        std::cout << "  bounds: [" << synthmean::format_double(report.bounds->bounds.lower)
                  << ", " << synthmean::format_double(report.bounds->bounds.upper) << "]\n";
    }
    for (const auto &w : report.warnings) {
        std::cout << "  warning: " << w << "\n";
    }
    return 0;
}

int run_validate(const CLI::App *cmd, CliState &state) {
    RunConfig config = assemble_config(cmd, state);
    apply_output_dir_env(cmd, config);
    const fs::path dir = ensure_output_dir(config);

    const synthmean::ParseResult parsed = parse_cohort_file(config);
    write_parse_report(parsed.report, dir);
    synthmean::emit_table1(parsed.cohort, dir / "table1.csv");

    if (!config.reference_path.empty()) {
        std::ifstream ref_in(config.reference_path);
        if (!ref_in) {
            throw synthmean::SchemaError("cannot open reference table '" +
                                         config.reference_path + "'");
        }
        synthmean::load_reference_table(ref_in, config.delimiter);
        std::cout << "reference table: ok\n";
    }

    std::cout << "cohort rows retained: " << parsed.report.retained << " of "
              << parsed.report.rows_read << "\n";
    std::cout << "dropped (age out of range): " << parsed.report.dropped_age_out_of_range
              << "\n";
    std::cout << "dropped (zero weight): " << parsed.report.dropped_nonpositive_weight
              << "\n";
    std::cout << "row errors: " << parsed.report.row_errors.size() << "\n";
    for (const auto &e : parsed.report.row_errors) {
        std::cout << "  line " << e.line << ": " << e.message << "\n";
    }
    return 0;
}

int run_simulate(const CLI::App *cmd, CliState &state) {
    RunConfig config = assemble_config(cmd, state);
    apply_output_dir_env(cmd, config);
    if (config.reference_path.empty()) {
        throw synthmean::DomainError("simulate requires --reference");
    }
    std::ifstream ref_in(config.reference_path);
    if (!ref_in) {
        throw synthmean::SchemaError("cannot open reference table '" + config.reference_path +
                                     "'");
    }
    const synthmean::ReferenceTable table =
        synthmean::load_reference_table(ref_in, config.delimiter);

    std::vector<int> ages = state.sim_ages;
    if (ages.empty()) {
        std::set<int> seen;
        for (const auto &row : table.rows()) {
            seen.insert(row.age);
        }
        ages.assign(seen.begin(), seen.end());
    }
    std::vector<synthmean::Gender> genders;
    if (state.sim_gender == "both") {
        genders = {synthmean::Gender::male, synthmean::Gender::female};
    } else {
        const auto g = synthmean::parse_gender(state.sim_gender);
        if (!g) {
            throw synthmean::DomainError("unknown gender '" + state.sim_gender + "'");
        }
        genders = {*g};
    }

    std::ostringstream out;
    out << "age,gender,bracket,value\n";
    synthmean::RandomStream rng(synthmean::procedure_seed(config.seed, "simulate"));
    for (const int age : ages) {
        for (const auto gender : genders) {
            if (!table.covers(age, gender)) {
                continue;
            }
            const auto &row = table.match(age, gender, state.sim_percentile);
            const auto draws =
                synthmean::simulate_stratum(table, age, gender, state.sim_percentile,
                                            state.draws, rng);
            for (const double v : draws) {
                out << age << ',' << synthmean::to_string(gender) << ','
                    << synthmean::format_double(row.height_percentile) << ','
                    << synthmean::format_double(v) << '\n';
            }
        }
    }
    const fs::path dir = ensure_output_dir(config);
    const fs::path path = dir / "simulate.csv";
    synthmean::write_file_atomic(path, out.str());
    std::cout << "simulated draws: " << path.string() << "\n";
    return 0;
}

int run_figures(const CLI::App *cmd, CliState &state) {
    RunConfig config = assemble_config(cmd, state);
    apply_output_dir_env(cmd, config);
    if (config.reference_path.empty()) {
        throw synthmean::DomainError("figures requires --reference");
    }
    const fs::path dir = ensure_output_dir(config);

    const synthmean::ParseResult parsed = parse_cohort_file(config);
    write_parse_report(parsed.report, dir);

    std::ifstream ref_in(config.reference_path);
    if (!ref_in) {
        throw synthmean::SchemaError("cannot open reference table '" + config.reference_path +
                                     "'");
    }
    const synthmean::ReferenceTable table =
        synthmean::load_reference_table(ref_in, config.delimiter);

    synthmean::Cohort cohort = parsed.cohort;
    const bool any_missing_pct =
        std::any_of(cohort.participants().begin(), cohort.participants().end(),
                    [](const synthmean::Participant &p) { return !p.height_percentile; });
    if (any_missing_pct) {
        cohort = synthmean::empirical_height_percentile(cohort);
    }

    synthmean::emit_figure_data(cohort, table, dir / "figure_", state.draws, config.seed);
    std::cout << "figure data: " << (dir / "figure_").string() << "{observed,model_curves,simulated}.csv\n";
    return 0;
}

std::string error_type_name(const std::exception &e) {
    if (dynamic_cast<const synthmean::SchemaError *>(&e) != nullptr) return "schema";
    if (dynamic_cast<const synthmean::CoverageError *>(&e) != nullptr) return "coverage";
    if (dynamic_cast<const synthmean::PositivityError *>(&e) != nullptr) return "positivity";
    if (dynamic_cast<const synthmean::ReplicateFailureError *>(&e) != nullptr) {
        return "replicate_failure";
    }
    if (dynamic_cast<const synthmean::DomainError *>(&e) != nullptr) return "domain";
    return "internal";
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Population mean estimation under deterministically missing outcomes: "
                 "complete-case, g-computation, plug-in bounds, and a synthesis estimator "
                 "backed by external reference distributions."};
    app.set_version_flag("--version", std::string(synthmean::kToolName) + " " +
                                          synthmean::kVersion);
    app.require_subcommand(1);

    CliState state;

    auto *validate = app.add_subcommand(
        "validate", "Parse and validate the cohort (and reference table, if given)");
    add_shared_options(validate, state, true, true);

    std::vector<std::string> estimate_methods;
    auto *estimate = app.add_subcommand("estimate", "Run the requested estimators");
    add_shared_options(estimate, state, true, true);
    estimate->add_option("--methods", estimate_methods,
                         "Methods to run (complete_case, gcomp_linear, gcomp_saturated, "
                         "synthesis, bounds, diagnostic)");
    estimate->add_flag("--dump-replicates", state.dump_replicates,
                       "Write replicate values as replicates_<method>.csv");

    auto *bounds = app.add_subcommand("bounds", "Plug-in bounds for the population mean");
    add_shared_options(bounds, state, true, false);

    auto *diagnose = app.add_subcommand(
        "diagnose", "Compare statistical and reference-model means in the positive region");
    add_shared_options(diagnose, state, true, true);
    diagnose->add_option("--point-draws", state.config.diagnostic_point_draws,
                         "Reference draws per participant for the point estimate");

    auto *simulate = app.add_subcommand(
        "simulate", "Emit reference-model draws per stratum (age, gender, bracket, value)");
    add_shared_options(simulate, state, false, true);
    simulate->add_option("--age", state.sim_ages, "Ages to simulate (default: all in table)");
    simulate->add_option("--gender", state.sim_gender, "male, female, or both");
    simulate->add_option("--percentile", state.sim_percentile,
                         "Height percentile used for bracket matching");
    simulate->add_option("--draws", state.draws, "Draws per stratum");

    auto *figures = app.add_subcommand(
        "figures", "Emit observed points, model curves, and simulated draws as CSV");
    add_shared_options(figures, state, true, true);
    figures->add_option("--draws", state.draws, "Simulated draws per age");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            return run_validate(validate, state);
        }
        if (estimate->parsed()) {
            return run_report_command(estimate, state, estimate_methods);
        }
        if (bounds->parsed()) {
            return run_report_command(bounds, state, {synthmean::kMethodBounds});
        }
        if (diagnose->parsed()) {
            return run_report_command(diagnose, state, {synthmean::kMethodDiagnostic});
        }
        if (simulate->parsed()) {
            return run_simulate(simulate, state);
        }
        if (figures->parsed()) {
            return run_figures(figures, state);
        }
    } catch (const std::exception &e) {
        nlohmann::ordered_json err;
        err["error"] = {{"type", error_type_name(e)}, {"message", e.what()}};
        std::cerr << err.dump(2) << "\n";
        return 1;
    }
    return 1;
}
