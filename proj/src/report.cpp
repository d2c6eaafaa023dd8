#include "synthmean/report.hpp"

#include "synthmean/csv.hpp"
#include "synthmean/errors.hpp"
#include "synthmean/version.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace synthmean {

using ordered_json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kKnownMethods = {kMethodCompleteCase,   kMethodGcompLinear,
                                             kMethodGcompSaturated, kMethodSynthesis,
                                             kMethodBounds,         kMethodDiagnostic};

bool wants(const RunConfig &config, const std::string &method) {
    return std::find(config.methods.begin(), config.methods.end(), method) !=
           config.methods.end();
}

bool needs_reference(const RunConfig &config) {
    return wants(config, kMethodSynthesis) || wants(config, kMethodDiagnostic);
}

/// Fails fast with the full list of uncovered (age, gender) pairs instead of
/// erroring mid-bootstrap.
void verify_coverage(const Cohort &cohort, const ReferenceTable &table, bool positive_region) {
    std::set<std::pair<int, int>> needed;
    for (const auto &p : cohort.participants()) {
        if (p.positive_region == positive_region) {
            needed.insert({p.age, static_cast<int>(p.gender)});
        }
    }
    std::vector<std::string> missing;
    for (const auto &[age, gender] : needed) {
        if (!table.covers(age, static_cast<Gender>(gender))) {
            missing.push_back("(" + std::to_string(age) + ", " +
                              to_string(static_cast<Gender>(gender)) + ")");
        }
    }
    if (!missing.empty()) {
        std::string msg = "reference table does not cover cohort strata:";
        for (const auto &m : missing) {
            msg += ' ' + m;
        }
        throw CoverageError(msg);
    }
}

ordered_json json_double(double value) {
    // NaN/Inf have no JSON representation; the report never carries them.
    if (!std::isfinite(value)) {
        throw DomainError("report value is not finite");
    }
    return value;
}

} // namespace

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["cohort"] = cohort_path;
    j["delimiter"] = std::string(1, delimiter);
    ordered_json cols;
    cols["id"] = mapping.id;
    cols["age"] = mapping.age;
    cols["gender"] = mapping.gender;
    cols["height"] = mapping.height;
    cols["readings"] = mapping.readings;
    cols["weight"] = mapping.weight;
    if (mapping.height_percentile) {
        cols["height_percentile"] = *mapping.height_percentile;
    } else {
        cols["height_percentile"] = nullptr;
    }
    j["columns"] = cols;
    j["reference"] = reference_path;
    j["cutoff"] = cutoff;
    j["age_range"] = {age_range.min, age_range.max};
    j["methods"] = methods;
    j["replicates"] = replicates;
    j["seed"] = seed;
    j["bounds_plugs"] = {plug_lo, plug_hi};
    j["output_dir"] = output_dir;
    j["diagnostic_point_draws"] = diagnostic_point_draws;
    return j;
}

RunConfig RunConfig::from_json(const ordered_json &j) {
    RunConfig config;
    config.cohort_path = j.at("cohort").get<std::string>();
    const auto delim = j.at("delimiter").get<std::string>();
    if (delim.size() != 1) {
        throw SchemaError("config delimiter must be a single character");
    }
    config.delimiter = delim[0];
    const auto &cols = j.at("columns");
    config.mapping.id = cols.at("id").get<std::string>();
    config.mapping.age = cols.at("age").get<std::string>();
    config.mapping.gender = cols.at("gender").get<std::string>();
    config.mapping.height = cols.at("height").get<std::string>();
    config.mapping.readings = cols.at("readings").get<std::vector<std::string>>();
    config.mapping.weight = cols.at("weight").get<std::string>();
    if (!cols.at("height_percentile").is_null()) {
        config.mapping.height_percentile = cols.at("height_percentile").get<std::string>();
    }
    config.reference_path = j.at("reference").get<std::string>();
    config.cutoff = j.at("cutoff").get<int>();
    config.age_range.min = j.at("age_range").at(0).get<int>();
    config.age_range.max = j.at("age_range").at(1).get<int>();
    config.methods = j.at("methods").get<std::vector<std::string>>();
    config.replicates = j.at("replicates").get<std::uint64_t>();
    config.seed = j.at("seed").get<std::uint64_t>();
    config.plug_lo = j.at("bounds_plugs").at(0).get<double>();
    config.plug_hi = j.at("bounds_plugs").at(1).get<double>();
    config.output_dir = j.at("output_dir").get<std::string>();
    config.diagnostic_point_draws = j.at("diagnostic_point_draws").get<int>();
    return config;
}

void RunConfig::validate() const {
    if (methods.empty()) {
        throw DomainError("no methods requested");
    }
    std::set<std::string> seen;
    for (const auto &method : methods) {
        if (kKnownMethods.find(method) == kKnownMethods.end()) {
            throw DomainError("unknown method '" + method + "'");
        }
        if (!seen.insert(method).second) {
            throw DomainError("method '" + method + "' requested twice");
        }
    }
    if (replicates == 0) {
        throw DomainError("replicate count must be at least 1");
    }
    if (age_range.min > age_range.max) {
        throw DomainError("age range is inverted");
    }
    if (cutoff <= age_range.min || cutoff > age_range.max) {
        throw DomainError("cutoff must lie inside the age range");
    }
    if (plug_lo > plug_hi) {
        throw DomainError("plug-in bound values are inverted");
    }
    if (diagnostic_point_draws < 1) {
        throw DomainError("diagnostic point draws must be at least 1");
    }
    if (needs_reference(*this) && reference_path.empty()) {
        throw DomainError("methods " + std::string(kMethodSynthesis) + "/" +
                          kMethodDiagnostic + " require a reference table path");
    }
}

ordered_json parse_report_json(const ParseReport &report) {
    ordered_json j;
    j["rows_read"] = report.rows_read;
    j["retained"] = report.retained;
    j["dropped_age_out_of_range"] = report.dropped_age_out_of_range;
    j["dropped_zero_weight"] = report.dropped_nonpositive_weight;
    ordered_json errors = ordered_json::array();
    for (const auto &e : report.row_errors) {
        ordered_json entry;
        entry["line"] = e.line;
        entry["message"] = e.message;
        errors.push_back(entry);
    }
    j["row_errors"] = errors;
    return j;
}

ordered_json AnalysisReport::to_json() const {
    ordered_json j;
    j["tool"] = {{"name", kToolName}, {"version", kVersion}};
    j["config"] = config.to_json();

    ordered_json cohort;
    cohort["n"] = cohort_n;
    cohort["parse"] = parse_report_json(parse);
    cohort["total_weight"] = json_double(total_weight);
    cohort["weighted_pct_nonpositive"] = json_double(weighted_pct_nonpositive);
    ordered_json ages = ordered_json::array();
    for (const auto &row : age_table) {
        ordered_json entry;
        entry["age"] = row.age;
        entry["n"] = row.n;
        entry["weighted_pct"] = json_double(row.weighted_pct);
        entry["n_missing"] = row.n_missing;
        entry["pct_missing"] = json_double(row.pct_missing);
        ages.push_back(entry);
    }
    cohort["age_table"] = ages;
    j["cohort"] = cohort;

    ordered_json ests = ordered_json::array();
    for (const auto &e : estimates) {
        ordered_json entry;
        entry["method"] = e.method;
        if (!e.ok) {
            entry["error"] = e.error;
        } else {
            entry["point"] = json_double(e.point);
            entry["ci"] = {json_double(e.ci_lower), json_double(e.ci_upper)};
            entry["sd"] = json_double(e.sd);
            entry["full_data_estimate"] = json_double(e.full_data_estimate);
            entry["replicates"] = e.replicates_attempted;
            entry["replicate_failures"] = e.replicate_failures;
            entry["seed"] = e.seed;
        }
        ests.push_back(entry);
    }
    j["estimates"] = ests;

    if (bounds) {
        ordered_json b;
        b["lower"] = json_double(bounds->bounds.lower);
        b["upper"] = json_double(bounds->bounds.upper);
        b["plug_lo"] = json_double(bounds->bounds.plug_lo);
        b["plug_hi"] = json_double(bounds->bounds.plug_hi);
        b["prop_nonpositive"] = json_double(bounds->bounds.prop_nonpositive);
        b["positive_region_mean"] = json_double(bounds->positive_region_mean);
        j["bounds"] = b;
    } else {
        j["bounds"] = nullptr;
    }

    if (diagnostic) {
        ordered_json d;
        d["replicates"] = diagnostic->replicates_attempted;
        d["replicate_failures"] = diagnostic->replicate_failures;
        ordered_json rows = ordered_json::array();
        for (const auto &row : diagnostic->rows) {
            ordered_json entry;
            entry["age"] = row.age;
            entry["stat_mean"] = json_double(row.stat_mean);
            entry["math_mean"] = json_double(row.math_mean);
            entry["diff"] = json_double(row.diff);
            entry["ci"] = {json_double(row.ci_lower), json_double(row.ci_upper)};
            rows.push_back(entry);
        }
        d["rows"] = rows;
        j["diagnostic"] = d;
    } else {
        j["diagnostic"] = nullptr;
    }

    j["warnings"] = warnings;
    return j;
}

std::string AnalysisReport::to_json_text() const {
    return to_json().dump(2) + "\n";
}

namespace {

struct MethodRun {
    ReplicateEstimator estimator;
    bool catch_positivity = false; // structural failures become entries
};

EstimateEntry run_method(const std::string &method, const Cohort &cohort,
                         const MethodRun &spec, const RunConfig &config,
                         std::vector<std::string> &warnings,
                         std::vector<double> *replicates_out) {
    EstimateEntry entry;
    entry.method = method;
    entry.seed = procedure_seed(config.seed, "estimate/" + method);

    ResamplePlan plan{config.replicates, entry.seed, config.workers};
    try {
        // Full-data estimate first: its substream index sits past every
        // replicate index, so it never aliases a replicate stream.
        RandomStream full_rng = RandomStream::substream(plan.seed, plan.replicates);
        entry.full_data_estimate =
            spec.estimator(cohort, cohort.identity_rows(), full_rng);

        BootstrapResult boot = bootstrap(cohort, spec.estimator, plan);
        const ReplicateSummary summary = summarize(boot.values);
        entry.point = summary.median;
        entry.ci_lower = summary.p2_5;
        entry.ci_upper = summary.p97_5;
        entry.sd = summary.sd;
        entry.replicates_attempted = boot.attempted;
        entry.replicate_failures = boot.failures;
        if (static_cast<double>(boot.failures) >
            kReplicateWarnShare * static_cast<double>(boot.attempted)) {
            warnings.push_back("method " + method + ": " + std::to_string(boot.failures) +
                               " of " + std::to_string(boot.attempted) +
                               " replicates failed and were excluded");
        }
        if (replicates_out != nullptr) {
            *replicates_out = std::move(boot.values);
        }
    } catch (const PositivityError &e) {
        if (!spec.catch_positivity) {
            throw;
        }
        entry.ok = false;
        entry.error = e.what();
        warnings.push_back("method " + method + " not estimable: " + e.what());
    }
    return entry;
}

} // namespace

AnalysisReport run_analysis(const RunConfig &config) {
    config.validate();
    std::ifstream in(config.cohort_path);
    if (!in) {
        throw SchemaError("cannot open cohort file '" + config.cohort_path + "'");
    }
    const ParseResult parsed =
        parse_cohort(in, config.mapping, config.cutoff, config.age_range, config.delimiter);
    return run_analysis(config, parsed);
}

AnalysisReport run_analysis(const RunConfig &config, const ParseResult &parsed) {
    config.validate();

    AnalysisReport report;
    report.config = config;
    report.parse = parsed.report;

    std::optional<ReferenceTable> table;
    if (needs_reference(config)) {
        std::ifstream ref_in(config.reference_path);
        if (!ref_in) {
            throw SchemaError("cannot open reference table '" + config.reference_path + "'");
        }
        table = load_reference_table(ref_in, config.delimiter);
    }

    // Percentiles are only computed when a reference-model method needs
    // them and no precomputed column was mapped.
    Cohort cohort = parsed.cohort;
    if (table) {
        const bool any_missing_pct =
            std::any_of(cohort.participants().begin(), cohort.participants().end(),
                        [](const Participant &p) { return !p.height_percentile; });
        if (any_missing_pct) {
            cohort = empirical_height_percentile(cohort);
        }
        if (wants(config, kMethodSynthesis)) {
            verify_coverage(cohort, *table, /*positive_region=*/false);
        }
        if (wants(config, kMethodDiagnostic)) {
            verify_coverage(cohort, *table, /*positive_region=*/true);
        }
    }

    report.cohort_n = cohort.size();
    report.total_weight = cohort.total_weight();
    report.weighted_pct_nonpositive = 100.0 * nonpositive_weight_share(cohort);
    report.age_table = missingness_table(cohort);

    auto push_method = [&](const std::string &method, const MethodRun &spec) {
        std::vector<double> reps;
        report.estimates.push_back(
            run_method(method, cohort, spec, config, report.warnings,
                       config.keep_replicates ? &reps : nullptr));
        if (config.keep_replicates) {
            report.replicate_values.emplace_back(method, std::move(reps));
        }
    };

    for (const auto &method : config.methods) {
        if (method == kMethodCompleteCase) {
            MethodRun spec;
            spec.estimator = [](const Cohort &c, std::span<const std::uint32_t> rows,
                                RandomStream &) { return complete_case_mean(c, rows); };
            push_method(method, spec);
        } else if (method == kMethodGcompLinear) {
            MethodRun spec;
            spec.estimator = [](const Cohort &c, std::span<const std::uint32_t> rows,
                                RandomStream &) {
                const auto model = fit_linear_wls(c, rows, FitRegion::all);
                return g_computation_mean(c, rows, model);
            };
            push_method(method, spec);
        } else if (method == kMethodGcompSaturated) {
            // Saturated g-computation over the full range is exactly the
            // estimator nonpositivity breaks; the failure is reported as the
            // method's result rather than aborting the run.
            MethodRun spec;
            spec.catch_positivity = true;
            spec.estimator = [](const Cohort &c, std::span<const std::uint32_t> rows,
                                RandomStream &) {
                const auto model = fit_saturated(c, rows, FitRegion::all);
                return g_computation_mean(c, rows, model);
            };
            push_method(method, spec);
        } else if (method == kMethodSynthesis) {
            MethodRun spec;
            spec.estimator = [&table](const Cohort &c, std::span<const std::uint32_t> rows,
                                      RandomStream &rng) {
                return synthesis_point(c, rows, *table, rng);
            };
            push_method(method, spec);
        } else if (method == kMethodBounds) {
            const auto model = fit_saturated(cohort, FitRegion::positive_only);
            double weight_sum = 0.0;
            double value_sum = 0.0;
            for (const auto &p : cohort.participants()) {
                if (!p.positive_region) {
                    continue;
                }
                weight_sum += p.sampling_weight;
                value_sum += p.sampling_weight * model.predict_age(p.age);
            }
            if (!(weight_sum > 0.0)) {
                throw DomainError("positive region is empty; bounds are undefined");
            }
            BoundsReport b;
            b.positive_region_mean = value_sum / weight_sum;
            b.bounds = bound_mean(b.positive_region_mean, nonpositive_weight_share(cohort),
                                  config.plug_lo, config.plug_hi);
            report.bounds = b;
        } else if (method == kMethodDiagnostic) {
            ResamplePlan plan{config.replicates,
                              procedure_seed(config.seed, "diagnostic"), config.workers};
            report.diagnostic =
                diagnostic_compare(cohort, *table, plan, config.diagnostic_point_draws);
            if (static_cast<double>(report.diagnostic->replicate_failures) >
                kReplicateWarnShare *
                    static_cast<double>(report.diagnostic->replicates_attempted)) {
                report.warnings.push_back(
                    "diagnostic: " + std::to_string(report.diagnostic->replicate_failures) +
                    " of " + std::to_string(report.diagnostic->replicates_attempted) +
                    " replicates failed and were excluded");
            }
            for (const auto &row : report.diagnostic->rows) {
                if (row.ci_lower > 0.0 || row.ci_upper < 0.0) {
                    report.warnings.push_back(
                        "diagnostic: age " + std::to_string(row.age) +
                        " statistical-vs-reference difference CI excludes zero (" +
                        format_double(row.diff) + ")");
                }
            }
        }
    }
    return report;
}

void emit_table1(const Cohort &cohort, const std::filesystem::path &path) {
    std::ostringstream out;
    out << "age,n,weighted_pct,n_missing,pct_missing\n";
    for (const auto &row : missingness_table(cohort)) {
        out << row.age << ',' << row.n << ',' << format_double(row.weighted_pct) << ','
            << row.n_missing << ',' << format_double(row.pct_missing) << '\n';
    }
    write_file_atomic(path, out.str());
}

void emit_figure_data(const Cohort &cohort, const ReferenceTable &table,
                      const std::filesystem::path &prefix, std::size_t draws_per_age,
                      std::uint64_t seed) {
    const auto &participants = cohort.participants();

    std::ostringstream observed;
    observed << "age,sbp,weight\n";
    for (const auto &p : participants) {
        if (p.observed()) {
            observed << p.age << ',' << format_double(*p.outcome) << ','
                     << format_double(p.sampling_weight) << '\n';
        }
    }

    // Per-age observed weighted means (defined only where outcomes exist)
    // and the fitted line projected over the whole range.
    const auto linear = fit_linear_wls(cohort, FitRegion::all);
    std::map<int, std::pair<double, double>> stratum; // age -> (sum w*y, sum w)
    for (const auto &p : participants) {
        if (p.observed()) {
            auto &acc = stratum[p.age];
            acc.first += p.sampling_weight * *p.outcome;
            acc.second += p.sampling_weight;
        }
    }
    std::ostringstream curves;
    curves << "age,linear_pred,saturated_mean\n";
    for (int age = cohort.age_range().min; age <= cohort.age_range().max; ++age) {
        curves << age << ',' << format_double(linear.predict_age(age)) << ',';
        const auto it = stratum.find(age);
        if (it != stratum.end()) {
            curves << format_double(it->second.first / it->second.second);
        }
        curves << '\n';
    }

    // Reference-model draws per age: each draw picks one of that age's
    // participants uniformly and samples its stratum.
    std::map<int, std::vector<std::uint32_t>> by_age;
    for (std::uint32_t i = 0; i < participants.size(); ++i) {
        by_age[participants[i].age].push_back(i);
    }
    std::ostringstream simulated;
    simulated << "age,value\n";
    RandomStream rng(procedure_seed(seed, "figures"));
    for (const auto &[age, rows] : by_age) {
        for (std::size_t d = 0; d < draws_per_age; ++d) {
            const auto &p = participants[rows[rng.next_below(rows.size())]];
            if (!p.height_percentile) {
                throw DomainError("participant " + p.id +
                                  " has no height percentile for the reference draw");
            }
            const double value =
                draw_outcome(table, p.age, p.gender, *p.height_percentile, rng);
            simulated << age << ',' << format_double(value) << '\n';
        }
    }

    write_file_atomic(prefix.string() + "observed.csv", observed.str());
    write_file_atomic(prefix.string() + "model_curves.csv", curves.str());
    write_file_atomic(prefix.string() + "simulated.csv", simulated.str());
}

void emit_diagnostic_csv(const DiagnosticResult &result, const std::filesystem::path &path) {
    std::ostringstream out;
    out << "age,stat_mean,math_mean,diff,ci_lo,ci_hi\n";
    for (const auto &row : result.rows) {
        out << row.age << ',' << format_double(row.stat_mean) << ','
            << format_double(row.math_mean) << ',' << format_double(row.diff) << ','
            << format_double(row.ci_lower) << ',' << format_double(row.ci_upper) << '\n';
    }
    write_file_atomic(path, out.str());
}

void emit_replicates_csv(std::span<const double> values, const std::filesystem::path &path) {
    std::ostringstream out;
    out << "value\n";
    for (const double v : values) {
        out << format_double(v) << '\n';
    }
    write_file_atomic(path, out.str());
}

void write_file_atomic(const std::filesystem::path &path, const std::string &content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DomainError("cannot write to '" + tmp.string() + "'");
        }
        out << content;
        if (!out) {
            throw DomainError("write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace synthmean
