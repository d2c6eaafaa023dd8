#include "synthmean/diagnostics.hpp"

#include "synthmean/errors.hpp"
#include "synthmean/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synthmean {

namespace {

struct AgeAccumulator {
    double stat_weight = 0.0;
    double stat_sum = 0.0;
    double math_weight = 0.0;
    double math_sum = 0.0;
    bool any_rows = false;
};

/// One pass over the rows in draw order: accumulates observed outcomes for
/// the statistical side and reference draws for the mathematical side,
/// per positive-region age.
std::vector<AgeAccumulator> accumulate(const Cohort &cohort,
                                       std::span<const std::uint32_t> rows,
                                       const ReferenceTable &table, RandomStream &rng,
                                       int draws_per_participant) {
    const int cutoff = cohort.cutoff();
    const auto n_ages = static_cast<std::size_t>(cohort.age_range().max - cutoff + 1);
    std::vector<AgeAccumulator> acc(n_ages);
    const auto &participants = cohort.participants();
    for (const std::uint32_t row : rows) {
        const auto &p = participants[row];
        if (!p.positive_region) {
            continue;
        }
        auto &a = acc[static_cast<std::size_t>(p.age - cutoff)];
        a.any_rows = true;
        if (p.observed()) {
            a.stat_weight += p.sampling_weight;
            a.stat_sum += p.sampling_weight * *p.outcome;
        }
        if (!p.height_percentile) {
            throw DomainError("participant " + p.id +
                              " has no height percentile for the reference draw");
        }
        double draw_mean = 0.0;
        for (int d = 0; d < draws_per_participant; ++d) {
            draw_mean += draw_outcome(table, p.age, p.gender, *p.height_percentile, rng);
        }
        draw_mean /= static_cast<double>(draws_per_participant);
        a.math_weight += p.sampling_weight;
        a.math_sum += p.sampling_weight * draw_mean;
    }
    return acc;
}

std::vector<double> diffs_from(const std::vector<AgeAccumulator> &acc, int cutoff) {
    std::vector<double> diffs;
    diffs.reserve(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        const auto &a = acc[i];
        if (!a.any_rows) {
            throw PositivityError("no participants at age " +
                                  std::to_string(cutoff + static_cast<int>(i)) +
                                  " in the positive region");
        }
        if (!(a.stat_weight > 0.0)) {
            throw PositivityError("no observed outcomes at age " +
                                  std::to_string(cutoff + static_cast<int>(i)));
        }
        diffs.push_back(a.stat_sum / a.stat_weight - a.math_sum / a.math_weight);
    }
    return diffs;
}

} // namespace

double math_model_age_mean(const ReferenceTable &table, const Cohort &cohort,
                           std::span<const std::uint32_t> rows, int age, RandomStream &rng,
                           int draws_per_participant) {
    if (age < cohort.cutoff()) {
        throw DomainError("diagnostic age " + std::to_string(age) +
                          " lies below the positivity cutoff");
    }
    if (draws_per_participant < 1) {
        throw DomainError("draws per participant must be at least 1");
    }
    double weight_sum = 0.0;
    double value_sum = 0.0;
    const auto &participants = cohort.participants();
    for (const std::uint32_t row : rows) {
        const auto &p = participants[row];
        if (p.age != age) {
            continue;
        }
        if (!p.height_percentile) {
            throw DomainError("participant " + p.id +
                              " has no height percentile for the reference draw");
        }
        double draw_mean = 0.0;
        for (int d = 0; d < draws_per_participant; ++d) {
            draw_mean += draw_outcome(table, p.age, p.gender, *p.height_percentile, rng);
        }
        draw_mean /= static_cast<double>(draws_per_participant);
        weight_sum += p.sampling_weight;
        value_sum += p.sampling_weight * draw_mean;
    }
    if (!(weight_sum > 0.0)) {
        throw DomainError("no participants of age " + std::to_string(age));
    }
    return value_sum / weight_sum;
}

DiagnosticResult diagnostic_compare(const Cohort &cohort, const ReferenceTable &table,
                                    const ResamplePlan &plan,
                                    int point_draws_per_participant) {
    const int cutoff = cohort.cutoff();

    // Point estimate from the full cohort, many draws per participant to
    // damp the reference-model noise.
    RandomStream point_rng = RandomStream::substream(plan.seed, plan.replicates);
    const auto point_acc = accumulate(cohort, cohort.identity_rows(), table, point_rng,
                                      point_draws_per_participant);
    std::vector<DiagnosticRow> rows;
    for (std::size_t i = 0; i < point_acc.size(); ++i) {
        const auto &a = point_acc[i];
        if (!a.any_rows) {
            throw PositivityError("no participants at age " +
                                  std::to_string(cutoff + static_cast<int>(i)) +
                                  " in the positive region");
        }
        if (!(a.stat_weight > 0.0)) {
            throw PositivityError("no observed outcomes at age " +
                                  std::to_string(cutoff + static_cast<int>(i)));
        }
        DiagnosticRow row;
        row.age = cutoff + static_cast<int>(i);
        row.stat_mean = a.stat_sum / a.stat_weight;
        row.math_mean = a.math_sum / a.math_weight;
        row.diff = row.stat_mean - row.math_mean;
        rows.push_back(row);
    }

    // Replicate diffs: one draw per participant, draws in resampled-row
    // order so the substream fully determines them.
    const VectorReplicateEstimator estimator =
        [&table](const Cohort &c, std::span<const std::uint32_t> rep_rows, RandomStream &rng) {
            return diffs_from(accumulate(c, rep_rows, table, rng, 1), c.cutoff());
        };
    const VectorBootstrapResult boot = bootstrap_vector(cohort, estimator, plan);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto replicate_diffs = boot.component(i);
        const ReplicateSummary summary = summarize(replicate_diffs);
        rows[i].ci_lower = summary.p2_5;
        rows[i].ci_upper = summary.p97_5;
    }

    DiagnosticResult result;
    result.rows = std::move(rows);
    result.replicates_attempted = boot.attempted;
    result.replicate_failures = boot.failures;
    return result;
}

} // namespace synthmean
