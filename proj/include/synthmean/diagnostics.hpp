#pragma once

#include "synthmean/cohort.hpp"
#include "synthmean/random.hpp"
#include "synthmean/reference.hpp"
#include "synthmean/resampling.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace synthmean {

/// Per-age comparison of the statistical stratum mean against the
/// reference-model mean in the positive region.
struct DiagnosticRow {
    int age = 0;
    double stat_mean = 0.0;
    double math_mean = 0.0;
    double diff = 0.0; // stat - math
    double ci_lower = 0.0;
    double ci_upper = 0.0;
};

struct DiagnosticResult {
    std::vector<DiagnosticRow> rows;
    std::uint64_t replicates_attempted = 0;
    std::uint64_t replicate_failures = 0;
};

/// Weighted mean of reference-model draws for one age's participants, each
/// participant drawn `draws_per_participant` times and averaged. Draws run
/// in row order.
double math_model_age_mean(const ReferenceTable &table, const Cohort &cohort,
                           std::span<const std::uint32_t> rows, int age, RandomStream &rng,
                           int draws_per_participant);

/// Point differences from the full cohort (draws_per_participant draws per
/// participant for the reference side), with percentile CIs from replicate
/// diffs: each replicate resamples the cohort, refits the per-age stratum
/// means, and redraws the reference model once per participant. Only
/// positive-region ages are compared; the reference table is never queried
/// below the cutoff.
DiagnosticResult diagnostic_compare(const Cohort &cohort, const ReferenceTable &table,
                                    const ResamplePlan &plan, int point_draws_per_participant = 100);

} // namespace synthmean
