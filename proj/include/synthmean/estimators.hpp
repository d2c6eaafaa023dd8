#pragma once

#include "synthmean/cohort.hpp"
#include "synthmean/random.hpp"
#include "synthmean/reference.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace synthmean {

/// Which ages an outcome model is fit on.
enum class FitRegion : std::uint8_t {
    positive_only, // ages >= cutoff
    all,           // every age in the cohort range
};

/// Outcome regression fitted on observed records with sampling weights.
/// Saturated: one weighted stratum mean per age. Linear: intercept + slope.
struct FittedOutcomeModel {
    enum class Kind : std::uint8_t { saturated, linear };

    Kind kind = Kind::saturated;

    // Saturated coefficients, indexed by age - age_base.
    int age_base = 0;
    std::vector<double> age_coeff;
    std::vector<std::uint8_t> age_has_coeff;

    // Linear coefficients.
    double intercept = 0.0;
    double slope = 0.0;

    /// Prediction at an age. For a saturated model, querying an age without
    /// a coefficient throws PositivityError: the model never extrapolates.
    double predict_age(int age) const;
};

double predict(const FittedOutcomeModel &model, const Participant &participant);

/// Sum(w*v) / Sum(w). Throws on mismatched lengths or nonpositive total
/// weight.
double weighted_mean(std::span<const double> values, std::span<const double> weights);

/// Weighted mean of observed outcomes.
double complete_case_mean(const Cohort &cohort);
double complete_case_mean(const Cohort &cohort, std::span<const std::uint32_t> rows);

/// Weighted per-age stratum means over observed outcomes. Every age in the
/// fitted region must have at least one observed outcome; otherwise throws
/// PositivityError naming the offending ages.
FittedOutcomeModel fit_saturated(const Cohort &cohort, FitRegion region);
FittedOutcomeModel fit_saturated(const Cohort &cohort, std::span<const std::uint32_t> rows,
                                 FitRegion region);

/// Weighted least squares of outcome on age over observed records, solved
/// in closed form. Requires two or more distinct observed ages.
FittedOutcomeModel fit_linear_wls(const Cohort &cohort, FitRegion region);
FittedOutcomeModel fit_linear_wls(const Cohort &cohort, std::span<const std::uint32_t> rows,
                                  FitRegion region);

/// Weighted mean of model predictions over all rows, observed and missing
/// alike. Saturated-model extrapolation errors propagate.
double g_computation_mean(const Cohort &cohort, const FittedOutcomeModel &model);
double g_computation_mean(const Cohort &cohort, std::span<const std::uint32_t> rows,
                          const FittedOutcomeModel &model);

/// Synthesis point estimate: saturated g-computation fills the positive
/// region, one reference-model draw per participant fills the nonpositive
/// region (in row order), and the filled outcomes are averaged with the
/// sampling weights. Algebraically equal to the two-region weighted-average
/// decomposition.
double synthesis_point(const Cohort &cohort, const ReferenceTable &table, RandomStream &rng);
double synthesis_point(const Cohort &cohort, std::span<const std::uint32_t> rows,
                       const ReferenceTable &table, RandomStream &rng);

struct BoundsResult {
    double lower = 0.0;
    double upper = 0.0;
    double plug_lo = 0.0;
    double plug_hi = 0.0;
    double prop_nonpositive = 0.0;
};

/// Plug-in bounds: positive_mean * (1 - p) + plug * p for each plug value.
BoundsResult bound_mean(double positive_mean, double prop_nonpositive, double plug_lo,
                        double plug_hi);

/// Weighted share of the cohort in the nonpositive region.
double nonpositive_weight_share(const Cohort &cohort);

} // namespace synthmean
