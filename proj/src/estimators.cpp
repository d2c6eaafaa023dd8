#include "synthmean/estimators.hpp"

#include "synthmean/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace synthmean {

namespace {

bool in_region(const Participant &p, FitRegion region) {
    return region == FitRegion::all || p.positive_region;
}

std::string join_ages(const std::vector<int> &ages) {
    std::string out;
    for (std::size_t i = 0; i < ages.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += std::to_string(ages[i]);
    }
    return out;
}

} // namespace

double FittedOutcomeModel::predict_age(int age) const {
    if (kind == Kind::linear) {
        return intercept + slope * static_cast<double>(age);
    }
    const int offset = age - age_base;
    if (offset < 0 || static_cast<std::size_t>(offset) >= age_coeff.size() ||
        age_has_coeff[static_cast<std::size_t>(offset)] == 0) {
        throw PositivityError("saturated model has no coefficient for age " +
                              std::to_string(age));
    }
    return age_coeff[static_cast<std::size_t>(offset)];
}

double predict(const FittedOutcomeModel &model, const Participant &participant) {
    return model.predict_age(participant.age);
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) {
        throw DomainError("values and weights differ in length");
    }
    double weight_sum = 0.0;
    double value_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (weights[i] < 0.0) {
            throw DomainError("negative weight");
        }
        weight_sum += weights[i];
        value_sum += weights[i] * values[i];
    }
    if (!(weight_sum > 0.0)) {
        throw DomainError("total weight must be positive");
    }
    return value_sum / weight_sum;
}

double complete_case_mean(const Cohort &cohort) {
    return complete_case_mean(cohort, cohort.identity_rows());
}

double complete_case_mean(const Cohort &cohort, std::span<const std::uint32_t> rows) {
    double weight_sum = 0.0;
    double value_sum = 0.0;
    const auto &participants = cohort.participants();
    for (const std::uint32_t row : rows) {
        const auto &p = participants[row];
        if (!p.observed()) {
            continue;
        }
        weight_sum += p.sampling_weight;
        value_sum += p.sampling_weight * *p.outcome;
    }
    if (!(weight_sum > 0.0)) {
        throw DomainError("no observed outcomes for a complete-case mean");
    }
    return value_sum / weight_sum;
}

FittedOutcomeModel fit_saturated(const Cohort &cohort, FitRegion region) {
    return fit_saturated(cohort, cohort.identity_rows(), region);
}

FittedOutcomeModel fit_saturated(const Cohort &cohort, std::span<const std::uint32_t> rows,
                                 FitRegion region) {
    const AgeRange range = cohort.age_range();
    const int age_base = region == FitRegion::positive_only ? cohort.cutoff() : range.min;
    const auto n_ages = static_cast<std::size_t>(range.max - age_base + 1);

    FittedOutcomeModel model;
    model.kind = FittedOutcomeModel::Kind::saturated;
    model.age_base = age_base;
    model.age_coeff.assign(n_ages, 0.0);
    model.age_has_coeff.assign(n_ages, 0);

    std::vector<double> weight_sum(n_ages, 0.0);
    std::vector<std::uint8_t> age_present(n_ages, 0);
    const auto &participants = cohort.participants();
    for (const std::uint32_t row : rows) {
        const auto &p = participants[row];
        if (!in_region(p, region)) {
            continue;
        }
        const auto idx = static_cast<std::size_t>(p.age - age_base);
        age_present[idx] = 1;
        if (!p.observed()) {
            continue;
        }
        weight_sum[idx] += p.sampling_weight;
        model.age_coeff[idx] += p.sampling_weight * *p.outcome;
    }

    std::vector<int> violating_ages;
    for (std::size_t i = 0; i < n_ages; ++i) {
        if (weight_sum[i] > 0.0) {
            model.age_coeff[i] /= weight_sum[i];
            model.age_has_coeff[i] = 1;
        } else if (age_present[i] != 0) {
            violating_ages.push_back(age_base + static_cast<int>(i));
        }
    }
    if (!violating_ages.empty()) {
        throw PositivityError("no observed outcomes at age(s) " + join_ages(violating_ages) +
                              "; the saturated coefficients there cannot be estimated");
    }
    return model;
}

FittedOutcomeModel fit_linear_wls(const Cohort &cohort, FitRegion region) {
    return fit_linear_wls(cohort, cohort.identity_rows(), region);
}

FittedOutcomeModel fit_linear_wls(const Cohort &cohort, std::span<const std::uint32_t> rows,
                                  FitRegion region) {
    // Mean-centered closed-form solution of the 2x2 normal equations.
    double weight_sum = 0.0;
    double x_sum = 0.0;
    double y_sum = 0.0;
    const auto &participants = cohort.participants();
    for (const std::uint32_t row : rows) {
        const auto &p = participants[row];
        if (!in_region(p, region) || !p.observed()) {
            continue;
        }
        weight_sum += p.sampling_weight;
        x_sum += p.sampling_weight * static_cast<double>(p.age);
        y_sum += p.sampling_weight * *p.outcome;
    }
    if (!(weight_sum > 0.0)) {
        throw DomainError("no observed outcomes for a weighted least-squares fit");
    }
    const double x_mean = x_sum / weight_sum;
    const double y_mean = y_sum / weight_sum;

    double sxx = 0.0;
    double sxy = 0.0;
    for (const std::uint32_t row : rows) {
        const auto &p = participants[row];
        if (!in_region(p, region) || !p.observed()) {
            continue;
        }
        const double dx = static_cast<double>(p.age) - x_mean;
        sxx += p.sampling_weight * dx * dx;
        sxy += p.sampling_weight * dx * (*p.outcome - y_mean);
    }
    if (!(sxx > 0.0)) {
        throw DomainError("weighted least squares needs two or more distinct observed ages");
    }

    FittedOutcomeModel model;
    model.kind = FittedOutcomeModel::Kind::linear;
    model.slope = sxy / sxx;
    model.intercept = y_mean - model.slope * x_mean;
    return model;
}

double g_computation_mean(const Cohort &cohort, const FittedOutcomeModel &model) {
    return g_computation_mean(cohort, cohort.identity_rows(), model);
}

double g_computation_mean(const Cohort &cohort, std::span<const std::uint32_t> rows,
                          const FittedOutcomeModel &model) {
    double weight_sum = 0.0;
    double value_sum = 0.0;
    const auto &participants = cohort.participants();
    for (const std::uint32_t row : rows) {
        const auto &p = participants[row];
        weight_sum += p.sampling_weight;
        value_sum += p.sampling_weight * model.predict_age(p.age);
    }
    if (!(weight_sum > 0.0)) {
        throw DomainError("empty row set for g-computation");
    }
    return value_sum / weight_sum;
}

double synthesis_point(const Cohort &cohort, const ReferenceTable &table, RandomStream &rng) {
    return synthesis_point(cohort, cohort.identity_rows(), table, rng);
}

double synthesis_point(const Cohort &cohort, std::span<const std::uint32_t> rows,
                       const ReferenceTable &table, RandomStream &rng) {
    const FittedOutcomeModel model = fit_saturated(cohort, rows, FitRegion::positive_only);
    double weight_sum = 0.0;
    double value_sum = 0.0;
    const auto &participants = cohort.participants();
    for (const std::uint32_t row : rows) {
        const auto &p = participants[row];
        double filled = 0.0;
        if (p.positive_region) {
            filled = model.predict_age(p.age);
        } else {
            if (!p.height_percentile) {
                throw DomainError("participant " + p.id +
                                  " has no height percentile for the reference draw");
            }
            filled = draw_outcome(table, p.age, p.gender, *p.height_percentile, rng);
        }
        weight_sum += p.sampling_weight;
        value_sum += p.sampling_weight * filled;
    }
    if (!(weight_sum > 0.0)) {
        throw DomainError("empty row set for the synthesis estimator");
    }
    return value_sum / weight_sum;
}

BoundsResult bound_mean(double positive_mean, double prop_nonpositive, double plug_lo,
                        double plug_hi) {
    if (prop_nonpositive < 0.0 || prop_nonpositive > 1.0) {
        throw DomainError("nonpositive-region proportion must lie in [0, 1]");
    }
    if (plug_lo > plug_hi) {
        throw DomainError("plug-in bound values are inverted");
    }
    BoundsResult result;
    result.plug_lo = plug_lo;
    result.plug_hi = plug_hi;
    result.prop_nonpositive = prop_nonpositive;
    result.lower = positive_mean * (1.0 - prop_nonpositive) + plug_lo * prop_nonpositive;
    result.upper = positive_mean * (1.0 - prop_nonpositive) + plug_hi * prop_nonpositive;
    return result;
}

double nonpositive_weight_share(const Cohort &cohort) {
    double nonpositive = 0.0;
    for (const auto &p : cohort.participants()) {
        if (!p.positive_region) {
            nonpositive += p.sampling_weight;
        }
    }
    return nonpositive / cohort.total_weight();
}

} // namespace synthmean
