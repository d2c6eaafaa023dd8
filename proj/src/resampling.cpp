#include "synthmean/resampling.hpp"

#include "synthmean/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace synthmean {

std::vector<std::uint32_t> resample_indices(std::size_t n, RandomStream &rng) {
    std::vector<std::uint32_t> indices(n);
    for (auto &idx : indices) {
        idx = static_cast<std::uint32_t>(rng.next_below(n));
    }
    return indices;
}

Cohort resample_with_replacement(const Cohort &cohort, RandomStream &rng) {
    const auto indices = resample_indices(cohort.size(), rng);
    std::vector<Participant> drawn;
    drawn.reserve(indices.size());
    for (const std::uint32_t idx : indices) {
        drawn.push_back(cohort.participants()[idx]);
    }
    return Cohort(std::move(drawn), cohort.cutoff(), cohort.age_range());
}

namespace {

struct ReplicateSlot {
    std::vector<double> values;
    bool failed = false;
    std::string message;
};

void run_replicate(const Cohort &cohort, const VectorReplicateEstimator &estimator,
                   std::uint64_t seed, std::uint64_t index, ReplicateSlot &slot) {
    RandomStream rng = RandomStream::substream(seed, index);
    const auto indices = resample_indices(cohort.size(), rng);
    try {
        slot.values = estimator(cohort, indices, rng);
    } catch (const std::exception &e) {
        slot.failed = true;
        slot.message = e.what();
    }
}

VectorBootstrapResult collect(std::vector<ReplicateSlot> &&slots) {
    VectorBootstrapResult result;
    result.attempted = slots.size();
    for (const auto &slot : slots) {
        if (slot.failed) {
            ++result.failures;
            if (result.failure_samples.size() < 5) {
                result.failure_samples.push_back(slot.message);
            }
            continue;
        }
        if (result.components == 0) {
            result.components = slot.values.size();
        } else if (slot.values.size() != result.components) {
            throw DomainError("replicate estimator returned inconsistent lengths");
        }
        result.values.insert(result.values.end(), slot.values.begin(), slot.values.end());
    }
    if (result.failures > 0 &&
        static_cast<double>(result.failures) >
            kReplicateFatalShare * static_cast<double>(result.attempted)) {
        throw ReplicateFailureError(
            std::to_string(result.failures) + " of " + std::to_string(result.attempted) +
            " bootstrap replicates failed (first: " + result.failure_samples.front() + ")");
    }
    return result;
}

} // namespace

VectorBootstrapResult bootstrap_vector_serial(const Cohort &cohort,
                                              const VectorReplicateEstimator &estimator,
                                              const ResamplePlan &plan) {
    if (plan.replicates == 0) {
        throw DomainError("replicate count must be at least 1");
    }
    std::vector<ReplicateSlot> slots(plan.replicates);
    for (std::uint64_t r = 0; r < plan.replicates; ++r) {
        run_replicate(cohort, estimator, plan.seed, r, slots[r]);
    }
    return collect(std::move(slots));
}

VectorBootstrapResult bootstrap_vector(const Cohort &cohort,
                                       const VectorReplicateEstimator &estimator,
                                       const ResamplePlan &plan) {
    if (plan.workers == 1) {
        return bootstrap_vector_serial(cohort, estimator, plan);
    }
    if (plan.replicates == 0) {
        throw DomainError("replicate count must be at least 1");
    }
    std::vector<ReplicateSlot> slots(plan.replicates);
#ifdef _OPENMP
    const int threads = plan.workers > 0 ? plan.workers : omp_get_max_threads();
    const auto count = static_cast<std::int64_t>(plan.replicates);
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (std::int64_t r = 0; r < count; ++r) {
        run_replicate(cohort, estimator, plan.seed, static_cast<std::uint64_t>(r), slots[r]);
    }
#else
    for (std::uint64_t r = 0; r < plan.replicates; ++r) {
        run_replicate(cohort, estimator, plan.seed, r, slots[r]);
    }
#endif
    return collect(std::move(slots));
}

BootstrapResult bootstrap(const Cohort &cohort, const ReplicateEstimator &estimator,
                          const ResamplePlan &plan) {
    const VectorReplicateEstimator wrapped =
        [&estimator](const Cohort &c, std::span<const std::uint32_t> rows, RandomStream &rng) {
            return std::vector<double>{estimator(c, rows, rng)};
        };
    VectorBootstrapResult vec = bootstrap_vector(cohort, wrapped, plan);
    BootstrapResult result;
    result.values = std::move(vec.values);
    result.attempted = vec.attempted;
    result.failures = vec.failures;
    result.failure_samples = std::move(vec.failure_samples);
    return result;
}

std::vector<double> VectorBootstrapResult::component(std::size_t index) const {
    if (components == 0 || index >= components) {
        throw DomainError("component index out of range");
    }
    std::vector<double> out;
    out.reserve(values.size() / components);
    for (std::size_t i = index; i < values.size(); i += components) {
        out.push_back(values[i]);
    }
    return out;
}

double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw DomainError("percentile of empty input");
    }
    if (q < 0.0 || q > 1.0) {
        throw DomainError("percentile rank must lie in [0, 1]");
    }
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double percentile(std::span<const double> values, double q) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return percentile_sorted(sorted, q);
}

ReplicateSummary summarize(std::span<const double> values) {
    if (values.empty()) {
        throw DomainError("cannot summarize zero replicate values");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    ReplicateSummary summary;
    summary.n = sorted.size();
    summary.median = percentile_sorted(sorted, 0.5);
    summary.p2_5 = percentile_sorted(sorted, 0.025);
    summary.p97_5 = percentile_sorted(sorted, 0.975);

    double mean = 0.0;
    for (const double v : sorted) {
        mean += v;
    }
    mean /= static_cast<double>(sorted.size());
    double ss = 0.0;
    for (const double v : sorted) {
        ss += (v - mean) * (v - mean);
    }
    summary.sd = sorted.size() > 1
                     ? std::sqrt(ss / static_cast<double>(sorted.size() - 1))
                     : 0.0;
    return summary;
}

} // namespace synthmean
