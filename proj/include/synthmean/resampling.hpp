#pragma once

#include "synthmean/cohort.hpp"
#include "synthmean/random.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace synthmean {

struct ResamplePlan {
    std::uint64_t replicates = 20000;
    std::uint64_t seed = 1;
    /// Worker threads for the replicate loop. 1 = serial reference path,
    /// 0 = all hardware threads. Results are identical at any level.
    int workers = 1;
};

struct ReplicateSummary {
    double median = 0.0;
    double p2_5 = 0.0;
    double p97_5 = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

/// Replicate estimator: receives the base cohort, the resampled row indices
/// (in draw order), and the replicate's private random stream. Non-random
/// estimators ignore the stream.
using ReplicateEstimator =
    std::function<double(const Cohort &, std::span<const std::uint32_t>, RandomStream &)>;

/// Vector-valued variant (one value per component, fixed length across
/// replicates), used by the diagnostics module.
using VectorReplicateEstimator = std::function<std::vector<double>(
    const Cohort &, std::span<const std::uint32_t>, RandomStream &)>;

struct BootstrapResult {
    /// Successful replicate values in replicate order (failures excluded).
    std::vector<double> values;
    std::uint64_t attempted = 0;
    std::uint64_t failures = 0;
    /// First few failure messages, for the report.
    std::vector<std::string> failure_samples;
};

struct VectorBootstrapResult {
    std::size_t components = 0;
    /// Successful replicates, row-major (replicate-major), failures excluded.
    std::vector<double> values;
    std::uint64_t attempted = 0;
    std::uint64_t failures = 0;
    std::vector<std::string> failure_samples;

    /// Values of one component across successful replicates.
    std::vector<double> component(std::size_t index) const;
};

/// n uniform draws with replacement from [0, n), in draw order.
std::vector<std::uint32_t> resample_indices(std::size_t n, RandomStream &rng);

/// Materialized resample of the cohort (weights carried, not used for the
/// draw probabilities).
Cohort resample_with_replacement(const Cohort &cohort, RandomStream &rng);

/// Runs `plan.replicates` bootstrap replicates. Replicate r resamples and
/// estimates with substream (plan.seed, r), so output is independent of the
/// worker count. Replicates whose estimator throws are recorded and
/// excluded; more than 10% failures is fatal.
BootstrapResult bootstrap(const Cohort &cohort, const ReplicateEstimator &estimator,
                          const ResamplePlan &plan);

VectorBootstrapResult bootstrap_vector(const Cohort &cohort,
                                       const VectorReplicateEstimator &estimator,
                                       const ResamplePlan &plan);

/// Serial reference implementation of the replicate loop; the parallel path
/// must match it byte for byte.
VectorBootstrapResult bootstrap_vector_serial(const Cohort &cohort,
                                              const VectorReplicateEstimator &estimator,
                                              const ResamplePlan &plan);

/// Linear interpolation between order statistics at rank 1 + q*(n-1).
double percentile(std::span<const double> values, double q);

/// Same, but `sorted` must already be ascending.
double percentile_sorted(std::span<const double> sorted, double q);

/// Median, 2.5th/97.5th percentiles, and sample standard deviation.
ReplicateSummary summarize(std::span<const double> values);

/// Share of attempted replicates that failed; used for the warn/fatal
/// thresholds.
inline constexpr double kReplicateWarnShare = 0.01;
inline constexpr double kReplicateFatalShare = 0.10;

} // namespace synthmean
