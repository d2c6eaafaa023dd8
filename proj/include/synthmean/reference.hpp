#pragma once

#include "synthmean/cohort.hpp"
#include "synthmean/random.hpp"

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace synthmean {

/// Standard-normal 90th-percentile quantile used to back out a normal SD
/// from published (median, 90th percentile) pairs.
inline constexpr double kNormalQuantile90 = 1.2815516;

/// One published outcome distribution: (age, gender, height-percentile
/// bracket) with its median and 90th percentile in mm Hg.
struct ReferenceRow {
    int age = 0;
    Gender gender = Gender::male;
    double height_percentile = 50.0;
    double p50 = 0.0;
    double p90 = 0.0;
};

struct NormalParams {
    double mean = 0.0;
    double sd = 0.0;
};

/// mean = p50, sd = (p90 - p50) / z_0.90. Requires p90 > p50.
NormalParams params_from_percentiles(double p50, double p90);

/// Bracket minimizing |percentile - bracket|, ties toward the lower bracket.
/// `brackets` must be nonempty and sorted ascending.
double nearest_bracket(double percentile, std::span<const double> brackets);

/// External reference distributions, immutable after load.
class ReferenceTable {
  public:
    explicit ReferenceTable(std::vector<ReferenceRow> rows);

    const std::vector<ReferenceRow> &rows() const { return rows_; }

    bool covers(int age, Gender gender) const;

    /// Sorted brackets available for a stratum. Throws CoverageError if the
    /// (age, gender) pair is not covered.
    std::span<const double> brackets(int age, Gender gender) const;

    /// The row whose bracket is nearest to `height_percentile`.
    const ReferenceRow &match(int age, Gender gender, double height_percentile) const;

    /// Normal parameters for the matched row.
    NormalParams params(int age, Gender gender, double height_percentile) const;

    /// Writes the table back out in canonical formatting (header plus rows
    /// sorted by age, gender, bracket; shortest round-trip numerals).
    void save(std::ostream &out) const;

  private:
    struct Stratum {
        std::vector<double> brackets;
        std::vector<ReferenceRow> rows; // same order as brackets
    };

    const Stratum *find(int age, Gender gender) const;

    std::vector<ReferenceRow> rows_;
    int age_min_ = 0;
    std::vector<Stratum> strata_; // indexed by (age - age_min_) * 2 + gender
};

/// Loads and validates the reference CSV (columns: age, gender,
/// height_percentile, p50, p90). Rows violating p90 > p50 and duplicate
/// (age, gender, bracket) keys are fatal, with row numbers.
ReferenceTable load_reference_table(std::istream &in, char delimiter = ',');

/// One normal variate for the participant's stratum. Consumes exactly one
/// normal variate from `rng`.
double draw_outcome(const ReferenceTable &table, int age, Gender gender,
                    double height_percentile, RandomStream &rng);

/// n draws from one stratum, for plot-data emission.
std::vector<double> simulate_stratum(const ReferenceTable &table, int age, Gender gender,
                                     double height_percentile, std::size_t n,
                                     RandomStream &rng);

} // namespace synthmean
