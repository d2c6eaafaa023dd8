#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synthmean {

enum class Gender : std::uint8_t { male, female };

/// Parses "male"/"female"/"m"/"f" (case-insensitive) and the survey codes
/// 1 (male) / 2 (female).
std::optional<Gender> parse_gender(const std::string &text);
std::string to_string(Gender gender);

/// One input row before validation and outcome derivation.
struct RawRecord {
    std::string id;
    int age = 0;
    Gender gender = Gender::male;
    std::optional<double> height_cm;
    std::vector<double> readings; // at most 3
    double sampling_weight = 0.0;
};

/// One cohort member after derivation. The outcome is present exactly when
/// it was observed, so the R indicator is structural.
struct Participant {
    std::string id;
    int age = 0;
    Gender gender = Gender::male;
    std::optional<double> height_cm;
    std::optional<double> height_percentile; // in [0, 100] once computed
    std::optional<double> outcome;           // mm Hg
    bool positive_region = false;            // age >= cutoff
    double sampling_weight = 0.0;            // > 0

    bool observed() const { return outcome.has_value(); }
};

struct AgeRange {
    int min = 2;
    int max = 17;
};

/// Immutable analysis cohort. Validates age bounds, nonemptiness, and a
/// positive total weight on construction; safe to share across threads.
class Cohort {
  public:
    Cohort(std::vector<Participant> participants, int cutoff, AgeRange age_range);

    const std::vector<Participant> &participants() const { return participants_; }
    std::size_t size() const { return participants_.size(); }
    int cutoff() const { return cutoff_; }
    AgeRange age_range() const { return age_range_; }
    double total_weight() const { return total_weight_; }

    /// 0..n-1, for passing the full cohort through row-indexed estimators.
    std::span<const std::uint32_t> identity_rows() const { return identity_rows_; }

  private:
    std::vector<Participant> participants_;
    int cutoff_;
    AgeRange age_range_;
    double total_weight_;
    std::vector<std::uint32_t> identity_rows_;
};

/// Binds schema roles to input column names.
struct ColumnMapping {
    std::string id = "id";
    std::string age = "age";
    std::string gender = "gender";
    std::string height = "height_cm";
    std::vector<std::string> readings = {"reading1", "reading2", "reading3"};
    std::string weight = "weight";
    /// Optional column of precomputed height percentiles; when set, the
    /// empirical computation is skipped.
    std::optional<std::string> height_percentile;
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParseReport {
    std::size_t rows_read = 0;
    std::size_t retained = 0;
    std::size_t dropped_age_out_of_range = 0;
    std::size_t dropped_nonpositive_weight = 0;
    std::vector<RowError> row_errors;
};

struct ParseResult {
    Cohort cohort;
    ParseReport report;
};

/// Mean of the available readings when two or more are present, absent
/// otherwise.
std::optional<double> derive_outcome(std::span<const double> readings);

/// Reads, validates, and derives the cohort. Rows with ages outside
/// `age_range` or nonpositive weights are dropped and counted; malformed
/// rows are recorded with their line numbers and skipped. A mapped column
/// missing from the header is fatal.
ParseResult parse_cohort(std::istream &in, const ColumnMapping &mapping, int cutoff,
                         AgeRange age_range, char delimiter = ',');

/// Returns a copy of the cohort with height percentiles computed within each
/// (age, gender) stratum: 100 * (weight strictly below + half the tied
/// weight) / stratum weight. All heights must be present.
Cohort empirical_height_percentile(const Cohort &cohort);

struct MissingnessRow {
    int age = 0;
    std::size_t n = 0;
    double weighted_pct = 0.0; // share of total cohort weight, in percent
    std::size_t n_missing = 0;
    double pct_missing = 0.0; // unweighted count ratio within the age
};

/// Per-age participation and missingness summary, ages ascending.
std::vector<MissingnessRow> missingness_table(const Cohort &cohort);

} // namespace synthmean
