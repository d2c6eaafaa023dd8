#include "synthmean/cohort.hpp"

#include "synthmean/csv.hpp"
#include "synthmean/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace synthmean {

std::optional<Gender> parse_gender(const std::string &text) {
    std::string lower = trim(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "male" || lower == "m" || lower == "1") {
        return Gender::male;
    }
    if (lower == "female" || lower == "f" || lower == "2") {
        return Gender::female;
    }
    return std::nullopt;
}

std::string to_string(Gender gender) {
    return gender == Gender::male ? "male" : "female";
}

Cohort::Cohort(std::vector<Participant> participants, int cutoff, AgeRange age_range)
    : participants_(std::move(participants)), cutoff_(cutoff), age_range_(age_range) {
    if (participants_.empty()) {
        throw DomainError("cohort is empty");
    }
    if (age_range_.min > age_range_.max) {
        throw DomainError("age range is inverted");
    }
    total_weight_ = 0.0;
    for (const auto &p : participants_) {
        if (p.age < age_range_.min || p.age > age_range_.max) {
            throw DomainError("participant " + p.id + " has age outside the cohort range");
        }
        if (!(p.sampling_weight > 0.0)) {
            throw DomainError("participant " + p.id + " has nonpositive sampling weight");
        }
        if (p.positive_region != (p.age >= cutoff_)) {
            throw DomainError("participant " + p.id + " has an inconsistent region flag");
        }
        total_weight_ += p.sampling_weight;
    }
    if (!(total_weight_ > 0.0)) {
        throw DomainError("cohort total weight must be positive");
    }
    identity_rows_.resize(participants_.size());
    std::iota(identity_rows_.begin(), identity_rows_.end(), 0U);
}

std::optional<double> derive_outcome(std::span<const double> readings) {
    if (readings.size() < 2) {
        return std::nullopt;
    }
    double sum = 0.0;
    for (const double r : readings) {
        sum += r;
    }
    return sum / static_cast<double>(readings.size());
}

namespace {

struct ColumnIndices {
    std::size_t id = 0;
    std::size_t age = 0;
    std::size_t gender = 0;
    std::size_t height = 0;
    std::vector<std::size_t> readings;
    std::size_t weight = 0;
    std::optional<std::size_t> height_percentile;
};

ColumnIndices resolve_columns(const CsvReader &reader, const ColumnMapping &mapping) {
    auto require = [&](const std::string &name) {
        const auto idx = reader.column(name);
        if (!idx) {
            throw SchemaError("mapped column '" + name + "' not found in header");
        }
        return *idx;
    };
    ColumnIndices cols;
    cols.id = require(mapping.id);
    cols.age = require(mapping.age);
    cols.gender = require(mapping.gender);
    cols.height = require(mapping.height);
    cols.weight = require(mapping.weight);
    if (mapping.readings.empty() || mapping.readings.size() > 3) {
        throw SchemaError("mapping must name between 1 and 3 reading columns");
    }
    for (const auto &name : mapping.readings) {
        cols.readings.push_back(require(name));
    }
    if (mapping.height_percentile) {
        cols.height_percentile = require(*mapping.height_percentile);
    }
    return cols;
}

} // namespace

ParseResult parse_cohort(std::istream &in, const ColumnMapping &mapping, int cutoff,
                         AgeRange age_range, char delimiter) {
    CsvReader reader(in, delimiter);
    const ColumnIndices cols = resolve_columns(reader, mapping);

    ParseReport report;
    std::vector<Participant> participants;
    std::vector<std::string> fields;
    while (reader.next_row(fields)) {
        ++report.rows_read;
        const std::size_t line = reader.line_number();
        auto fail_row = [&](const std::string &message) {
            report.row_errors.push_back({line, message});
        };

        RawRecord raw;
        raw.id = trim(fields[cols.id]);

        const auto age_value = parse_double(fields[cols.age]);
        if (!age_value) {
            fail_row("age '" + fields[cols.age] + "' is not numeric");
            continue;
        }
        raw.age = static_cast<int>(std::floor(*age_value));

        const auto gender = parse_gender(fields[cols.gender]);
        if (!gender) {
            fail_row("gender '" + fields[cols.gender] + "' not recognized");
            continue;
        }
        raw.gender = *gender;

        const auto weight = parse_double(fields[cols.weight]);
        if (!weight) {
            fail_row("weight '" + fields[cols.weight] + "' is not numeric");
            continue;
        }
        if (*weight < 0.0) {
            fail_row("weight is negative");
            continue;
        }
        raw.sampling_weight = *weight;

        if (!trim(fields[cols.height]).empty()) {
            const auto height = parse_double(fields[cols.height]);
            if (!height) {
                fail_row("height '" + fields[cols.height] + "' is not numeric");
                continue;
            }
            raw.height_cm = *height;
        }

        bool bad_reading = false;
        for (const std::size_t idx : cols.readings) {
            if (trim(fields[idx]).empty()) {
                continue;
            }
            const auto reading = parse_double(fields[idx]);
            if (!reading) {
                fail_row("reading '" + fields[idx] + "' is not numeric");
                bad_reading = true;
                break;
            }
            raw.readings.push_back(*reading);
        }
        if (bad_reading) {
            continue;
        }

        std::optional<double> percentile;
        if (cols.height_percentile && !trim(fields[*cols.height_percentile]).empty()) {
            percentile = parse_double(fields[*cols.height_percentile]);
            if (!percentile) {
                fail_row("height percentile is not numeric");
                continue;
            }
            if (*percentile < 0.0 || *percentile > 100.0) {
                fail_row("height percentile outside [0, 100]");
                continue;
            }
        }

        if (raw.age < age_range.min || raw.age > age_range.max) {
            ++report.dropped_age_out_of_range;
            continue;
        }
        if (raw.sampling_weight == 0.0) {
            ++report.dropped_nonpositive_weight;
            continue;
        }

        Participant p;
        p.id = std::move(raw.id);
        p.age = raw.age;
        p.gender = raw.gender;
        p.height_cm = raw.height_cm;
        p.height_percentile = percentile;
        p.outcome = derive_outcome(raw.readings);
        p.positive_region = raw.age >= cutoff;
        p.sampling_weight = raw.sampling_weight;
        participants.push_back(std::move(p));
        ++report.retained;
    }

    if (participants.empty()) {
        throw DomainError("no rows retained from input");
    }
    return ParseResult{Cohort(std::move(participants), cutoff, age_range), std::move(report)};
}

Cohort empirical_height_percentile(const Cohort &cohort) {
    std::vector<std::string> missing_ids;
    for (const auto &p : cohort.participants()) {
        if (!p.height_cm) {
            missing_ids.push_back(p.id);
        }
    }
    if (!missing_ids.empty()) {
        std::ostringstream msg;
        msg << "height missing for " << missing_ids.size() << " participant(s):";
        const std::size_t shown = std::min<std::size_t>(missing_ids.size(), 10);
        for (std::size_t i = 0; i < shown; ++i) {
            msg << ' ' << missing_ids[i];
        }
        if (missing_ids.size() > shown) {
            msg << " ...";
        }
        throw DomainError(msg.str());
    }

    // (age, gender) -> list of (height, weight, row index).
    struct Entry {
        double height;
        double weight;
        std::size_t row;
    };
    std::map<std::pair<int, int>, std::vector<Entry>> strata;
    const auto &participants = cohort.participants();
    for (std::size_t i = 0; i < participants.size(); ++i) {
        const auto &p = participants[i];
        strata[{p.age, static_cast<int>(p.gender)}].push_back(
            {*p.height_cm, p.sampling_weight, i});
    }

    std::vector<Participant> updated = participants;
    for (auto &[key, entries] : strata) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const Entry &a, const Entry &b) { return a.height < b.height; });
        double stratum_weight = 0.0;
        for (const auto &e : entries) {
            stratum_weight += e.weight;
        }
        if (!(stratum_weight > 0.0)) {
            throw DomainError("zero total weight in stratum age " + std::to_string(key.first));
        }
        // Walk tie groups: rank = weight strictly below + half the tied weight.
        std::size_t i = 0;
        double below = 0.0;
        while (i < entries.size()) {
            std::size_t j = i;
            double tied = 0.0;
            while (j < entries.size() && entries[j].height == entries[i].height) {
                tied += entries[j].weight;
                ++j;
            }
            for (std::size_t k = i; k < j; ++k) {
                const double rank = below + 0.5 * tied;
                updated[entries[k].row].height_percentile = 100.0 * rank / stratum_weight;
            }
            below += tied;
            i = j;
        }
    }
    return Cohort(std::move(updated), cohort.cutoff(), cohort.age_range());
}

std::vector<MissingnessRow> missingness_table(const Cohort &cohort) {
    std::map<int, MissingnessRow> rows;
    for (const auto &p : cohort.participants()) {
        auto &row = rows[p.age];
        row.age = p.age;
        row.n += 1;
        row.weighted_pct += p.sampling_weight;
        if (!p.observed()) {
            row.n_missing += 1;
        }
    }
    std::vector<MissingnessRow> result;
    result.reserve(rows.size());
    for (auto &[age, row] : rows) {
        row.weighted_pct = 100.0 * row.weighted_pct / cohort.total_weight();
        row.pct_missing =
            100.0 * static_cast<double>(row.n_missing) / static_cast<double>(row.n);
        result.push_back(row);
    }
    return result;
}

} // namespace synthmean
