#include "synthmean/reference.hpp"

#include "synthmean/csv.hpp"
#include "synthmean/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <tuple>

namespace synthmean {

NormalParams params_from_percentiles(double p50, double p90) {
    if (!(p90 > p50)) {
        throw DomainError("p90 must exceed p50 (got p50=" + format_double(p50) +
                          ", p90=" + format_double(p90) + ")");
    }
    return NormalParams{p50, (p90 - p50) / kNormalQuantile90};
}

double nearest_bracket(double percentile, std::span<const double> brackets) {
    if (brackets.empty()) {
        throw DomainError("bracket list is empty");
    }
    double best = brackets[0];
    double best_dist = std::abs(percentile - brackets[0]);
    for (const double b : brackets.subspan(1)) {
        const double dist = std::abs(percentile - b);
        if (dist < best_dist) {
            best = b;
            best_dist = dist;
        }
    }
    return best;
}

ReferenceTable::ReferenceTable(std::vector<ReferenceRow> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) {
        throw SchemaError("reference table is empty");
    }
    std::sort(rows_.begin(), rows_.end(), [](const ReferenceRow &a, const ReferenceRow &b) {
        return std::tuple(a.age, static_cast<int>(a.gender), a.height_percentile) <
               std::tuple(b.age, static_cast<int>(b.gender), b.height_percentile);
    });
    int age_max = rows_.front().age;
    age_min_ = rows_.front().age;
    for (const auto &row : rows_) {
        age_min_ = std::min(age_min_, row.age);
        age_max = std::max(age_max, row.age);
    }
    strata_.resize(static_cast<std::size_t>(age_max - age_min_ + 1) * 2);
    for (const auto &row : rows_) {
        auto &stratum = strata_[static_cast<std::size_t>(row.age - age_min_) * 2 +
                                static_cast<std::size_t>(row.gender)];
        if (!stratum.brackets.empty() && stratum.brackets.back() >= row.height_percentile) {
            throw SchemaError("duplicate reference key (age " + std::to_string(row.age) + ", " +
                              to_string(row.gender) + ", bracket " +
                              format_double(row.height_percentile) + ")");
        }
        stratum.brackets.push_back(row.height_percentile);
        stratum.rows.push_back(row);
    }
}

const ReferenceTable::Stratum *ReferenceTable::find(int age, Gender gender) const {
    if (age < age_min_) {
        return nullptr;
    }
    const auto idx =
        static_cast<std::size_t>(age - age_min_) * 2 + static_cast<std::size_t>(gender);
    if (idx >= strata_.size() || strata_[idx].brackets.empty()) {
        return nullptr;
    }
    return &strata_[idx];
}

bool ReferenceTable::covers(int age, Gender gender) const {
    return find(age, gender) != nullptr;
}

std::span<const double> ReferenceTable::brackets(int age, Gender gender) const {
    const Stratum *stratum = find(age, gender);
    if (stratum == nullptr) {
        throw CoverageError("reference table does not cover age " + std::to_string(age) + ", " +
                            to_string(gender));
    }
    return stratum->brackets;
}

const ReferenceRow &ReferenceTable::match(int age, Gender gender,
                                          double height_percentile) const {
    const Stratum *stratum = find(age, gender);
    if (stratum == nullptr) {
        throw CoverageError("reference table does not cover age " + std::to_string(age) + ", " +
                            to_string(gender));
    }
    const double bracket = nearest_bracket(height_percentile, stratum->brackets);
    const auto it = std::lower_bound(stratum->brackets.begin(), stratum->brackets.end(), bracket);
    return stratum->rows[static_cast<std::size_t>(it - stratum->brackets.begin())];
}

NormalParams ReferenceTable::params(int age, Gender gender, double height_percentile) const {
    const ReferenceRow &row = match(age, gender, height_percentile);
    return params_from_percentiles(row.p50, row.p90);
}

void ReferenceTable::save(std::ostream &out) const {
    out << "age,gender,height_percentile,p50,p90\n";
    for (const auto &row : rows_) {
        out << row.age << ',' << to_string(row.gender) << ','
            << format_double(row.height_percentile) << ',' << format_double(row.p50) << ','
            << format_double(row.p90) << '\n';
    }
}

ReferenceTable load_reference_table(std::istream &in, char delimiter) {
    CsvReader reader(in, delimiter);
    auto require = [&](const std::string &name) {
        const auto idx = reader.column(name);
        if (!idx) {
            throw SchemaError("reference table is missing column '" + name + "'");
        }
        return *idx;
    };
    const std::size_t col_age = require("age");
    const std::size_t col_gender = require("gender");
    const std::size_t col_bracket = require("height_percentile");
    const std::size_t col_p50 = require("p50");
    const std::size_t col_p90 = require("p90");

    std::vector<ReferenceRow> rows;
    std::set<std::tuple<int, int, double>> seen;
    std::vector<std::string> fields;
    while (reader.next_row(fields)) {
        const std::string where = " (row at line " + std::to_string(reader.line_number()) + ")";
        ReferenceRow row;
        const auto age = parse_double(fields[col_age]);
        if (!age) {
            throw SchemaError("reference age is not numeric" + where);
        }
        row.age = static_cast<int>(std::floor(*age));
        const auto gender = parse_gender(fields[col_gender]);
        if (!gender) {
            throw SchemaError("reference gender not recognized" + where);
        }
        row.gender = *gender;
        const auto bracket = parse_double(fields[col_bracket]);
        if (!bracket || !(*bracket > 0.0) || !(*bracket < 100.0)) {
            throw SchemaError("reference height percentile must lie in (0, 100)" + where);
        }
        row.height_percentile = *bracket;
        const auto p50 = parse_double(fields[col_p50]);
        const auto p90 = parse_double(fields[col_p90]);
        if (!p50 || !p90) {
            throw SchemaError("reference p50/p90 is not numeric" + where);
        }
        row.p50 = *p50;
        row.p90 = *p90;
        if (!(row.p90 > row.p50)) {
            throw SchemaError("reference row requires p90 > p50" + where);
        }
        if (!seen.insert({row.age, static_cast<int>(row.gender), row.height_percentile}).second) {
            throw SchemaError("duplicate reference key" + where);
        }
        rows.push_back(row);
    }
    return ReferenceTable(std::move(rows));
}

double draw_outcome(const ReferenceTable &table, int age, Gender gender,
                    double height_percentile, RandomStream &rng) {
    const NormalParams params = table.params(age, gender, height_percentile);
    return params.mean + params.sd * rng.next_normal();
}

std::vector<double> simulate_stratum(const ReferenceTable &table, int age, Gender gender,
                                     double height_percentile, std::size_t n,
                                     RandomStream &rng) {
    const NormalParams params = table.params(age, gender, height_percentile);
    std::vector<double> draws;
    draws.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        draws.push_back(params.mean + params.sd * rng.next_normal());
    }
    return draws;
}

} // namespace synthmean
