// Shared toy-data builders for the test suites.
#pragma once

#include "synthmean/cohort.hpp"
#include "synthmean/random.hpp"
#include "synthmean/reference.hpp"

#include <optional>
#include <string>
#include <vector>

namespace helpers {

using synthmean::AgeRange;
using synthmean::Cohort;
using synthmean::Gender;
using synthmean::Participant;
using synthmean::ReferenceRow;
using synthmean::ReferenceTable;

inline Participant person(std::string id, int age, Gender gender, double weight,
                          std::optional<double> outcome, int cutoff,
                          std::optional<double> height = std::nullopt,
                          std::optional<double> percentile = std::nullopt) {
    Participant p;
    p.id = std::move(id);
    p.age = age;
    p.gender = gender;
    p.height_cm = height;
    p.height_percentile = percentile;
    p.outcome = outcome;
    p.positive_region = age >= cutoff;
    p.sampling_weight = weight;
    return p;
}

/// Reference table with a single 50th-percentile bracket per (age, gender):
/// bracket matching is then irrelevant and each stratum draws from
/// Normal(p50, (p90-p50)/z90).
inline ReferenceTable flat_table(int age_min, int age_max, double p50, double p90) {
    std::vector<ReferenceRow> rows;
    for (int age = age_min; age <= age_max; ++age) {
        for (const Gender g : {Gender::male, Gender::female}) {
            rows.push_back({age, g, 50.0, p50, p90});
        }
    }
    return ReferenceTable(std::move(rows));
}

/// Random toy cohort spanning both regions; outcomes observed only in the
/// positive region (and only with probability obs_prob there).
inline Cohort random_cohort(std::size_t n, std::uint64_t seed, int cutoff = 8,
                            AgeRange range = {2, 17}, double obs_prob = 0.9) {
    synthmean::RandomStream rng(seed);
    std::vector<Participant> people;
    people.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int age =
            range.min + static_cast<int>(rng.next_below(
                            static_cast<std::uint64_t>(range.max - range.min + 1)));
        const Gender g = rng.next_below(2) == 0 ? Gender::male : Gender::female;
        const double weight = 0.5 + rng.next_double();
        std::optional<double> outcome;
        if (age >= cutoff && rng.next_double() < obs_prob) {
            outcome = 90.0 + 1.1 * age + 8.0 * rng.next_normal();
        }
        auto p = person("t" + std::to_string(i), age, g, weight, outcome, cutoff,
                        80.0 + 5.5 * age + 6.0 * rng.next_normal(),
                        100.0 * rng.next_double());
        people.push_back(std::move(p));
    }
    // Guarantee every positive-region age has at least one observed outcome
    // so saturated fits on the full data cannot fail.
    for (int age = cutoff; age <= range.max; ++age) {
        bool seen = false;
        for (const auto &p : people) {
            if (p.age == age && p.observed()) {
                seen = true;
                break;
            }
        }
        if (!seen) {
            people.push_back(person("fill" + std::to_string(age), age, Gender::male, 1.0,
                                    90.0 + 1.1 * age, cutoff, 80.0 + 5.5 * age, 50.0));
        }
    }
    return Cohort(std::move(people), cutoff, range);
}

} // namespace helpers
