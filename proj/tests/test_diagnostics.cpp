#include "synthmean/diagnostics.hpp"
#include "synthmean/errors.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace synthmean;
using helpers::person;

TEST_CASE("math_model_age_mean basics") {
    const int cutoff = 8;
    SUBCASE("degenerate reference collapses to the stratum p50") {
        const auto table = helpers::flat_table(8, 17, 96.0, 96.0 + 1.2815516e-9);
        std::vector<Participant> people = {
            person("a", 9, Gender::male, 2.0, 100.0, cutoff, 130.0, 50.0)};
        const Cohort cohort(std::move(people), cutoff, {2, 17});
        RandomStream rng(5);
        const double mean =
            math_model_age_mean(table, cohort, cohort.identity_rows(), 9, rng, 10);
        CHECK(mean == doctest::Approx(96.0).epsilon(1e-9));
    }
    SUBCASE("two equal-weight strata mix toward the midpoint") {
        std::vector<ReferenceRow> rows = {{9, Gender::male, 50.0, 100.0, 111.0},
                                          {9, Gender::female, 50.0, 110.0, 121.0}};
        const ReferenceTable table{std::move(rows)};
        std::vector<Participant> people = {
            person("m", 9, Gender::male, 1.0, 100.0, cutoff, 130.0, 50.0),
            person("f", 9, Gender::female, 1.0, 110.0, cutoff, 132.0, 50.0)};
        const Cohort cohort(std::move(people), cutoff, {2, 17});
        RandomStream rng(11);
        // Large draw count: the Monte Carlo error of the mixture mean is
        // sd/sqrt(2*draws) with sd about 8.6.
        const double mean =
            math_model_age_mean(table, cohort, cohort.identity_rows(), 9, rng, 20000);
        CHECK(mean == doctest::Approx(105.0).epsilon(4.0 * 8.6 / std::sqrt(40000.0) / 105.0));
    }
    SUBCASE("deterministic under a fixed stream") {
        const auto table = helpers::flat_table(8, 17, 96.0, 108.0);
        const auto cohort = helpers::random_cohort(50, 33);
        RandomStream a(17);
        RandomStream b(17);
        CHECK(math_model_age_mean(table, cohort, cohort.identity_rows(), 10, a, 7) ==
              math_model_age_mean(table, cohort, cohort.identity_rows(), 10, b, 7));
    }
    SUBCASE("rejects ages below the cutoff") {
        const auto table = helpers::flat_table(2, 17, 96.0, 108.0);
        const auto cohort = helpers::random_cohort(50, 33);
        RandomStream rng(1);
        CHECK_THROWS_AS(math_model_age_mean(table, cohort, cohort.identity_rows(), 5, rng, 1),
                        DomainError);
    }
}

TEST_CASE("diagnostic_compare structure and determinism") {
    const auto cohort = helpers::random_cohort(400, 61);
    // Reference table only covers the positive region: the diagnostic never
    // queries strata below the cutoff, so this must succeed.
    const auto table = helpers::flat_table(8, 17, 101.0, 113.0);
    const ResamplePlan plan{400, 7, 1};
    const auto result = diagnostic_compare(cohort, table, plan, 25);

    REQUIRE(result.rows.size() == 10);
    int age = 8;
    for (const auto &row : result.rows) {
        CHECK(row.age == age++);
        CHECK(row.diff == doctest::Approx(row.stat_mean - row.math_mean).epsilon(1e-12));
        CHECK(row.ci_lower <= row.ci_upper);
    }

    const auto again = diagnostic_compare(cohort, table, plan, 25);
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        CHECK(result.rows[i].diff == again.rows[i].diff);
        CHECK(result.rows[i].ci_lower == again.rows[i].ci_lower);
        CHECK(result.rows[i].ci_upper == again.rows[i].ci_upper);
    }

    const auto parallel =
        diagnostic_compare(cohort, table, ResamplePlan{400, 7, 3}, 25);
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        CHECK(result.rows[i].ci_lower == parallel.rows[i].ci_lower);
        CHECK(result.rows[i].ci_upper == parallel.rows[i].ci_upper);
    }
}

TEST_CASE("diagnostic diff is zero when the models agree by construction") {
    // Outcomes exactly equal each participant's reference p50 and the
    // reference SD is tiny: stat and math sides coincide.
    const int cutoff = 8;
    const double p50 = 103.0;
    const auto table = helpers::flat_table(8, 17, p50, p50 + 1.2815516e-9);
    std::vector<Participant> people;
    for (int i = 0; i < 60; ++i) {
        const int age = 8 + i % 10;
        people.push_back(person("p" + std::to_string(i), age,
                                i % 2 == 0 ? Gender::male : Gender::female, 1.0 + i % 4,
                                p50, cutoff, 120.0 + age, 50.0));
    }
    const Cohort cohort(std::move(people), cutoff, {2, 17});
    const auto result = diagnostic_compare(cohort, table, ResamplePlan{100, 3, 1}, 5);
    for (const auto &row : result.rows) {
        CHECK(row.diff == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(row.ci_lower <= 0.0 + 1e-9);
        CHECK(row.ci_upper >= 0.0 - 1e-9);
    }
}

TEST_CASE("diagnostic antisymmetry: swapping model roles negates diffs") {
    const auto cohort = helpers::random_cohort(200, 44);
    const auto table = helpers::flat_table(8, 17, 101.0, 113.0);
    const auto result = diagnostic_compare(cohort, table, ResamplePlan{200, 5, 1}, 10);
    for (const auto &row : result.rows) {
        const double swapped_diff = row.math_mean - row.stat_mean;
        CHECK(swapped_diff == doctest::Approx(-row.diff).epsilon(1e-12));
        // Reflecting the CI around zero swaps and negates its endpoints.
        const double lo = -row.ci_upper;
        const double hi = -row.ci_lower;
        CHECK(lo <= hi);
    }
}

TEST_CASE("diagnostic fails when an age is empty in the positive region") {
    const int cutoff = 8;
    std::vector<Participant> people = {
        person("a", 9, Gender::male, 1.0, 100.0, cutoff, 130.0, 50.0)};
    const Cohort cohort(std::move(people), cutoff, {2, 17});
    const auto table = helpers::flat_table(8, 17, 101.0, 113.0);
    CHECK_THROWS_AS(diagnostic_compare(cohort, table, ResamplePlan{50, 3, 1}, 5),
                    PositivityError);
}
