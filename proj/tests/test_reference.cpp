#include "synthmean/reference.hpp"
#include "synthmean/errors.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace synthmean;

TEST_CASE("params_from_percentiles matches an independent quantile oracle") {
    const double z90 = oracles::normal_quantile(0.90);

    SUBCASE("unit construction") {
        const auto params = params_from_percentiles(100.0, 100.0 + 1.2815516);
        CHECK(params.mean == 100.0);
        CHECK(params.sd == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("published-style pairs") {
        const auto a = params_from_percentiles(102.0, 113.0);
        CHECK(a.sd == doctest::Approx(11.0 / z90).epsilon(1e-6));
        CHECK(a.sd == doctest::Approx(8.5834).epsilon(1e-4));

        const auto b = params_from_percentiles(90.0, 104.0);
        CHECK(b.sd == doctest::Approx(14.0 / z90).epsilon(1e-6));
        CHECK(b.sd == doctest::Approx(10.9242).epsilon(1e-4));
    }
    SUBCASE("rejects p90 <= p50") {
        CHECK_THROWS_AS(params_from_percentiles(100.0, 100.0), DomainError);
        CHECK_THROWS_AS(params_from_percentiles(100.0, 95.0), DomainError);
    }
}

TEST_CASE("params_from_percentiles sd is strictly increasing in p90") {
    double last = 0.0;
    for (double p90 = 101.0; p90 < 130.0; p90 += 1.7) {
        const double sd = params_from_percentiles(100.0, p90).sd;
        CHECK(sd > last);
        last = sd;
    }
}

TEST_CASE("nearest_bracket picks the closest value, ties to the lower") {
    const std::vector<double> brackets = {5, 10, 25, 50, 75, 90, 95};
    CHECK(nearest_bracket(37.0, brackets) == 25.0);
    CHECK(nearest_bracket(99.0, brackets) == 95.0);
    CHECK(nearest_bracket(0.0, brackets) == 5.0);

    const std::vector<double> pair = {25, 50};
    CHECK(nearest_bracket(37.5, pair) == 25.0);

    // Idempotent on bracket values themselves.
    for (const double b : brackets) {
        CHECK(nearest_bracket(b, brackets) == b);
    }
}

TEST_CASE("load_reference_table validates rows") {
    SUBCASE("accepts a valid row") {
        std::istringstream in("age,gender,height_percentile,p50,p90\n8,male,50,102,113\n");
        const auto table = load_reference_table(in);
        CHECK(table.covers(8, Gender::male));
        CHECK_FALSE(table.covers(8, Gender::female));
    }
    SUBCASE("rejects p90 == p50 with the row number") {
        std::istringstream in("age,gender,height_percentile,p50,p90\n"
                              "8,male,50,102,113\n"
                              "9,male,50,104,104\n");
        CHECK_THROWS_WITH_AS(load_reference_table(in), doctest::Contains("line 3"),
                             SchemaError);
    }
    SUBCASE("rejects duplicate keys") {
        std::istringstream in("age,gender,height_percentile,p50,p90\n"
                              "8,male,50,102,113\n"
                              "8,male,50,103,114\n");
        CHECK_THROWS_AS(load_reference_table(in), SchemaError);
    }
    SUBCASE("rejects an empty table") {
        std::istringstream in("age,gender,height_percentile,p50,p90\n");
        CHECK_THROWS_AS(load_reference_table(in), SchemaError);
    }
    SUBCASE("rejects a missing column") {
        std::istringstream in("age,gender,p50,p90\n8,male,102,113\n");
        CHECK_THROWS_AS(load_reference_table(in), SchemaError);
    }
}

TEST_CASE("uncovered strata raise coverage errors at draw time") {
    const auto table = helpers::flat_table(8, 17, 100.0, 113.0);
    RandomStream rng(5);
    CHECK_THROWS_AS(draw_outcome(table, 2, Gender::female, 50.0, rng), CoverageError);
    CHECK_NOTHROW(draw_outcome(table, 9, Gender::female, 50.0, rng));
}

TEST_CASE("draw_outcome is deterministic and tracks its parameters") {
    const auto table = helpers::flat_table(8, 9, 100.0, 100.0 + 1.2815516);

    SUBCASE("identical streams give identical draws") {
        RandomStream a(42);
        RandomStream b(42);
        for (int i = 0; i < 10; ++i) {
            CHECK(draw_outcome(table, 8, Gender::male, 50.0, a) ==
                  draw_outcome(table, 8, Gender::male, 50.0, b));
        }
    }
    SUBCASE("mean of 20000 draws concentrates at p50") {
        RandomStream rng(7);
        double sum = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            sum += draw_outcome(table, 8, Gender::male, 50.0, rng);
        }
        // sd = 1, so the Monte Carlo standard error is 1/sqrt(20000).
        CHECK(sum / n == doctest::Approx(100.0).epsilon(4e-4));
    }
}

TEST_CASE("draw_outcome empirical distribution matches its normal parameters") {
    const auto table = helpers::flat_table(10, 10, 102.0, 113.0);
    const auto params = params_from_percentiles(102.0, 113.0);

    RandomStream rng(2024);
    const int n = 100000;
    std::vector<double> draws;
    draws.reserve(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = draw_outcome(table, 10, Gender::female, 50.0, rng);
        draws.push_back(v);
        sum += v;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const double v : draws) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / (n - 1));

    const double mean_se = params.sd / std::sqrt(static_cast<double>(n));
    const double sd_se = params.sd / std::sqrt(2.0 * (n - 1));
    CHECK(std::abs(mean - params.mean) < 5.0 * mean_se);
    CHECK(std::abs(sd - params.sd) < 5.0 * sd_se);

    // Empirical 90th percentile should sit near the published p90.
    std::sort(draws.begin(), draws.end());
    const double q90 = draws[static_cast<std::size_t>(0.90 * n)];
    CHECK(q90 == doctest::Approx(113.0).epsilon(0.3 / 113.0));
}

TEST_CASE("simulate_stratum is a vectorized draw") {
    const auto table = helpers::flat_table(8, 8, 95.0, 107.0);
    RandomStream rng(9);
    CHECK(simulate_stratum(table, 8, Gender::male, 50.0, 0, rng).empty());

    const auto draws = simulate_stratum(table, 8, Gender::male, 50.0, 20000, rng);
    CHECK(draws.size() == 20000);

    const auto params = params_from_percentiles(95.0, 107.0);
    double sum = 0.0;
    for (const double v : draws) {
        sum += v;
    }
    const double se = params.sd / std::sqrt(20000.0);
    CHECK(std::abs(sum / 20000.0 - 95.0) < 4.0 * se);
}

TEST_CASE("reference table save round-trips bit-identically") {
    std::istringstream in("age,gender,height_percentile,p50,p90\n"
                          "9,female,25,101.5,112.25\n"
                          "9,female,75,103.1,114\n"
                          "8,male,50,102,113\n");
    const auto table = load_reference_table(in);

    std::ostringstream first;
    table.save(first);

    std::istringstream again(first.str());
    const auto reloaded = load_reference_table(again);
    std::ostringstream second;
    reloaded.save(second);

    CHECK(first.str() == second.str());
}
