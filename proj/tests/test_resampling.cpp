#include "synthmean/resampling.hpp"
#include "synthmean/errors.hpp"
#include "synthmean/estimators.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace synthmean;
using helpers::person;

TEST_CASE("resample_with_replacement basics") {
    SUBCASE("size-1 cohort resamples to itself") {
        std::vector<Participant> people = {person("only", 9, Gender::male, 1.0, 100.0, 8)};
        const Cohort cohort(std::move(people), 8, {2, 17});
        RandomStream rng(3);
        const Cohort drawn = resample_with_replacement(cohort, rng);
        REQUIRE(drawn.size() == 1);
        CHECK(drawn.participants()[0].id == "only");
    }
    SUBCASE("seeded draws reproduce bit-exactly") {
        const auto cohort = helpers::random_cohort(40, 5);
        RandomStream a(123);
        RandomStream b(123);
        const auto ia = resample_indices(cohort.size(), a);
        const auto ib = resample_indices(cohort.size(), b);
        CHECK(ia == ib);
    }
    SUBCASE("slot inclusion frequencies are uniform") {
        // 10,000 resamples of a 5-row cohort: each row should land in each
        // slot with frequency 0.2; binomial SE is sqrt(0.2*0.8/10000).
        const std::size_t n = 5;
        const int reps = 10000;
        std::vector<std::vector<int>> counts(n, std::vector<int>(n, 0));
        RandomStream rng(777);
        for (int r = 0; r < reps; ++r) {
            const auto idx = resample_indices(n, rng);
            for (std::size_t slot = 0; slot < n; ++slot) {
                counts[slot][idx[slot]] += 1;
            }
        }
        const double se = std::sqrt(0.2 * 0.8 / reps);
        for (std::size_t slot = 0; slot < n; ++slot) {
            for (std::size_t row = 0; row < n; ++row) {
                const double freq = static_cast<double>(counts[slot][row]) / reps;
                CHECK(std::abs(freq - 0.2) < 3.0 * se);
            }
        }
    }
}

TEST_CASE("bootstrap replicate behavior") {
    const ReplicateEstimator cc = [](const Cohort &c, std::span<const std::uint32_t> rows,
                                     RandomStream &) { return complete_case_mean(c, rows); };

    SUBCASE("constant outcomes give constant replicates") {
        std::vector<Participant> people;
        for (int i = 0; i < 12; ++i) {
            people.push_back(person("p" + std::to_string(i), 9 + i % 3, Gender::male,
                                    1.0 + i, 107.5, 8));
        }
        const Cohort cohort(std::move(people), 8, {2, 17});
        const auto result = bootstrap(cohort, cc, ResamplePlan{200, 9, 1});
        REQUIRE(result.values.size() == 200);
        for (const double v : result.values) {
            CHECK(v == doctest::Approx(107.5).epsilon(1e-13));
        }
    }
    SUBCASE("same seed, same replicate vector") {
        const auto cohort = helpers::random_cohort(60, 21);
        const auto a = bootstrap(cohort, cc, ResamplePlan{300, 42, 1});
        const auto b = bootstrap(cohort, cc, ResamplePlan{300, 42, 1});
        CHECK(a.values == b.values);
        const auto c = bootstrap(cohort, cc, ResamplePlan{300, 43, 1});
        CHECK(a.values != c.values);
    }
    SUBCASE("parallel runs match the serial reference byte for byte") {
        const auto cohort = helpers::random_cohort(80, 8);
        const VectorReplicateEstimator est =
            [](const Cohort &c, std::span<const std::uint32_t> rows, RandomStream &rng) {
                // Consume randomness so stream discipline is exercised too.
                const double noise = rng.next_normal();
                return std::vector<double>{complete_case_mean(c, rows), noise};
            };
        const auto serial = bootstrap_vector_serial(cohort, est, ResamplePlan{500, 31, 1});
        for (const int workers : {2, 3, 0}) {
            const auto parallel =
                bootstrap_vector(cohort, est, ResamplePlan{500, 31, workers});
            CHECK(serial.values == parallel.values);
            CHECK(serial.failures == parallel.failures);
        }
    }
}

TEST_CASE("bootstrap failure policy") {
    const auto cohort = helpers::random_cohort(30, 14);

    SUBCASE("failures are excluded and counted") {
        // Fail deterministically based on the replicate stream.
        const ReplicateEstimator flaky =
            [](const Cohort &c, std::span<const std::uint32_t> rows, RandomStream &rng) {
                if (rng.next_double() < 0.05) {
                    throw PositivityError("synthetic failure");
                }
                return complete_case_mean(c, rows);
            };
        const auto result = bootstrap(cohort, flaky, ResamplePlan{1000, 3, 1});
        CHECK(result.failures > 0);
        CHECK(result.values.size() == result.attempted - result.failures);
        CHECK_FALSE(result.failure_samples.empty());

        // Identical run: failures land on identical replicates.
        const auto again = bootstrap(cohort, flaky, ResamplePlan{1000, 3, 1});
        CHECK(result.values == again.values);
        CHECK(result.failures == again.failures);
    }
    SUBCASE("more than 10% failures is fatal") {
        const ReplicateEstimator broken =
            [](const Cohort &, std::span<const std::uint32_t>, RandomStream &rng) {
                if (rng.next_double() < 0.5) {
                    throw PositivityError("synthetic failure");
                }
                return 1.0;
            };
        CHECK_THROWS_AS(bootstrap(cohort, broken, ResamplePlan{200, 3, 1}),
                        ReplicateFailureError);
    }
}

TEST_CASE("percentile uses interpolated order statistics") {
    const std::vector<double> odd = {5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(percentile(odd, 0.5) == doctest::Approx(3.0));
    CHECK(percentile(odd, 0.0) == doctest::Approx(1.0));
    CHECK(percentile(odd, 1.0) == doctest::Approx(5.0));

    std::vector<double> hundred(100);
    std::iota(hundred.begin(), hundred.end(), 1.0);
    // rank 1 + 0.975 * 99 = 97.525
    CHECK(percentile(hundred, 0.975) == doctest::Approx(97.525).epsilon(1e-12));
    CHECK(percentile(hundred, 0.025) == doctest::Approx(3.475).epsilon(1e-12));

    CHECK_THROWS_AS(percentile({}, 0.5), DomainError);
    CHECK_THROWS_AS(percentile(odd, 1.5), DomainError);
}

TEST_CASE("percentile agrees with the longhand oracle on random input") {
    RandomStream rng(6);
    std::vector<double> values;
    for (int i = 0; i < 257; ++i) {
        values.push_back(rng.next_normal() * 12.0 + 100.0);
    }
    for (const double q : {0.025, 0.25, 0.5, 0.9, 0.975}) {
        CHECK(percentile(values, q) ==
              doctest::Approx(oracles::percentile(values, q)).epsilon(1e-12));
    }
}

TEST_CASE("summarize reports median, CI, and sd") {
    SUBCASE("degenerate values") {
        const std::vector<double> v = {5.0, 5.0, 5.0};
        const auto s = summarize(v);
        CHECK(s.median == 5.0);
        CHECK(s.p2_5 == 5.0);
        CHECK(s.p97_5 == 5.0);
        CHECK(s.sd == 0.0);
        CHECK(s.n == 3);
    }
    SUBCASE("symmetric values center the median") {
        const std::vector<double> v = {-2.0, -1.0, 0.0, 1.0, 2.0};
        CHECK(summarize(v).median == doctest::Approx(0.0));
    }
    SUBCASE("permutation invariant") {
        RandomStream rng(8);
        std::vector<double> v;
        for (int i = 0; i < 101; ++i) {
            v.push_back(rng.next_normal());
        }
        auto shuffled = v;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
        }
        const auto a = summarize(v);
        const auto b = summarize(shuffled);
        CHECK(a.median == b.median);
        CHECK(a.p2_5 == b.p2_5);
        CHECK(a.p97_5 == b.p97_5);
        CHECK(a.sd == b.sd);
    }
    SUBCASE("ordering invariant p2.5 <= median <= p97.5") {
        RandomStream rng(12);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> v;
            const auto n = 1 + rng.next_below(50);
            for (std::uint64_t i = 0; i < n; ++i) {
                v.push_back(rng.next_normal());
            }
            const auto s = summarize(v);
            CHECK(s.p2_5 <= s.median);
            CHECK(s.median <= s.p97_5);
        }
    }
}

TEST_CASE("substreams are independent of scheduling by construction") {
    // The same (seed, index) pair always reproduces the same variates.
    for (const std::uint64_t seed : {1ULL, 99ULL}) {
        for (const std::uint64_t index : {0ULL, 1ULL, 19999ULL}) {
            RandomStream a = RandomStream::substream(seed, index);
            RandomStream b = RandomStream::substream(seed, index);
            for (int i = 0; i < 5; ++i) {
                CHECK(a.next_u64() == b.next_u64());
            }
        }
    }
    // Different indices diverge immediately.
    RandomStream a = RandomStream::substream(7, 1);
    RandomStream b = RandomStream::substream(7, 2);
    CHECK(a.next_u64() != b.next_u64());
}
