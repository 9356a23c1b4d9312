#include "multiscale/interval_stats.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

#include "doctest.h"
#include "oracles.hpp"

using multiscale::CumulativeSums;
using multiscale::IntervalIndex;

TEST_CASE("ystat reproduces hand-computed examples") {
    const CumulativeSums ones = multiscale::cumsum(std::vector<double>{1.0, 1.0, 1.0, 1.0});
    CHECK(multiscale::ystat(ones, {0, 4}) == 2.0);  // 4 / sqrt(4)
    CHECK(multiscale::ystat(ones, {0, 1}) == 1.0);
    CHECK(multiscale::ystat(ones, {1, 3}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    const CumulativeSums mixed = multiscale::cumsum(std::vector<double>{2.0, -1.0, 3.0});
    CHECK(multiscale::ystat(mixed, {0, 2}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(multiscale::ystat(mixed, {1, 2}) == -1.0);  // signed: -1/1
}

TEST_CASE("ystat is scale equivariant and shift covariant in the data") {
    const auto x = oracle::toy_gaussian(40, 901);
    auto scaled = x;
    for (auto& v : scaled) v *= 3.0;
    const CumulativeSums cx = multiscale::cumsum(x);
    const CumulativeSums cs = multiscale::cumsum(scaled);
    for (const auto& iv : {IntervalIndex{0, 40}, IntervalIndex{3, 17}, IntervalIndex{39, 40}}) {
        CHECK(multiscale::ystat(cs, iv) ==
              doctest::Approx(3.0 * multiscale::ystat(cx, iv)).epsilon(1e-14));
    }
}

TEST_CASE("ystat agrees with direct summation on random data") {
    const auto x = oracle::toy_gaussian(60, 77);
    const CumulativeSums cs = multiscale::cumsum(x);
    for (std::int64_t j = 0; j < 60; j += 7)
        for (std::int64_t k = j + 1; k <= 60; k += 5) {
            // The oracle scores are absolute values; ystat keeps the sign.
            const double direct = static_cast<double>(oracle::interval_score(x, j, k));
            REQUIRE(std::fabs(multiscale::ystat(cs, {j, k})) ==
                    doctest::Approx(direct).epsilon(1e-12));
        }
}

TEST_CASE("ystat validates its interval") {
    const CumulativeSums cs = multiscale::cumsum(std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(multiscale::ystat(cs, {0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(multiscale::ystat(cs, {2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(multiscale::ystat(cs, {-1, 1}), std::invalid_argument);
}

TEST_CASE("full interval family enumerates every sub-interval once") {
    const auto f1 = multiscale::full_family(1);
    REQUIRE(f1.cardinality() == 1);
    CHECK(f1.intervals[0] == IntervalIndex{0, 1});

    const auto f2 = multiscale::full_family(2);
    REQUIRE(f2.cardinality() == 3);

    const auto f100 = multiscale::full_family(100);
    CHECK(f100.cardinality() == 5050);  // n(n+1)/2

    // Distinctness and validity.
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (const auto& iv : f100.intervals) {
        REQUIRE(iv.j >= 0);
        REQUIRE(iv.j < iv.k);
        REQUIRE(iv.k <= 100);
        seen.insert({iv.j, iv.k});
    }
    CHECK(seen.size() == 5050);

    CHECK_THROWS_AS(multiscale::full_family(0), std::invalid_argument);
}
