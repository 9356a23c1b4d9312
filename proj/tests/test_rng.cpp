#include "multiscale/rng.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using multiscale::RngStream;
using multiscale::SeedRecord;

TEST_CASE("philox block function reproduces the published test vectors") {
    // Known-answer vectors for Philox-4x32 with 10 rounds, cross-checked
    // against an independent implementation of the algorithm.
    const auto zero = multiscale::philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

    const auto ones = multiscale::philox4x32(
        {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(ones == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

    const auto pi = multiscale::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                           {0xa4093822u, 0x299f31d0u});
    CHECK(pi == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("word stream matches frozen golden values") {
    // First six 64-bit words for one specific seed record, frozen from an
    // independent implementation of the same counter layout.
    RngStream rng(SeedRecord{0x123456789ABCDEF0ull, 1, 7});
    const std::vector<std::uint64_t> expected = {
        0x6ebeeaf99651a7a2ull, 0xf0b8c14547d11acbull, 0x4d26ab696f7f3431ull,
        0xd7d9b138115f5f76ull, 0x2201094586488edeull, 0x86df10b11a7dffd2ull,
    };
    for (const auto want : expected) CHECK(rng.next_u64() == want);
}

TEST_CASE("uniform stream matches frozen golden values exactly") {
    RngStream rng(SeedRecord{42, 2, 0});
    CHECK(rng.uniform() == 0.18734337932596995);
    CHECK(rng.uniform() == 0.073378825897817135);
    CHECK(rng.uniform() == 0.83418141267646484);
    CHECK(rng.uniform() == 0.066400825179359912);
}

TEST_CASE("normal stream matches an independent inverse-CDF evaluation") {
    // Same four uniforms as above pushed through scipy's norm.ppf; our
    // Boost-based quantile should agree to near machine precision.
    RngStream rng(SeedRecord{42, 2, 0});
    CHECK(rng.normal() == doctest::Approx(-0.88772859836889217).epsilon(1e-13));
    CHECK(rng.normal() == doctest::Approx(-1.4510797599052498).epsilon(1e-13));
    CHECK(rng.normal() == doctest::Approx(0.97082149919319971).epsilon(1e-13));
    CHECK(rng.normal() == doctest::Approx(-1.5031450248822571).epsilon(1e-13));
}

TEST_CASE("streams are deterministic and depend on every seed component") {
    const SeedRecord base{991, 3, 12};
    RngStream a(base);
    RngStream b(base);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    // Changing any one field of the record must decorrelate the stream
    // immediately; compare the first word of each variant.
    std::set<std::uint64_t> firsts;
    firsts.insert(RngStream(base).next_u64());
    firsts.insert(RngStream(SeedRecord{992, 3, 12}).next_u64());
    firsts.insert(RngStream(SeedRecord{991, 4, 12}).next_u64());
    firsts.insert(RngStream(SeedRecord{991, 3, 13}).next_u64());
    CHECK(firsts.size() == 4);
}

TEST_CASE("with_replicate only swaps the replicate field") {
    const SeedRecord base{7, 5, 0};
    const SeedRecord rep = base.with_replicate(41);
    CHECK(rep.seed == base.seed);
    CHECK(rep.stream == base.stream);
    CHECK(rep.replicate == 41);
}

TEST_CASE("uniform draws stay inside the open unit interval") {
    RngStream rng(SeedRecord{123, 1, 0});
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("uniform draws have roughly the right mean") {
    RngStream rng(SeedRecord{2024, 9, 0});
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.uniform();
    // Mean of n uniforms has sd 1/sqrt(12 n) ~ 0.0009; allow five sigma.
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform_index covers the range and rejects bad counts") {
    RngStream rng(SeedRecord{55, 6, 0});
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto idx = rng.uniform_index(7);
        REQUIRE(idx >= 0);
        REQUIRE(idx < 7);
        seen.insert(idx);
    }
    CHECK(seen.size() == 7);
    CHECK(rng.uniform_index(1) == 0);
    CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
    CHECK_THROWS_AS(rng.uniform_index(-3), std::invalid_argument);
}

TEST_CASE("inverse normal CDF hits standard reference points") {
    CHECK(multiscale::inverse_normal_cdf(0.5) == 0.0);
    CHECK(multiscale::inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    // Symmetry about the median.
    for (const double p : {0.01, 0.2, 0.4999, 0.77}) {
        CHECK(multiscale::inverse_normal_cdf(p) ==
              doctest::Approx(-multiscale::inverse_normal_cdf(1.0 - p)).epsilon(1e-12));
    }
    // Strictly increasing on a coarse grid.
    double prev = multiscale::inverse_normal_cdf(1e-8);
    for (double p = 1e-4; p < 1.0; p += 1e-2) {
        const double q = multiscale::inverse_normal_cdf(p);
        REQUIRE(q > prev);
        prev = q;
    }
    CHECK_THROWS_AS(multiscale::inverse_normal_cdf(0.0), std::invalid_argument);
    CHECK_THROWS_AS(multiscale::inverse_normal_cdf(1.0), std::invalid_argument);
    CHECK_THROWS_AS(multiscale::inverse_normal_cdf(-0.1), std::invalid_argument);
}
