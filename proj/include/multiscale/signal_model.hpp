#pragma once

#include <cstdint>
#include <vector>

#include "multiscale/rng.hpp"

namespace multiscale {

// Interval (j/n, k/n] stored by its integer endpoints. Observation i
// belongs to it iff j < i <= k (1-based i), i.e. 0-based positions j..k-1.
struct IntervalIndex {
    std::int64_t j = 0;
    std::int64_t k = 0;

    std::int64_t length() const { return k - j; }
    bool operator==(const IntervalIndex&) const = default;
    auto operator<=>(const IntervalIndex&) const = default;
};

// Throws std::invalid_argument unless 0 <= j < k <= n.
void validate_interval(const IntervalIndex& iv, std::int64_t n);

// Rectangular signal: mean mu on the support interval, zero elsewhere.
// mu = 0 encodes the null hypothesis.
struct SignalSpec {
    std::int64_t n = 0;
    double mu = 0.0;
    IntervalIndex support;

    double norm() const;  // |mu| * sqrt((k - j)/n)
};

// Builds a spec with mu = sign * norm / sqrt((k-j)/n). sign must be +-1.
SignalSpec make_signal(std::int64_t n, double norm, const IntervalIndex& support,
                       int sign = +1);

struct DataVector {
    std::vector<double> values;
    SeedRecord seed;

    std::int64_t n() const { return static_cast<std::int64_t>(values.size()); }
};

// Y_i = mu * 1{i in support} + Z_i with Z_i iid N(0,1) drawn from the
// stream identified by `record`. The i-th observation always consumes the
// i-th normal of the stream, so the result is a pure function of
// (spec, record).
DataVector sample(const SignalSpec& spec, const SeedRecord& record);

// Prefix sums s[0] = 0, s[i] = Y_1 + ... + Y_i.
struct CumulativeSums {
    std::vector<double> s;

    std::int64_t n() const { return static_cast<std::int64_t>(s.size()) - 1; }
    // Sum of the observations in (j, k].
    double delta(const IntervalIndex& iv) const { return s[iv.k] - s[iv.j]; }
};

CumulativeSums cumsum(const std::vector<double>& values);
CumulativeSums cumsum(const DataVector& data);

}  // namespace multiscale
