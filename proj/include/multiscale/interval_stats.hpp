#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multiscale/signal_model.hpp"

namespace multiscale {

// Standardized interval sum Y_n(I) = (s[k] - s[j]) / sqrt(k - j).
// Validates I against cs.n().
double ystat(const CumulativeSums& cs, const IntervalIndex& iv);

// An explicit list of intervals, used for the full family at small n and
// for materialized views of the condensed family. Large approximating
// families are enumerated lazily in `detectors`.
struct IntervalFamily {
    std::string label;
    std::vector<IntervalIndex> intervals;

    std::uint64_t cardinality() const { return intervals.size(); }
};

// All n(n+1)/2 intervals (j, k], 0 <= j < k <= n, ordered by length then j.
IntervalFamily full_family(std::int64_t n);

}  // namespace multiscale
