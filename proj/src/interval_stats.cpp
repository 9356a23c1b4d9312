#include "multiscale/interval_stats.hpp"

#include <cmath>
#include <stdexcept>

namespace multiscale {

double ystat(const CumulativeSums& cs, const IntervalIndex& iv) {
    validate_interval(iv, cs.n());
    return cs.delta(iv) / std::sqrt(static_cast<double>(iv.length()));
}

IntervalFamily full_family(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("full_family: n must be positive");
    IntervalFamily fam;
    fam.label = "full";
    fam.intervals.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
    for (std::int64_t len = 1; len <= n; ++len)
        for (std::int64_t j = 0; j + len <= n; ++j)
            fam.intervals.push_back({j, j + len});
    return fam;
}

}  // namespace multiscale
