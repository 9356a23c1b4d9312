#include "multiscale/signal_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace multiscale {

void validate_interval(const IntervalIndex& iv, std::int64_t n) {
    if (!(0 <= iv.j && iv.j < iv.k && iv.k <= n)) {
        throw std::invalid_argument(
            "interval (" + std::to_string(iv.j) + ", " + std::to_string(iv.k) +
            "] out of range for n = " + std::to_string(n));
    }
}

double SignalSpec::norm() const {
    return std::abs(mu) *
           std::sqrt(static_cast<double>(support.length()) / static_cast<double>(n));
}

SignalSpec make_signal(std::int64_t n, double norm, const IntervalIndex& support,
                       int sign) {
    if (n <= 0) throw std::invalid_argument("make_signal: n must be positive");
    validate_interval(support, n);
    if (norm < 0) throw std::invalid_argument("make_signal: norm must be >= 0");
    if (sign != 1 && sign != -1)
        throw std::invalid_argument("make_signal: sign must be +1 or -1");
    SignalSpec spec;
    spec.n = n;
    spec.support = support;
    const double extent = static_cast<double>(support.length()) / static_cast<double>(n);
    spec.mu = sign * norm / std::sqrt(extent);
    return spec;
}

DataVector sample(const SignalSpec& spec, const SeedRecord& record) {
    if (spec.n <= 0) throw std::invalid_argument("sample: n must be positive");
    validate_interval(spec.support, spec.n);
    DataVector data;
    data.seed = record;
    data.values.resize(static_cast<std::size_t>(spec.n));
    RngStream rng(record);
    for (auto& y : data.values) y = rng.normal();
    for (std::int64_t i = spec.support.j; i < spec.support.k; ++i)
        data.values[static_cast<std::size_t>(i)] += spec.mu;
    return data;
}

CumulativeSums cumsum(const std::vector<double>& values) {
    CumulativeSums cs;
    cs.s.resize(values.size() + 1);
    cs.s[0] = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) cs.s[i + 1] = cs.s[i] + values[i];
    return cs;
}

CumulativeSums cumsum(const DataVector& data) { return cumsum(data.values); }

}  // namespace multiscale
