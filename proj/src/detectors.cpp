#include "multiscale/detectors.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace multiscale {

namespace {

// Running-max log-sum-exp: keeps acc = sum exp(t_i - max_term), so acc >= 1
// once any term has been added and the final log never underflows. Terms
// more than 40 below the running max are skipped: exp(t - max) < 4.3e-18 <
// ulp(1)/2, so adding them would leave acc bit-identical anyway.
struct LogSumExp {
    double max_term = kNegInf;
    double acc = 0.0;

    void add(double t) {
        if (t <= max_term) {
            if (t > max_term - 40.0) acc += std::exp(t - max_term);
        } else {
            acc = acc * std::exp(max_term - t) + 1.0;
            max_term = t;
        }
    }

    double value() const {
        return max_term == kNegInf ? kNegInf : max_term + std::log(acc);
    }
};

// Scale penalty sqrt(2 log(en/L)) computed as sqrt(2(1 + log(n/L))): the
// two are equal and this form gives exactly sqrt(2) at L = n and is
// monotone nonincreasing in L even in floating point.
double scale_penalty(std::int64_t n, std::int64_t len) {
    return std::sqrt(2.0 * (1.0 + std::log(static_cast<double>(n) /
                                           static_cast<double>(len))));
}

// Index of the dyadic block containing each interval length: block ell
// covers (m_ell, m_{ell-1}] for ell = 1..ell_max, block ell_max+1 covers
// lengths <= m_{ell_max}. Uses n / 2^ell = floor(m_ell) exactly.
std::vector<std::int32_t> block_index_table(std::int64_t n, std::int64_t ell_max) {
    std::vector<std::int32_t> block_of(static_cast<std::size_t>(n + 1), 0);
    std::int64_t hi = n;  // floor(m_{ell-1})
    for (std::int64_t ell = 1; ell <= ell_max; ++ell) {
        const std::int64_t lo = n / (std::int64_t{1} << ell);
        for (std::int64_t len = lo + 1; len <= hi; ++len)
            block_of[static_cast<std::size_t>(len)] = static_cast<std::int32_t>(ell);
        hi = lo;
    }
    for (std::int64_t len = 1; len <= hi; ++len)
        block_of[static_cast<std::size_t>(len)] = static_cast<std::int32_t>(ell_max + 1);
    return block_of;
}

// One pass over all n(n+1)/2 intervals, lengths ascending then j ascending.
// The compile-time flags select which statistics are accumulated, so the
// standalone detectors and the fused evaluate_full_family run the exact
// same per-interval expressions in the same order (bitwise identical).
template <bool WantScan, bool WantAlr, bool WantPen, bool WantBlocks>
FullFamilyStats full_sweep(const CumulativeSums& s) {
    const std::int64_t n = s.n();
    if (n < 1) throw std::invalid_argument("full sweep: need n >= 1");
    if (WantBlocks && n < 2)
        throw std::invalid_argument("block maxima: need n >= 2");

    FullFamilyStats out;
    const double* sums = s.s.data();

    std::vector<std::int32_t> block_of;
    std::vector<double> block_max;
    if constexpr (WantBlocks) {
        const std::int64_t ell_max = ell_max_for(n);
        block_of = block_index_table(n, ell_max);
        block_max.assign(static_cast<std::size_t>(ell_max + 1), kNegInf);
    }

    [[maybe_unused]] double scan_max = kNegInf;
    [[maybe_unused]] double pen_max = kNegInf;
    [[maybe_unused]] LogSumExp lse;

    for (std::int64_t len = 1; len <= n; ++len) {
        const double isq = 1.0 / std::sqrt(static_cast<double>(len));
        double len_max = kNegInf;  // max |Y| at this length
        for (std::int64_t j = 0; j + len <= n; ++j) {
            const double a = std::fabs(sums[j + len] - sums[j]) * isq;
            if constexpr (WantAlr) lse.add(0.5 * a * a);
            if (a > len_max) len_max = a;
        }
        if constexpr (WantScan)
            if (len_max > scan_max) scan_max = len_max;
        if constexpr (WantPen) {
            const double p = len_max - scale_penalty(n, len);
            if (p > pen_max) pen_max = p;
        }
        if constexpr (WantBlocks) {
            double& bm = block_max[static_cast<std::size_t>(block_of[len] - 1)];
            if (len_max > bm) bm = len_max;
        }
    }

    if constexpr (WantScan) out.scan = scan_max;
    if constexpr (WantAlr)
        out.log_alr = lse.value() - 2.0 * std::log(static_cast<double>(n));
    if constexpr (WantPen) out.penalized = pen_max;
    if constexpr (WantBlocks) {
        out.blocks.n = n;
        out.blocks.values = std::move(block_max);
    }
    return out;
}

}  // namespace

std::string_view to_string(Detector d) {
    switch (d) {
        case Detector::scan: return "scan";
        case Detector::alr: return "alr";
        case Detector::condensed_alr: return "condensed_alr";
        case Detector::penalized_scan: return "penalized_scan";
        case Detector::blocked_scan: return "blocked_scan";
    }
    throw std::invalid_argument("unknown detector id");
}

Detector parse_detector(std::string_view name) {
    for (Detector d : kAllDetectors)
        if (name == to_string(d)) return d;
    throw std::invalid_argument("unknown detector '" + std::string(name) +
                                "' (expected scan, alr, condensed_alr, "
                                "penalized_scan, or blocked_scan)");
}

std::int64_t ell_max_for(std::int64_t n) {
    if (n < 2) throw std::invalid_argument("ell_max_for: n must be >= 2");
    const double nn = static_cast<double>(n);
    return static_cast<std::int64_t>(std::ceil(std::log2(nn / std::log(nn))));
}

double block_length_bound(std::int64_t n, std::int64_t ell) {
    if (n < 1 || ell < 0 || ell > 62)
        throw std::invalid_argument("block_length_bound: bad arguments");
    return std::ldexp(static_cast<double>(n), static_cast<int>(-ell));
}

double scan(const CumulativeSums& s) {
    return full_sweep<true, false, false, false>(s).scan;
}

double log_alr(const CumulativeSums& s) {
    return full_sweep<false, true, false, false>(s).log_alr;
}

double penalized_scan(const CumulativeSums& s) {
    return full_sweep<false, false, true, false>(s).penalized;
}

BlockMaxima block_maxima(const CumulativeSums& s) {
    return full_sweep<false, false, false, true>(s).blocks;
}

FullFamilyStats evaluate_full_family(const CumulativeSums& s, bool with_alr) {
    if (with_alr) return full_sweep<true, true, true, true>(s);
    FullFamilyStats out = full_sweep<true, false, true, true>(s);
    out.log_alr = std::numeric_limits<double>::quiet_NaN();
    return out;
}

double BlockMaxima::overall_max() const {
    double m = kNegInf;
    for (double v : values)
        if (v > m) m = v;
    return m;
}

CondensedFamily build_condensed_family(std::int64_t n) {
    if (n < 3)
        throw std::invalid_argument(
            "build_condensed_family: n must be >= 3 (needs log n > 1)");

    CondensedFamily fam;
    fam.n_ = n;
    fam.ell_max_ = ell_max_for(n);
    const double log_n = std::log(static_cast<double>(n));

    std::uint64_t total = 0;
    fam.blocks_.reserve(static_cast<std::size_t>(fam.ell_max_));
    for (std::int64_t ell = 1; ell <= fam.ell_max_; ++ell) {
        CondensedBlock b;
        b.ell = ell;
        b.m = block_length_bound(n, ell);
        b.d = static_cast<std::int64_t>(
            std::ceil(std::sqrt(b.m) * std::pow(static_cast<double>(ell), 0.8) / log_n));
        // Lengths are q*d with m < q*d <= 2m; both bounds are exact integer
        // comparisons since m = n/2^ell: q*d > m  <=>  q*d*2^ell > n.
        const std::int64_t pow2 = std::int64_t{1} << ell;
        b.q_lo = n / (b.d * pow2) + 1;
        b.q_hi = n / (b.d * (pow2 >> 1));
        if (b.q_hi >= b.q_lo) {
            // Sum over q of (floor(n/d) - q + 1) starting positions.
            const std::int64_t starts = n / b.d + 1;
            const std::int64_t nq = b.q_hi - b.q_lo + 1;
            b.count = static_cast<std::uint64_t>(nq * starts -
                                                 (b.q_lo + b.q_hi) * nq / 2);
        } else {
            b.q_hi = b.q_lo - 1;
            b.count = 0;
        }
        total += b.count;
        fam.blocks_.push_back(b);
    }

    fam.small_max_len_ = n / (std::int64_t{1} << fam.ell_max_);
    const std::int64_t sl = fam.small_max_len_;
    fam.small_count_ = static_cast<std::uint64_t>(sl * (n + 1) - sl * (sl + 1) / 2);
    total += fam.small_count_;
    fam.total_ = total;
    return fam;
}

IntervalFamily CondensedFamily::materialize_block(std::int64_t ell) const {
    if (ell < 1 || ell > ell_max_)
        throw std::invalid_argument("materialize_block: ell out of range");
    const CondensedBlock& b = blocks_[static_cast<std::size_t>(ell - 1)];
    IntervalFamily fam;
    fam.label = "block-" + std::to_string(ell);
    fam.intervals.reserve(static_cast<std::size_t>(b.count));
    for (std::int64_t q = b.q_lo; q <= b.q_hi; ++q) {
        const std::int64_t len = q * b.d;
        for (std::int64_t j = 0; j + len <= n_; j += b.d)
            fam.intervals.push_back({j, j + len});
    }
    return fam;
}

IntervalFamily CondensedFamily::materialize_small() const {
    IntervalFamily fam;
    fam.label = "small";
    fam.intervals.reserve(static_cast<std::size_t>(small_count_));
    for (std::int64_t len = 1; len <= small_max_len_; ++len)
        for (std::int64_t j = 0; j + len <= n_; ++j)
            fam.intervals.push_back({j, j + len});
    return fam;
}

IntervalFamily CondensedFamily::materialize_all() const {
    IntervalFamily fam;
    fam.label = "app";
    fam.intervals.reserve(static_cast<std::size_t>(total_));
    for_each_interval([&fam](const IntervalIndex& iv) { fam.intervals.push_back(iv); });
    return fam;
}

double condensed_alr(const CumulativeSums& s, const CondensedFamily& fam,
                     std::uint64_t* eval_count) {
    if (fam.n() != s.n())
        throw std::invalid_argument("condensed_alr: family built for different n");
    const std::int64_t n = fam.n();
    const double* sums = s.s.data();

    // Same visit order as CondensedFamily::for_each_interval, with the
    // 1/sqrt(len) factor hoisted per length. The sign of the increment is
    // irrelevant under squaring, so no fabs. Both endpoint streams advance
    // with stride d; at n = 10^6 that stride spans several cache lines, so
    // prefetch a few iterations ahead (a no-op hint past the array end).
    LogSumExp lse;
    std::uint64_t count = 0;
    for (const CondensedBlock& b : fam.blocks()) {
        const std::int64_t pf = 16 * b.d;
        for (std::int64_t q = b.q_lo; q <= b.q_hi; ++q) {
            const std::int64_t len = q * b.d;
            const double isq = 1.0 / std::sqrt(static_cast<double>(len));
            for (std::int64_t j = 0; j + len <= n; j += b.d) {
                __builtin_prefetch(sums + j + pf);
                __builtin_prefetch(sums + j + len + pf);
                const double a = (sums[j + len] - sums[j]) * isq;
                lse.add(0.5 * a * a);
                ++count;
            }
        }
    }
    for (std::int64_t len = 1; len <= fam.small_max_len(); ++len) {
        const double isq = 1.0 / std::sqrt(static_cast<double>(len));
        for (std::int64_t j = 0; j + len <= n; ++j) {
            const double a = (sums[j + len] - sums[j]) * isq;
            lse.add(0.5 * a * a);
            ++count;
        }
    }
    if (eval_count) *eval_count = count;
    return lse.value() - std::log(static_cast<double>(fam.total_cardinality()));
}

std::string family_report_json(const CondensedFamily& fam, int indent) {
    nlohmann::json report;
    report["n"] = fam.n();
    report["ell_max"] = fam.ell_max();
    report["total_cardinality"] = fam.total_cardinality();
    nlohmann::json blocks = nlohmann::json::array();
    for (const CondensedBlock& b : fam.blocks()) {
        blocks.push_back({{"ell", b.ell},
                          {"m", b.m},
                          {"d", b.d},
                          {"count", b.count}});
    }
    report["blocks"] = blocks;
    report["small"] = {{"max_len", fam.small_max_len()},
                       {"count", fam.small_count()}};
    return report.dump(indent);
}

}  // namespace multiscale
