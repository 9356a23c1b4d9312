#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "multiscale/detectors.hpp"
#include "multiscale/rng.hpp"

namespace multiscale {

// Stream ids reserved by the library; calibration and fresh-sample checks
// must never share random numbers with each other or with power runs.
inline constexpr std::uint32_t kStreamCalibration = 1;
inline constexpr std::uint32_t kStreamFresh = 2;

// The constant A in the per-block significance levels alpha_tilde/(A+ell)^2.
inline constexpr int kBlockedAOffset = 10;

// 1-based order-statistic index ceil((1-alpha)(B+1)), clamped to [1, B].
// A small epsilon guards the ceil against floating-point products like
// 0.95 * 20 landing just above the exact integer.
std::int64_t mc_quantile_index(double alpha, std::int64_t B);

// Empirical upper quantile of an ascending-sorted sample: the order
// statistic above, except p <= 0 yields +infinity (never reject).
double upper_quantile_sorted(const std::vector<double>& sorted, double p);

using StatFn = std::function<double(const CumulativeSums&)>;

// B null statistics stat(cumsum(Z)) with Z ~ N(0,1)^n drawn from
// base.with_replicate(r), r = 0..B-1. Entry r is replicate r, so the
// result does not depend on the thread count.
std::vector<double> simulate_null_stats(std::int64_t n, std::int64_t B,
                                        const SeedRecord& base, const StatFn& stat,
                                        unsigned threads = 1);

struct CriticalValues {
    Detector detector = Detector::scan;
    std::int64_t n = 0;
    double alpha = 0.0;
    double value = 0.0;  // log-domain for alr / condensed_alr
    std::int64_t mc_samples = 0;
    SeedRecord seed;
};

// Simulated (1-alpha) null quantile of one detector statistic. Not defined
// for blocked_scan (use calibrate_blocked). B >= 20 recommended; the order
// index is clamped with a warning to stderr if B is too small for alpha.
CriticalValues null_quantile(Detector d, std::int64_t n, double alpha,
                             std::int64_t B, std::uint64_t seed,
                             unsigned threads = 1);

// Same quantile rule for an arbitrary statistic (test seam); `label` only
// tags the result.
CriticalValues null_quantile_of(const StatFn& stat, Detector label, std::int64_t n,
                                double alpha, std::int64_t B, std::uint64_t seed,
                                unsigned threads = 1);

struct BlockedCalibration {
    std::int64_t n = 0;
    double alpha = 0.0;
    int a_offset = 10;           // the constant A in alpha_tilde/(A+ell)^2
    double alpha_tilde = 0.0;
    std::vector<double> q;       // q[ell-1] for ell = 1..ell_max+1; +inf = never reject
    std::int64_t mc_samples = 0;
    SeedRecord seed;
    double level = 0.0;          // empirical joint level on the calibration sample
    bool level_reached = false;  // |level - alpha| <= 1/mc_samples
};

// Simulates B null block-maxima vectors and solves for alpha_tilde such
// that the empirical probability of any block exceeding its
// (1 - alpha_tilde/(a_offset+ell)^2) quantile equals alpha (bisection over
// the stored sample; conservative endpoint, level <= alpha).
BlockedCalibration calibrate_blocked(std::int64_t n, double alpha, int a_offset,
                                     std::int64_t B, std::uint64_t seed,
                                     unsigned threads = 1);

// Calibration core on an explicit sample of block maxima (test seam, and
// shared with calibrate_detectors). `seed` is recorded verbatim.
BlockedCalibration calibrate_from_block_maxima(const std::vector<BlockMaxima>& sample,
                                               std::int64_t n, double alpha,
                                               int a_offset, const SeedRecord& seed);

// True iff any non-empty block exceeds its critical value.
bool blocked_reject(const BlockMaxima& bm, const BlockedCalibration& cal);

// Critical values for several detectors obtained from one shared null
// pass (every detector sees the same B simulated data vectors).
struct CalibrationSet {
    std::int64_t n = 0;
    double alpha = 0.0;
    std::int64_t mc_samples = 0;
    std::uint64_t seed = 0;
    std::map<Detector, double> critical;  // every requested detector except blocked_scan
    std::optional<BlockedCalibration> blocked;

    bool covers(const std::vector<Detector>& detectors) const;
};

CalibrationSet calibrate_detectors(const std::vector<Detector>& detectors,
                                   std::int64_t n, double alpha, std::int64_t B,
                                   std::uint64_t seed, unsigned threads = 1);

// JSON round-trip (numbers survive bit-exactly) and an on-disk cache keyed
// by the full parameter tuple (n, alpha, B, seed).
std::string to_json(const CalibrationSet& cal, int indent = 2);
CalibrationSet calibration_set_from_json(const std::string& text);
std::string calibration_cache_name(std::int64_t n, double alpha, std::int64_t B,
                                   std::uint64_t seed);
std::optional<CalibrationSet> load_cached_calibration(const std::string& dir,
                                                      std::int64_t n, double alpha,
                                                      std::int64_t B,
                                                      std::uint64_t seed);
void store_cached_calibration(const std::string& dir, const CalibrationSet& cal);

}  // namespace multiscale
