#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "multiscale/calibration.hpp"

namespace multiscale {

// Every grid point of a power study draws from its own noise and placement
// streams, all disjoint from the calibration stream, so the level is never
// biased by reusing calibration randomness.
inline constexpr std::uint32_t kStreamPowerNoise = 0x10000;
inline constexpr std::uint32_t kStreamPowerPlacement = 0x20000;
inline constexpr std::uint32_t kStreamBench = 3;

enum class GridMode {
    fixed_norm,    // one norm, power as a function of the signal extent
    varying_norm,  // several norms, extent drawn uniform(0,1) per replicate
};

std::string_view to_string(GridMode m);
GridMode parse_grid_mode(std::string_view name);

struct ExperimentConfig {
    std::int64_t n = 0;
    double alpha = 0.05;
    std::vector<Detector> detectors;
    GridMode mode = GridMode::fixed_norm;
    double norm = 0.0;           // fixed_norm mode
    std::vector<double> scales;  // fixed_norm mode, each in (0,1]
    std::vector<double> norms;   // varying_norm mode, each >= 0
    bool random_location = true;
    std::int64_t b_crit = 10000;
    std::int64_t b_power = 2000;
    std::uint64_t seed = 0;

    const std::vector<double>& grid() const {
        return mode == GridMode::fixed_norm ? scales : norms;
    }
    void validate() const;  // throws std::invalid_argument
};

ExperimentConfig config_from_json(const std::string& text);
std::string to_json(const ExperimentConfig& cfg, int indent = 2);

struct PowerRow {
    Detector detector = Detector::scan;
    double grid_value = 0.0;  // scale (fixed_norm) or norm (varying_norm)
    double power = 0.0;
    double std_error = 0.0;  // sqrt(power (1-power) / B_power)
};

struct PowerTable {
    ExperimentConfig config;
    CalibrationSet calibration;
    std::vector<PowerRow> rows;  // detector-major, grid order as configured
    double calibration_seconds = 0.0;
    double power_seconds = 0.0;
};

// Calibrates (or loads from cache_dir, if non-empty) and measures the
// rejection rate of each configured detector at each grid point. Each
// replicate draws, in order: the extent (varying_norm mode only) and the
// location from the placement stream, then n normals from the noise
// stream. Support length is max(1, round(scale*n)); location is uniform on
// the feasible offsets, or centered when random_location is false.
PowerTable run_power_study(const ExperimentConfig& cfg, unsigned threads = 1,
                           const std::string& cache_dir = "");

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

// CSV columns: detector, grid_value, power, stderr, n, alpha, B_power, seed.
void write_power_csv(const PowerTable& tbl, std::ostream& os);
// JSON mirror with a metadata block (config echo, calibration, runtimes).
void write_power_json(const PowerTable& tbl, std::ostream& os);
// format is "csv" or "json"; empty path writes to stdout.
void emit_table(const PowerTable& tbl, const std::string& format,
                const std::string& path);

// Parses write_power_csv output; numeric fields round-trip bit-exactly.
// Config fields present in the CSV (n, alpha, B_power, seed, detectors)
// are restored; everything else is default.
PowerTable read_power_csv(std::istream& is);

// --cache-dir flag if given, else the MULTISCALE_CACHE_DIR environment
// variable, else empty (no caching).
std::string resolve_cache_dir(const std::string& flag_value);

struct BenchResult {
    std::int64_t n = 0;
    std::uint64_t condensed_evals = 0;   // == #I_app
    double condensed_seconds = 0.0;      // best-of-repeats, one evaluation
    double full_alr_seconds = 0.0;       // NaN when skipped (n > 20000)
    double n_log2n = 0.0;                // reference curves
    double n_squared = 0.0;
};

// Times one condensed_alr evaluation (and log_alr for n <= 20000) on a
// fixed null data vector per n; family construction is excluded.
std::vector<BenchResult> benchmark_complexity(const std::vector<std::int64_t>& ns,
                                              int repeats, std::uint64_t seed);

}  // namespace multiscale
