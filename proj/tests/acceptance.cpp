// Acceptance gate: one doctest case per criterion, each printing a single
// "[acceptance] <name>: PASS/FAIL (measurements)" line so the run log reads
// as a checklist. The two multi-hour cases live in the "longrun" suite and
// are skipped unless the runner passes `-ts=longrun -ns` (see
// tests/CMakeLists.txt and the MULTISCALE_LONG_TESTS option).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "multiscale/calibration.hpp"
#include "multiscale/detectors.hpp"
#include "multiscale/experiments.hpp"
#include "multiscale/signal_model.hpp"
#include "oracles.hpp"

namespace {

using namespace multiscale;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

constexpr std::uint64_t kAccSeed = 20240815;

// Signal strength for the desk-scale shape check, pilot-calibrated so the
// full ALR reaches power ~0.8 at n=1000 with support covering half the
// domain. Pilot: seed 20240815, B_crit 4000, B_power 2000, scale grid
// {0.05, 0.2, 0.5}; measured ALR power 0.8020 at scale 0.5 (scan 0.3635).
constexpr double kShapeNorm = 0.104;

const std::vector<Detector> kFive = {Detector::scan, Detector::alr, Detector::condensed_alr,
                                     Detector::penalized_scan, Detector::blocked_scan};

bool report(const std::string& label, bool ok, const std::string& detail) {
    std::cout << "[acceptance] " << label << ": " << (ok ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    return ok;
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// Shared n=1000 calibration used by the level, quantile-band, and shape
// criteria; computed once per process.
const CalibrationSet& shared_calibration() {
    static const CalibrationSet cal = calibrate_detectors(kFive, 1000, 0.05, 4000, kAccSeed);
    return cal;
}

double find_power(const PowerTable& tbl, Detector d, double grid_value) {
    for (const auto& row : tbl.rows)
        if (row.detector == d && row.grid_value == grid_value) return row.power;
    throw std::logic_error("power row not found");
}

double find_se(const PowerTable& tbl, Detector d, double grid_value) {
    for (const auto& row : tbl.rows)
        if (row.detector == d && row.grid_value == grid_value) return row.std_error;
    throw std::logic_error("power row not found");
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << std::fixed << v;
    return ss.str();
}

}  // namespace

TEST_CASE("oracle equivalence of the condensed family") {
    const auto t0 = clock_type::now();
    bool ok = true;
    std::ostringstream detail;

    const std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> spacings = {
        {16, {2, 2, 2}},
        {50, {2, 2, 2, 2}},
        {128, {2, 3, 2, 2, 2}},
        {500, {3, 4, 4, 3, 3, 2, 2}},
    };
    for (const auto& [n, d] : spacings) {
        const auto fam = build_condensed_family(n);
        auto got = fam.materialize_all().intervals;
        auto want = oracle::condensed_members(n, d);
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        if (got != want) {
            ok = false;
            detail << " set mismatch at n=" << n << ";";
            continue;
        }
        const auto x = oracle::toy_gaussian(n, static_cast<std::uint64_t>(n) + 3);
        const double lib = condensed_alr(cumsum(x), fam);
        const double ref = oracle::condensed_log_alr(x, want);
        const double rel = std::fabs(lib - ref) / std::max(1.0, std::fabs(ref));
        if (rel > 1e-12) {
            ok = false;
            detail << " value mismatch at n=" << n << " rel=" << rel << ";";
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 10.0) ok = false;
    detail << " n={16,50,128,500}, " << fmt(secs, 2) << "s";
    CHECK(report("1 condensed-family oracle equivalence", ok, detail.str()));
}

TEST_CASE("analytic sandwich and domination identities") {
    bool ok = true;
    std::ostringstream detail;
    std::int64_t checked = 0;
    for (const std::int64_t n : {10, 100, 1000}) {
        for (std::uint32_t r = 0; r < 100; ++r) {
            RngStream rng(SeedRecord{kAccSeed, 77, r});
            std::vector<double> x(static_cast<std::size_t>(n));
            for (auto& v : x) v = rng.normal();
            const CumulativeSums cs = cumsum(x);
            const auto st = evaluate_full_family(cs);
            const double lower = 0.5 * st.scan * st.scan - 2.0 * std::log(static_cast<double>(n));
            const double upper = 0.5 * st.scan * st.scan;
            if (!(st.log_alr >= lower && st.log_alr <= upper)) {
                ok = false;
                detail << " sandwich violated at n=" << n << " r=" << r << ";";
            }
            if (!(st.penalized <= st.scan - std::sqrt(2.0))) {
                ok = false;
                detail << " penalty bound violated at n=" << n << " r=" << r << ";";
            }
            if (st.blocks.overall_max() != st.scan) {
                ok = false;
                detail << " block-partition max mismatch at n=" << n << " r=" << r << ";";
            }
            ++checked;
        }
    }
    detail << checked << " vectors, exact comparisons";
    CHECK(report("2 sandwich/domination identities", ok, detail.str()));
}

TEST_CASE("null rejection level at n=1000") {
    const std::int64_t n = 1000, b = 4000;
    const double alpha = 0.05;
    const auto& cal = shared_calibration();
    const auto fam = build_condensed_family(n);

    std::array<std::int64_t, 5> hits = {0, 0, 0, 0, 0};
    const SeedRecord fresh{kAccSeed, kStreamFresh, 0};
    const auto null_spec = make_signal(n, 0.0, {0, 1});
    for (std::uint32_t r = 0; r < b; ++r) {
        const auto x = sample(null_spec, fresh.with_replicate(r));
        const CumulativeSums cs = cumsum(x);
        const auto st = evaluate_full_family(cs);
        if (st.scan > cal.critical.at(Detector::scan)) ++hits[0];
        if (st.log_alr > cal.critical.at(Detector::alr)) ++hits[1];
        if (condensed_alr(cs, fam) > cal.critical.at(Detector::condensed_alr)) ++hits[2];
        if (st.penalized > cal.critical.at(Detector::penalized_scan)) ++hits[3];
        if (blocked_reject(st.blocks, *cal.blocked)) ++hits[4];
    }

    bool ok = true;
    std::ostringstream detail;
    detail << "rates";
    for (std::size_t i = 0; i < kFive.size(); ++i) {
        const double rate = static_cast<double>(hits[i]) / static_cast<double>(b);
        detail << ' ' << to_string(kFive[i]) << '=' << fmt(rate);
        if (rate < alpha - 0.011 || rate > alpha + 0.011) ok = false;
    }
    detail << ", band 0.05±0.011";
    CHECK(report("3 null level, five detectors", ok, detail.str()));
}

TEST_CASE("condensed-family cardinality bounds at scale") {
    bool ok = true;
    std::ostringstream detail;
    for (const std::int64_t n : {1000, 10000, 100000, 1000000}) {
        const auto fam = build_condensed_family(n);
        const double logn = std::log(static_cast<double>(n));
        const double budget = 9.0 * static_cast<double>(n) * logn * logn;
        const double ratio = static_cast<double>(fam.total_cardinality()) /
                             (static_cast<double>(n) * logn * logn);
        if (static_cast<double>(fam.total_cardinality()) > budget) ok = false;
        if (static_cast<double>(fam.small_count()) > static_cast<double>(n) * logn) ok = false;
        detail << " n=1e" << static_cast<int>(std::lround(std::log10(static_cast<double>(n))))
               << ":" << fam.total_cardinality() << " (" << fmt(ratio, 2) << "x n log^2 n)";
    }
    CHECK(report("4 cardinality bounds", ok, detail.str()));
}

TEST_CASE("scan critical value sits in the analytic band") {
    const double kappa = shared_calibration().critical.at(Detector::scan);
    const double center = std::sqrt(2.0 * std::log(1000.0));
    const bool ok = kappa >= center - 0.3 && kappa <= center + 1.5;
    std::ostringstream detail;
    detail << "kappa=" << fmt(kappa) << ", band [" << fmt(center - 0.3) << ", "
           << fmt(center + 1.5) << "]";
    CHECK(report("5 scan-quantile diagnostic", ok, detail.str()));
}

TEST_CASE("desk-scale power shape: ALR gains with extent, scan stays flat") {
    // Prime the study's calibration cache with the shared set so the power
    // run reuses it rather than re-simulating.
    const fs::path cache = fs::temp_directory_path() / "msacc-cache";
    fs::create_directories(cache);
    store_cached_calibration(cache.string(), shared_calibration());

    ExperimentConfig cfg;
    cfg.n = 1000;
    cfg.alpha = 0.05;
    cfg.detectors = {Detector::scan, Detector::alr};
    cfg.mode = GridMode::fixed_norm;
    cfg.norm = kShapeNorm;
    cfg.scales = {0.05, 0.2, 0.5};
    cfg.b_crit = 4000;
    cfg.b_power = 2000;
    cfg.seed = kAccSeed;
    const PowerTable tbl = run_power_study(cfg, 1, cache.string());
    fs::remove_all(cache);

    const double scan05 = find_power(tbl, Detector::scan, 0.5);
    const double alr05 = find_power(tbl, Detector::alr, 0.5);
    const double se_scan05 = find_se(tbl, Detector::scan, 0.5);
    const double se_alr05 = find_se(tbl, Detector::alr, 0.5);

    double scan_lo = 1.0, scan_hi = 0.0, se_lo = 0.0, se_hi = 0.0;
    for (const double s : cfg.scales) {
        const double p = find_power(tbl, Detector::scan, s);
        if (p < scan_lo) {
            scan_lo = p;
            se_lo = find_se(tbl, Detector::scan, s);
        }
        if (p > scan_hi) {
            scan_hi = p;
            se_hi = find_se(tbl, Detector::scan, s);
        }
    }

    const double gap = alr05 - scan05;
    const double gap_slack = 3.0 * std::sqrt(se_alr05 * se_alr05 + se_scan05 * se_scan05);
    const double spread = scan_hi - scan_lo;
    const double spread_slack = 3.0 * std::sqrt(se_lo * se_lo + se_hi * se_hi);

    bool ok = true;
    if (!(gap >= 0.15 - gap_slack)) ok = false;
    if (!(spread <= 0.12 + spread_slack)) ok = false;

    std::ostringstream detail;
    detail << "norm=" << kShapeNorm << ", alr@0.5=" << fmt(alr05) << ", scan@0.5="
           << fmt(scan05) << ", gap=" << fmt(gap) << " (need >= " << fmt(0.15 - gap_slack)
           << "), scan spread=" << fmt(spread) << " (allowed <= " << fmt(0.12 + spread_slack)
           << ")";
    CHECK(report("6 desk-scale shape check", ok, detail.str()));
}

TEST_SUITE("longrun") {

TEST_CASE("full-size power reproduction" * doctest::skip()) {
    const fs::path cache = fs::temp_directory_path() / "msacc-longrun-cache";
    fs::create_directories(cache);

    ExperimentConfig t1;
    t1.n = 10000;
    t1.alpha = 0.05;
    t1.detectors = kFive;
    t1.mode = GridMode::fixed_norm;
    t1.norm = 0.04;
    t1.scales = {0.5};
    t1.b_crit = 10000;
    t1.b_power = 2000;
    t1.seed = kAccSeed;

    const auto t0 = clock_type::now();
    const PowerTable tbl1 = run_power_study(t1, 1, cache.string());

    ExperimentConfig t2 = t1;
    t2.mode = GridMode::varying_norm;
    t2.norms = {0.04};
    t2.scales.clear();
    const PowerTable tbl2 = run_power_study(t2, 1, cache.string());
    const double secs = seconds_since(t0);

    const std::array<double, 5> want1 = {0.39, 0.91, 0.91, 0.89, 0.86};
    const std::array<double, 5> want2 = {0.39, 0.88, 0.87, 0.85, 0.82};

    bool ok = true;
    std::ostringstream detail;
    detail << "fixed-extent 0.5:";
    for (std::size_t i = 0; i < kFive.size(); ++i) {
        const double p = find_power(tbl1, kFive[i], 0.5);
        detail << ' ' << to_string(kFive[i]) << '=' << fmt(p, 3) << "/" << want1[i];
        if (std::fabs(p - want1[i]) > 0.04) ok = false;
    }
    detail << "; random extent, norm 0.04:";
    for (std::size_t i = 0; i < kFive.size(); ++i) {
        const double p = find_power(tbl2, kFive[i], 0.04);
        detail << ' ' << to_string(kFive[i]) << '=' << fmt(p, 3) << "/" << want2[i];
        if (std::fabs(p - want2[i]) > 0.04) ok = false;
    }
    detail << "; " << fmt(secs / 3600.0, 2) << "h";
    CHECK(report("7 full-size reproduction", ok, detail.str()));
}

TEST_CASE("complexity scaling of the condensed ALR" * doctest::skip()) {
    const auto results = benchmark_complexity({100000, 1000000}, 3, kAccSeed);

    bool ok = true;
    std::ostringstream detail;
    if (results[0].condensed_evals != 13210376ull) ok = false;
    if (results[1].condensed_evals != 202573012ull) ok = false;

    const double time_ratio = results[1].condensed_seconds / results[0].condensed_seconds;
    const double count_ratio = static_cast<double>(results[1].condensed_evals) /
                               static_cast<double>(results[0].condensed_evals);
    if (!(time_ratio <= 15.0)) ok = false;

    detail << "t(1e6)=" << fmt(results[1].condensed_seconds, 3) << "s, t(1e5)="
           << fmt(results[0].condensed_seconds, 3) << "s, time ratio=" << fmt(time_ratio, 2)
           << " (bound 15), interval-count ratio=" << fmt(count_ratio, 2)
           << ", evals exact";
    CHECK(report("8 complexity scaling", ok, detail.str()));
}

}  // TEST_SUITE("longrun")
