#include "multiscale/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "multiscale/parallel.hpp"
#include "multiscale/version.hpp"

namespace multiscale {

namespace {

void warn_if_clamped(double alpha, std::int64_t B) {
    const double raw = (1.0 - alpha) * static_cast<double>(B + 1);
    if (std::ceil(raw - 1e-9) > static_cast<double>(B)) {
        std::cerr << "warning: B = " << B << " is too small for alpha = " << alpha
                  << "; using the sample maximum as the critical value\n";
    }
}

std::vector<double> gaussian_noise(std::int64_t n, const SeedRecord& rec) {
    std::vector<double> x(static_cast<std::size_t>(n));
    RngStream rng(rec);
    for (double& v : x) v = rng.normal();
    return x;
}

// Per-block critical values at levels alpha_tilde/(A+ell)^2. Structurally
// empty blocks (every replicate -inf) get the +inf sentinel.
std::vector<double> block_quantiles(const std::vector<std::vector<double>>& cols,
                                    double alpha_tilde, int a_offset) {
    std::vector<double> q(cols.size());
    for (std::size_t b = 0; b < cols.size(); ++b) {
        if (cols[b].back() == kNegInf) {
            q[b] = kPosInf;
            continue;
        }
        const double denom = static_cast<double>(a_offset) + static_cast<double>(b + 1);
        q[b] = upper_quantile_sorted(cols[b], alpha_tilde / (denom * denom));
    }
    return q;
}

double joint_level(const std::vector<BlockMaxima>& sample,
                   const std::vector<double>& q) {
    std::int64_t rejections = 0;
    for (const BlockMaxima& bm : sample) {
        for (std::size_t b = 0; b < q.size(); ++b) {
            if (bm.values[b] > q[b]) {
                ++rejections;
                break;
            }
        }
    }
    return static_cast<double>(rejections) / static_cast<double>(sample.size());
}

}  // namespace

std::int64_t mc_quantile_index(double alpha, std::int64_t B) {
    if (B < 1) throw std::invalid_argument("mc_quantile_index: B must be >= 1");
    // The epsilon keeps products like 0.95 * (19+1), exactly 19 in real
    // arithmetic but slightly above in floating point, from ceiling to 20.
    const double raw = (1.0 - alpha) * static_cast<double>(B + 1);
    const auto idx = static_cast<std::int64_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::int64_t>(idx, 1, B);
}

double upper_quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty())
        throw std::invalid_argument("upper_quantile_sorted: empty sample");
    if (p <= 0.0) return kPosInf;
    const std::int64_t idx =
        mc_quantile_index(p, static_cast<std::int64_t>(sorted.size()));
    return sorted[static_cast<std::size_t>(idx - 1)];
}

std::vector<double> simulate_null_stats(std::int64_t n, std::int64_t B,
                                        const SeedRecord& base, const StatFn& stat,
                                        unsigned threads) {
    if (n < 1) throw std::invalid_argument("simulate_null_stats: n must be >= 1");
    if (B < 1) throw std::invalid_argument("simulate_null_stats: B must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(B));
    parallel_for(B, threads, [&](std::int64_t r) {
        const auto x = gaussian_noise(n, base.with_replicate(static_cast<std::uint32_t>(r)));
        out[static_cast<std::size_t>(r)] = stat(cumsum(x));
    });
    return out;
}

CriticalValues null_quantile_of(const StatFn& stat, Detector label, std::int64_t n,
                                double alpha, std::int64_t B, std::uint64_t seed,
                                unsigned threads) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("null_quantile: alpha must be in (0,1)");
    const SeedRecord base{seed, kStreamCalibration, 0};
    std::vector<double> stats = simulate_null_stats(n, B, base, stat, threads);
    std::sort(stats.begin(), stats.end());
    warn_if_clamped(alpha, B);
    CriticalValues cv;
    cv.detector = label;
    cv.n = n;
    cv.alpha = alpha;
    cv.value = stats[static_cast<std::size_t>(mc_quantile_index(alpha, B) - 1)];
    cv.mc_samples = B;
    cv.seed = base;
    return cv;
}

CriticalValues null_quantile(Detector d, std::int64_t n, double alpha,
                             std::int64_t B, std::uint64_t seed, unsigned threads) {
    switch (d) {
        case Detector::scan:
            return null_quantile_of([](const CumulativeSums& s) { return scan(s); }, d,
                                    n, alpha, B, seed, threads);
        case Detector::alr:
            return null_quantile_of([](const CumulativeSums& s) { return log_alr(s); },
                                    d, n, alpha, B, seed, threads);
        case Detector::penalized_scan:
            return null_quantile_of(
                [](const CumulativeSums& s) { return penalized_scan(s); }, d, n, alpha,
                B, seed, threads);
        case Detector::condensed_alr: {
            auto fam = std::make_shared<CondensedFamily>(build_condensed_family(n));
            return null_quantile_of(
                [fam](const CumulativeSums& s) { return condensed_alr(s, *fam); }, d,
                n, alpha, B, seed, threads);
        }
        case Detector::blocked_scan:
            throw std::invalid_argument(
                "blocked_scan takes per-block critical values; use calibrate_blocked");
    }
    throw std::invalid_argument("unknown detector id");
}

BlockedCalibration calibrate_from_block_maxima(const std::vector<BlockMaxima>& sample,
                                               std::int64_t n, double alpha,
                                               int a_offset, const SeedRecord& seed) {
    if (sample.empty())
        throw std::invalid_argument("calibrate_from_block_maxima: empty sample");
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("calibrate_from_block_maxima: alpha must be in [0,1)");
    if (a_offset < 0)
        throw std::invalid_argument("calibrate_from_block_maxima: a_offset must be >= 0");
    const std::size_t nblocks = sample.front().values.size();
    for (const BlockMaxima& bm : sample)
        if (bm.n != n || bm.values.size() != nblocks)
            throw std::invalid_argument(
                "calibrate_from_block_maxima: inconsistent block maxima");

    const auto B = static_cast<std::int64_t>(sample.size());
    BlockedCalibration cal;
    cal.n = n;
    cal.alpha = alpha;
    cal.a_offset = a_offset;
    cal.mc_samples = B;
    cal.seed = seed;

    if (alpha == 0.0) {
        cal.alpha_tilde = 0.0;
        cal.q.assign(nblocks, kPosInf);
        cal.level = 0.0;
        cal.level_reached = true;
        return cal;
    }

    std::vector<std::vector<double>> cols(nblocks,
                                          std::vector<double>(static_cast<std::size_t>(B)));
    for (std::size_t r = 0; r < sample.size(); ++r)
        for (std::size_t b = 0; b < nblocks; ++b) cols[b][r] = sample[r].values[b];
    for (auto& col : cols) std::sort(col.begin(), col.end());

    auto level_at = [&](double alpha_tilde) {
        return joint_level(sample, block_quantiles(cols, alpha_tilde, a_offset));
    };

    // The empirical level is a nondecreasing step function of alpha_tilde,
    // 0 at 0. Beyond cap every per-block level is clamped at 1, so the
    // level can no longer change; note cap exceeds 1 whenever a single
    // block must absorb the whole significance level.
    const double cap = static_cast<double>(a_offset + static_cast<int>(nblocks)) *
                       static_cast<double>(a_offset + static_cast<int>(nblocks));
    double lo = 0.0;
    double hi = cap;
    if (level_at(hi) <= alpha) {
        lo = hi;  // alpha unreachable even with maximal rejection
    } else {
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (level_at(mid) <= alpha)
                lo = mid;
            else
                hi = mid;
        }
    }
    cal.alpha_tilde = lo;  // conservative endpoint: level <= alpha
    cal.q = block_quantiles(cols, lo, a_offset);
    cal.level = joint_level(sample, cal.q);
    cal.level_reached =
        std::abs(cal.level - alpha) <= 1.0 / static_cast<double>(B) + 1e-12;
    return cal;
}

BlockedCalibration calibrate_blocked(std::int64_t n, double alpha, int a_offset,
                                     std::int64_t B, std::uint64_t seed,
                                     unsigned threads) {
    if (n < 2) throw std::invalid_argument("calibrate_blocked: n must be >= 2");
    if (B < 1) throw std::invalid_argument("calibrate_blocked: B must be >= 1");
    const SeedRecord base{seed, kStreamCalibration, 0};
    std::vector<BlockMaxima> sample(static_cast<std::size_t>(B));
    parallel_for(B, threads, [&](std::int64_t r) {
        const auto x = gaussian_noise(n, base.with_replicate(static_cast<std::uint32_t>(r)));
        sample[static_cast<std::size_t>(r)] = block_maxima(cumsum(x));
    });
    return calibrate_from_block_maxima(sample, n, alpha, a_offset, base);
}

bool blocked_reject(const BlockMaxima& bm, const BlockedCalibration& cal) {
    if (bm.n != cal.n)
        throw std::invalid_argument("blocked_reject: block maxima and calibration "
                                    "built for different n");
    if (bm.values.size() != cal.q.size())
        throw std::invalid_argument("blocked_reject: block count mismatch");
    for (std::size_t b = 0; b < cal.q.size(); ++b)
        if (bm.values[b] > cal.q[b]) return true;
    return false;
}

bool CalibrationSet::covers(const std::vector<Detector>& detectors) const {
    for (Detector d : detectors) {
        if (d == Detector::blocked_scan) {
            if (!blocked.has_value()) return false;
        } else if (critical.find(d) == critical.end()) {
            return false;
        }
    }
    return true;
}

CalibrationSet calibrate_detectors(const std::vector<Detector>& detectors,
                                   std::int64_t n, double alpha, std::int64_t B,
                                   std::uint64_t seed, unsigned threads) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("calibrate_detectors: alpha must be in (0,1)");
    if (B < 1) throw std::invalid_argument("calibrate_detectors: B must be >= 1");

    bool want[5] = {};
    for (Detector d : detectors) want[static_cast<int>(d)] = true;
    const bool want_scan = want[static_cast<int>(Detector::scan)];
    const bool want_alr = want[static_cast<int>(Detector::alr)];
    const bool want_cond = want[static_cast<int>(Detector::condensed_alr)];
    const bool want_pen = want[static_cast<int>(Detector::penalized_scan)];
    const bool want_blocked = want[static_cast<int>(Detector::blocked_scan)];
    const bool need_full = want_scan || want_alr || want_pen || want_blocked;

    CalibrationSet out;
    out.n = n;
    out.alpha = alpha;
    out.mc_samples = B;
    out.seed = seed;

    std::optional<CondensedFamily> fam;
    if (want_cond) fam.emplace(build_condensed_family(n));

    const auto size = static_cast<std::size_t>(B);
    std::vector<double> col_scan(want_scan ? size : 0);
    std::vector<double> col_alr(want_alr ? size : 0);
    std::vector<double> col_pen(want_pen ? size : 0);
    std::vector<double> col_cond(want_cond ? size : 0);
    std::vector<BlockMaxima> col_blocks(want_blocked ? size : 0);

    const SeedRecord base{seed, kStreamCalibration, 0};
    parallel_for(B, threads, [&](std::int64_t r) {
        const auto i = static_cast<std::size_t>(r);
        const auto x = gaussian_noise(n, base.with_replicate(static_cast<std::uint32_t>(r)));
        const CumulativeSums cs = cumsum(x);
        if (need_full) {
            FullFamilyStats st = evaluate_full_family(cs, want_alr);
            if (want_scan) col_scan[i] = st.scan;
            if (want_alr) col_alr[i] = st.log_alr;
            if (want_pen) col_pen[i] = st.penalized;
            if (want_blocked) col_blocks[i] = std::move(st.blocks);
        }
        if (want_cond) col_cond[i] = condensed_alr(cs, *fam);
    });

    warn_if_clamped(alpha, B);
    const auto quantile_of = [&](std::vector<double>& col) {
        std::sort(col.begin(), col.end());
        return col[static_cast<std::size_t>(mc_quantile_index(alpha, B) - 1)];
    };
    if (want_scan) out.critical[Detector::scan] = quantile_of(col_scan);
    if (want_alr) out.critical[Detector::alr] = quantile_of(col_alr);
    if (want_pen) out.critical[Detector::penalized_scan] = quantile_of(col_pen);
    if (want_cond) out.critical[Detector::condensed_alr] = quantile_of(col_cond);
    if (want_blocked)
        out.blocked =
            calibrate_from_block_maxima(col_blocks, n, alpha, kBlockedAOffset, base);
    return out;
}

namespace {

nlohmann::json seed_to_json(const SeedRecord& rec) {
    return {{"seed", rec.seed}, {"stream", rec.stream}, {"replicate", rec.replicate}};
}

SeedRecord seed_from_json(const nlohmann::json& j) {
    return {j.at("seed").get<std::uint64_t>(), j.at("stream").get<std::uint32_t>(),
            j.at("replicate").get<std::uint32_t>()};
}

}  // namespace

std::string to_json(const CalibrationSet& cal, int indent) {
    nlohmann::json j;
    j["kind"] = "calibration_set";
    j["version"] = kVersion;
    j["n"] = cal.n;
    j["alpha"] = cal.alpha;
    j["mc_samples"] = cal.mc_samples;
    j["seed"] = cal.seed;
    nlohmann::json crit = nlohmann::json::object();
    for (const auto& [d, v] : cal.critical) crit[std::string(to_string(d))] = v;
    j["critical"] = crit;
    if (cal.blocked) {
        const BlockedCalibration& bc = *cal.blocked;
        nlohmann::json b;
        b["n"] = bc.n;
        b["alpha"] = bc.alpha;
        b["a_offset"] = bc.a_offset;
        b["alpha_tilde"] = bc.alpha_tilde;
        b["mc_samples"] = bc.mc_samples;
        b["seed"] = seed_to_json(bc.seed);
        b["level"] = bc.level;
        b["level_reached"] = bc.level_reached;
        // JSON has no infinity; the +inf "never reject" sentinel maps to null.
        nlohmann::json qs = nlohmann::json::array();
        for (double v : bc.q) {
            if (v == kPosInf)
                qs.push_back(nullptr);
            else
                qs.push_back(v);
        }
        b["q"] = qs;
        j["blocked"] = b;
    }
    return j.dump(indent);
}

CalibrationSet calibration_set_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    CalibrationSet cal;
    cal.n = j.at("n").get<std::int64_t>();
    cal.alpha = j.at("alpha").get<double>();
    cal.mc_samples = j.at("mc_samples").get<std::int64_t>();
    cal.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [key, value] : j.at("critical").items())
        cal.critical[parse_detector(key)] = value.get<double>();
    if (j.contains("blocked")) {
        const nlohmann::json& b = j.at("blocked");
        BlockedCalibration bc;
        bc.n = b.at("n").get<std::int64_t>();
        bc.alpha = b.at("alpha").get<double>();
        bc.a_offset = b.at("a_offset").get<int>();
        bc.alpha_tilde = b.at("alpha_tilde").get<double>();
        bc.mc_samples = b.at("mc_samples").get<std::int64_t>();
        bc.seed = seed_from_json(b.at("seed"));
        bc.level = b.at("level").get<double>();
        bc.level_reached = b.at("level_reached").get<bool>();
        for (const auto& v : b.at("q"))
            bc.q.push_back(v.is_null() ? kPosInf : v.get<double>());
        cal.blocked = std::move(bc);
    }
    return cal;
}

std::string calibration_cache_name(std::int64_t n, double alpha, std::int64_t B,
                                   std::uint64_t seed) {
    char alpha_buf[32];
    std::snprintf(alpha_buf, sizeof(alpha_buf), "%.17g", alpha);
    std::ostringstream name;
    name << "calibration-n" << n << "-alpha" << alpha_buf << "-B" << B << "-seed"
         << seed << ".json";
    return name.str();
}

std::optional<CalibrationSet> load_cached_calibration(const std::string& dir,
                                                      std::int64_t n, double alpha,
                                                      std::int64_t B,
                                                      std::uint64_t seed) {
    if (dir.empty()) return std::nullopt;
    const auto path =
        std::filesystem::path(dir) / calibration_cache_name(n, alpha, B, seed);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::ostringstream text;
    text << in.rdbuf();
    try {
        CalibrationSet cal = calibration_set_from_json(text.str());
        if (cal.n != n || cal.alpha != alpha || cal.mc_samples != B || cal.seed != seed)
            return std::nullopt;
        return cal;
    } catch (const std::exception&) {
        return std::nullopt;  // treat a corrupt cache entry as a miss
    }
}

void store_cached_calibration(const std::string& dir, const CalibrationSet& cal) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) /
                      calibration_cache_name(cal.n, cal.alpha, cal.mc_samples, cal.seed);

    // Merge with any entry already on disk: same parameter tuple means the
    // same null sample, so values for overlapping detectors are identical.
    CalibrationSet merged = cal;
    if (auto existing =
            load_cached_calibration(dir, cal.n, cal.alpha, cal.mc_samples, cal.seed)) {
        for (const auto& [d, v] : existing->critical) merged.critical.emplace(d, v);
        if (!merged.blocked && existing->blocked) merged.blocked = existing->blocked;
    }

    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write calibration cache file: " +
                                 path.string());
    out << to_json(merged) << '\n';
}

}  // namespace multiscale
