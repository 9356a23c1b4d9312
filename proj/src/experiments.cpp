#include "multiscale/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "multiscale/parallel.hpp"
#include "multiscale/signal_model.hpp"
#include "multiscale/version.hpp"

namespace multiscale {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

std::int64_t support_length(double scale, std::int64_t n) {
    const auto len = static_cast<std::int64_t>(std::llround(scale * static_cast<double>(n)));
    return std::max<std::int64_t>(1, len);
}

}  // namespace

std::string_view to_string(GridMode m) {
    switch (m) {
        case GridMode::fixed_norm: return "fixed_norm";
        case GridMode::varying_norm: return "varying_norm";
    }
    throw std::invalid_argument("unknown grid mode");
}

GridMode parse_grid_mode(std::string_view name) {
    if (name == "fixed_norm") return GridMode::fixed_norm;
    if (name == "varying_norm") return GridMode::varying_norm;
    throw std::invalid_argument("unknown grid mode '" + std::string(name) +
                                "' (expected fixed_norm or varying_norm)");
}

void ExperimentConfig::validate() const {
    if (n < 2) throw std::invalid_argument("config: n must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("config: alpha must be in (0,1)");
    if (b_crit < 100) throw std::invalid_argument("config: B_crit must be >= 100");
    if (b_power < 100) throw std::invalid_argument("config: B_power must be >= 100");
    if (mode == GridMode::fixed_norm) {
        if (norm < 0.0) throw std::invalid_argument("config: norm must be >= 0");
        if (scales.empty())
            throw std::invalid_argument("config: fixed_norm mode needs scales");
        for (double s : scales)
            if (!(s > 0.0 && s <= 1.0))
                throw std::invalid_argument("config: scales must lie in (0,1]");
        if (!norms.empty())
            throw std::invalid_argument("config: norms given in fixed_norm mode");
    } else {
        if (norms.empty())
            throw std::invalid_argument("config: varying_norm mode needs norms");
        for (double v : norms)
            if (v < 0.0) throw std::invalid_argument("config: norms must be >= 0");
        if (!scales.empty())
            throw std::invalid_argument("config: scales given in varying_norm mode");
    }
}

ExperimentConfig config_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ExperimentConfig cfg;
    cfg.n = j.at("n").get<std::int64_t>();
    cfg.alpha = j.value("alpha", 0.05);
    for (const auto& name : j.at("detectors"))
        cfg.detectors.push_back(parse_detector(name.get<std::string>()));
    const nlohmann::json& grid = j.at("grid");
    cfg.mode = parse_grid_mode(grid.at("mode").get<std::string>());
    if (cfg.mode == GridMode::fixed_norm) {
        cfg.norm = grid.at("norm").get<double>();
        cfg.scales = grid.at("scales").get<std::vector<double>>();
    } else {
        cfg.norms = grid.at("norms").get<std::vector<double>>();
    }
    cfg.random_location = j.value("random_location", true);
    cfg.b_crit = j.value("B_crit", std::int64_t{10000});
    cfg.b_power = j.value("B_power", std::int64_t{2000});
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.validate();
    return cfg;
}

std::string to_json(const ExperimentConfig& cfg, int indent) {
    nlohmann::json j;
    j["n"] = cfg.n;
    j["alpha"] = cfg.alpha;
    nlohmann::json dets = nlohmann::json::array();
    for (Detector d : cfg.detectors) dets.push_back(std::string(to_string(d)));
    j["detectors"] = dets;
    nlohmann::json grid;
    grid["mode"] = std::string(to_string(cfg.mode));
    if (cfg.mode == GridMode::fixed_norm) {
        grid["norm"] = cfg.norm;
        grid["scales"] = cfg.scales;
    } else {
        grid["norms"] = cfg.norms;
    }
    j["grid"] = grid;
    j["random_location"] = cfg.random_location;
    j["B_crit"] = cfg.b_crit;
    j["B_power"] = cfg.b_power;
    j["seed"] = cfg.seed;
    return j.dump(indent);
}

PowerTable run_power_study(const ExperimentConfig& cfg, unsigned threads,
                           const std::string& cache_dir) {
    cfg.validate();
    PowerTable tbl;
    tbl.config = cfg;
    if (cfg.detectors.empty()) return tbl;

    const auto t_cal = std::chrono::steady_clock::now();
    std::optional<CalibrationSet> cal =
        load_cached_calibration(cache_dir, cfg.n, cfg.alpha, cfg.b_crit, cfg.seed);
    if (!cal || !cal->covers(cfg.detectors)) {
        cal = calibrate_detectors(cfg.detectors, cfg.n, cfg.alpha, cfg.b_crit,
                                  cfg.seed, threads);
        if (!cache_dir.empty()) store_cached_calibration(cache_dir, *cal);
    }
    tbl.calibration = *cal;
    tbl.calibration_seconds = seconds_since(t_cal);

    bool want[5] = {};
    for (Detector d : cfg.detectors) want[static_cast<int>(d)] = true;
    const bool want_scan = want[static_cast<int>(Detector::scan)];
    const bool want_alr = want[static_cast<int>(Detector::alr)];
    const bool want_cond = want[static_cast<int>(Detector::condensed_alr)];
    const bool want_pen = want[static_cast<int>(Detector::penalized_scan)];
    const bool want_blocked = want[static_cast<int>(Detector::blocked_scan)];
    const bool need_full = want_scan || want_alr || want_pen || want_blocked;

    std::optional<CondensedFamily> fam;
    if (want_cond) fam.emplace(build_condensed_family(cfg.n));

    const auto crit = [&](Detector d) { return cal->critical.at(d); };

    const auto t_pow = std::chrono::steady_clock::now();
    const std::vector<double>& grid = cfg.grid();
    // rejection counts, [grid point][detector]
    std::vector<std::array<std::int64_t, 5>> counts(grid.size(), {0, 0, 0, 0, 0});

    for (std::size_t g = 0; g < grid.size(); ++g) {
        const SeedRecord noise_base{
            cfg.seed, kStreamPowerNoise + static_cast<std::uint32_t>(g), 0};
        const SeedRecord placement_base{
            cfg.seed, kStreamPowerPlacement + static_cast<std::uint32_t>(g), 0};
        std::array<std::atomic<std::int64_t>, 5> rej = {};

        parallel_for(cfg.b_power, threads, [&](std::int64_t r) {
            const auto rep = static_cast<std::uint32_t>(r);
            RngStream placement(placement_base.with_replicate(rep));
            const double scale =
                cfg.mode == GridMode::varying_norm ? placement.uniform() : grid[g];
            const double norm =
                cfg.mode == GridMode::varying_norm ? grid[g] : cfg.norm;
            const std::int64_t len = support_length(scale, cfg.n);
            const std::int64_t j = cfg.random_location
                                       ? placement.uniform_index(cfg.n - len + 1)
                                       : (cfg.n - len) / 2;
            const SignalSpec spec = make_signal(cfg.n, norm, {j, j + len}, +1);
            const DataVector data = sample(spec, noise_base.with_replicate(rep));
            const CumulativeSums cs = cumsum(data);

            if (need_full) {
                const FullFamilyStats st = evaluate_full_family(cs, want_alr);
                if (want_scan && st.scan > crit(Detector::scan))
                    rej[static_cast<int>(Detector::scan)].fetch_add(1);
                if (want_alr && st.log_alr > crit(Detector::alr))
                    rej[static_cast<int>(Detector::alr)].fetch_add(1);
                if (want_pen && st.penalized > crit(Detector::penalized_scan))
                    rej[static_cast<int>(Detector::penalized_scan)].fetch_add(1);
                if (want_blocked && blocked_reject(st.blocks, *cal->blocked))
                    rej[static_cast<int>(Detector::blocked_scan)].fetch_add(1);
            }
            if (want_cond && condensed_alr(cs, *fam) > crit(Detector::condensed_alr))
                rej[static_cast<int>(Detector::condensed_alr)].fetch_add(1);
        });

        for (int d = 0; d < 5; ++d) counts[g][static_cast<std::size_t>(d)] = rej[static_cast<std::size_t>(d)].load();
    }
    tbl.power_seconds = seconds_since(t_pow);

    for (Detector d : cfg.detectors) {
        for (std::size_t g = 0; g < grid.size(); ++g) {
            PowerRow row;
            row.detector = d;
            row.grid_value = grid[g];
            row.power = static_cast<double>(counts[g][static_cast<std::size_t>(d)]) /
                        static_cast<double>(cfg.b_power);
            row.std_error = std::sqrt(row.power * (1.0 - row.power) /
                                      static_cast<double>(cfg.b_power));
            tbl.rows.push_back(row);
        }
    }
    return tbl;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw std::runtime_error("bad numeric field '" + std::string(text) + "'");
    return v;
}

template <typename Int>
Int parse_int(std::string_view text) {
    Int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw std::runtime_error("bad integer field '" + std::string(text) + "'");
    return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

constexpr std::string_view kCsvHeader =
    "detector,grid_value,power,stderr,n,alpha,B_power,seed";

}  // namespace

void write_power_csv(const PowerTable& tbl, std::ostream& os) {
    os << kCsvHeader << '\n';
    for (const PowerRow& row : tbl.rows) {
        os << to_string(row.detector) << ',' << format_double(row.grid_value) << ','
           << format_double(row.power) << ',' << format_double(row.std_error) << ','
           << tbl.config.n << ',' << format_double(tbl.config.alpha) << ','
           << tbl.config.b_power << ',' << tbl.config.seed << '\n';
    }
}

void write_power_json(const PowerTable& tbl, std::ostream& os) {
    nlohmann::json j;
    j["kind"] = "power_table";
    j["version"] = kVersion;
    j["config"] = nlohmann::json::parse(to_json(tbl.config));
    j["calibration"] = nlohmann::json::parse(to_json(tbl.calibration));
    j["runtime_seconds"] = {{"calibration", tbl.calibration_seconds},
                            {"power", tbl.power_seconds}};
    nlohmann::json rows = nlohmann::json::array();
    for (const PowerRow& row : tbl.rows) {
        rows.push_back({{"detector", std::string(to_string(row.detector))},
                        {"grid_value", row.grid_value},
                        {"power", row.power},
                        {"stderr", row.std_error}});
    }
    j["rows"] = rows;
    os << j.dump(2) << '\n';
}

void emit_table(const PowerTable& tbl, const std::string& format,
                const std::string& path) {
    std::ofstream file;
    if (!path.empty()) {
        file.open(path);
        if (!file) throw std::runtime_error("cannot write output file: " + path);
    }
    std::ostream& os = path.empty() ? std::cout : file;
    if (format == "csv")
        write_power_csv(tbl, os);
    else if (format == "json")
        write_power_json(tbl, os);
    else
        throw std::invalid_argument("unknown output format '" + format +
                                    "' (expected csv or json)");
    os.flush();
    if (!os) throw std::runtime_error("error writing output");
}

PowerTable read_power_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("empty power CSV");
    if (line != kCsvHeader)
        throw std::runtime_error("unexpected power CSV header: " + line);

    PowerTable tbl;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 8)
            throw std::runtime_error("malformed power CSV row: " + line);
        PowerRow row;
        row.detector = parse_detector(fields[0]);
        row.grid_value = parse_double(fields[1]);
        row.power = parse_double(fields[2]);
        row.std_error = parse_double(fields[3]);
        const auto n = parse_int<std::int64_t>(fields[4]);
        const double alpha = parse_double(fields[5]);
        const auto b_power = parse_int<std::int64_t>(fields[6]);
        const auto seed = parse_int<std::uint64_t>(fields[7]);
        if (first) {
            tbl.config.n = n;
            tbl.config.alpha = alpha;
            tbl.config.b_power = b_power;
            tbl.config.seed = seed;
            first = false;
        } else if (n != tbl.config.n || alpha != tbl.config.alpha ||
                   b_power != tbl.config.b_power || seed != tbl.config.seed) {
            throw std::runtime_error("inconsistent metadata in power CSV");
        }
        if (std::find(tbl.config.detectors.begin(), tbl.config.detectors.end(),
                      row.detector) == tbl.config.detectors.end())
            tbl.config.detectors.push_back(row.detector);
        tbl.rows.push_back(row);
    }
    return tbl;
}

std::string resolve_cache_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("MULTISCALE_CACHE_DIR")) return env;
    return "";
}

std::vector<BenchResult> benchmark_complexity(const std::vector<std::int64_t>& ns,
                                              int repeats, std::uint64_t seed) {
    if (repeats < 1) throw std::invalid_argument("benchmark: repeats must be >= 1");
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (ns[i] <= ns[i - 1])
            throw std::invalid_argument("benchmark: n values must be ascending");

    std::vector<BenchResult> results;
    for (std::int64_t n : ns) {
        BenchResult res;
        res.n = n;
        const double log_n = std::log(static_cast<double>(n));
        res.n_log2n = static_cast<double>(n) * log_n * log_n;
        res.n_squared = static_cast<double>(n) * static_cast<double>(n);

        std::vector<double> x(static_cast<std::size_t>(n));
        RngStream rng(SeedRecord{seed, kStreamBench, 0});
        for (double& v : x) v = rng.normal();
        const CumulativeSums cs = cumsum(x);

        const CondensedFamily fam = build_condensed_family(n);
        double best = kPosInf;
        volatile double sink = 0.0;  // keep the evaluations from being elided
        for (int rep = 0; rep < repeats; ++rep) {
            std::uint64_t evals = 0;
            const auto t0 = std::chrono::steady_clock::now();
            sink = condensed_alr(cs, fam, &evals);
            best = std::min(best, seconds_since(t0));
            res.condensed_evals = evals;
        }
        res.condensed_seconds = best;

        if (n <= 20000) {
            best = kPosInf;
            for (int rep = 0; rep < repeats; ++rep) {
                const auto t0 = std::chrono::steady_clock::now();
                sink = log_alr(cs);
                best = std::min(best, seconds_since(t0));
            }
            res.full_alr_seconds = best;
        } else {
            res.full_alr_seconds = std::numeric_limits<double>::quiet_NaN();
        }
        static_cast<void>(sink);
        results.push_back(res);
    }
    return results;
}

}  // namespace multiscale
