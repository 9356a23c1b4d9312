// msdetect: multiscale signal detection in Gaussian noise.
//
// Subcommands: calibrate, detect, power-table, inspect-family, bench.
// Exit codes: 0 success, 1 I/O error, 2 usage error. A "reject" from
// `detect` is reported in the output, never in the exit code.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "multiscale/calibration.hpp"
#include "multiscale/detectors.hpp"
#include "multiscale/experiments.hpp"
#include "multiscale/signal_model.hpp"
#include "multiscale/version.hpp"

namespace {

using namespace multiscale;

// Full ALR calibration is O(B * n^2); above this n it needs --long-run.
constexpr std::int64_t kAlrGateN = 2000;

std::vector<Detector> parse_detectors(const std::vector<std::string>& names) {
    std::vector<Detector> out;
    if (names.empty()) {
        out.assign(kAllDetectors.begin(), kAllDetectors.end());
        return out;
    }
    for (const std::string& name : names) {
        const Detector d = parse_detector(name);
        if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
    }
    return out;
}

void check_alr_gate(const std::vector<Detector>& detectors, std::int64_t n,
                    bool long_run) {
    if (long_run || n <= kAlrGateN) return;
    if (std::find(detectors.begin(), detectors.end(), Detector::alr) !=
        detectors.end()) {
        throw std::invalid_argument(
            "full ALR calibration at n > " + std::to_string(kAlrGateN) +
            " costs O(B*n^2) (hours at n = 10000); pass --long-run to confirm, "
            "or use condensed_alr");
    }
}

std::vector<double> read_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    std::vector<double> values;
    std::string token;
    while (in >> token) {
        try {
            std::size_t used = 0;
            const double v = std::stod(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            values.push_back(v);
        } catch (const std::exception&) {
            throw std::runtime_error("bad numeric value '" + token + "' in " + path);
        }
    }
    if (values.empty()) throw std::runtime_error("no observations in " + path);
    return values;
}

// Subtract the median, divide by 1.4826 * MAD (consistent for Gaussian
// scale). A convenience outside the calibrated theory, off by default.
void standardize(std::vector<double>& x) {
    std::vector<double> tmp = x;
    const auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
    std::nth_element(tmp.begin(), mid, tmp.end());
    double median = *mid;
    if (tmp.size() % 2 == 0) {
        const auto lower = std::max_element(tmp.begin(), mid);
        median = 0.5 * (*lower + median);
    }
    for (double& v : tmp) v = std::fabs(v - median);
    std::nth_element(tmp.begin(), mid, tmp.end());
    double mad = *mid;
    if (tmp.size() % 2 == 0) {
        const auto lower = std::max_element(tmp.begin(), mid);
        mad = 0.5 * (*lower + mad);
    }
    const double scale = 1.4826 * mad;
    if (scale <= 0.0)
        throw std::runtime_error("cannot standardize: robust scale is zero");
    for (double& v : x) v = (v - median) / scale;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out) throw std::runtime_error("error writing " + path);
}

CalibrationSet obtain_calibration(const std::vector<Detector>& detectors,
                                  std::int64_t n, double alpha, std::int64_t b_crit,
                                  std::uint64_t seed, unsigned threads,
                                  const std::string& cache_dir) {
    if (auto cached = load_cached_calibration(cache_dir, n, alpha, b_crit, seed)) {
        if (cached->covers(detectors)) return *cached;
    }
    CalibrationSet cal = calibrate_detectors(detectors, n, alpha, b_crit, seed, threads);
    if (!cache_dir.empty()) store_cached_calibration(cache_dir, cal);
    return cal;
}

struct CommonOpts {
    double alpha = 0.05;
    std::uint64_t seed = 0;
    std::int64_t mc_crit = 10000;
    std::vector<std::string> detector_names;
    std::string cache_dir;
    std::string out;
    unsigned threads = 0;
    bool long_run = false;
};

int run_calibrate(const CommonOpts& opt, std::int64_t n) {
    const auto detectors = parse_detectors(opt.detector_names);
    check_alr_gate(detectors, n, opt.long_run);
    const CalibrationSet cal =
        obtain_calibration(detectors, n, opt.alpha, opt.mc_crit, opt.seed,
                           opt.threads, resolve_cache_dir(opt.cache_dir));
    write_text(opt.out, to_json(cal));
    return 0;
}

int run_detect(const CommonOpts& opt, const std::string& input, bool do_standardize) {
    const auto detectors = parse_detectors(opt.detector_names);
    std::vector<double> x = read_series(input);
    const auto n = static_cast<std::int64_t>(x.size());
    check_alr_gate(detectors, n, opt.long_run);
    if (do_standardize) standardize(x);
    const CumulativeSums cs = cumsum(x);
    const CalibrationSet cal =
        obtain_calibration(detectors, n, opt.alpha, opt.mc_crit, opt.seed,
                           opt.threads, resolve_cache_dir(opt.cache_dir));

    std::ostringstream report;
    report << "# msdetect " << kVersion << " detect n=" << n << " alpha=" << opt.alpha
           << " mc-crit=" << opt.mc_crit << " seed=" << opt.seed
           << " standardize=" << (do_standardize ? 1 : 0) << '\n';

    bool want[5] = {};
    for (Detector d : detectors) want[static_cast<int>(d)] = true;
    const bool want_alr = want[static_cast<int>(Detector::alr)];
    const bool need_full =
        want[static_cast<int>(Detector::scan)] || want_alr ||
        want[static_cast<int>(Detector::penalized_scan)] ||
        want[static_cast<int>(Detector::blocked_scan)];
    std::optional<FullFamilyStats> st;
    if (need_full) st = evaluate_full_family(cs, want_alr);

    for (Detector d : detectors) {
        double stat = 0.0;
        double critical = 0.0;
        bool reject = false;
        if (d == Detector::blocked_scan) {
            // One-line summary of the per-block comparison: the largest
            // margin max_ell(M_ell - q_ell) against a critical value of 0.
            const BlockedCalibration& bc = *cal.blocked;
            stat = kNegInf;
            for (std::size_t b = 0; b < bc.q.size(); ++b)
                stat = std::max(stat, st->blocks.values[b] - bc.q[b]);
            critical = 0.0;
            reject = blocked_reject(st->blocks, bc);
        } else {
            switch (d) {
                case Detector::scan: stat = st->scan; break;
                case Detector::alr: stat = st->log_alr; break;
                case Detector::penalized_scan: stat = st->penalized; break;
                case Detector::condensed_alr: {
                    const CondensedFamily fam = build_condensed_family(n);
                    stat = condensed_alr(cs, fam);
                    break;
                }
                default: break;
            }
            critical = cal.critical.at(d);
            reject = stat > critical;
        }
        report << to_string(d) << ' ' << format_double(stat) << ' '
               << format_double(critical) << ' ' << (reject ? "reject" : "accept")
               << '\n';
    }
    write_text(opt.out, report.str());
    return 0;
}

int run_power_table(const CommonOpts& opt, const std::string& config_path,
                    const std::string& format, std::int64_t mc_power_override) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + config_path);
    std::ostringstream text;
    text << in.rdbuf();
    ExperimentConfig cfg = config_from_json(text.str());
    if (mc_power_override > 0) cfg.b_power = mc_power_override;
    if (opt.mc_crit > 0) cfg.b_crit = opt.mc_crit;
    check_alr_gate(cfg.detectors, cfg.n, opt.long_run);

    const PowerTable tbl =
        run_power_study(cfg, opt.threads, resolve_cache_dir(opt.cache_dir));
    std::cerr << "# msdetect " << kVersion << " power-table config=" << config_path
              << " seed=" << cfg.seed << " B_crit=" << cfg.b_crit
              << " B_power=" << cfg.b_power << " calibration_s="
              << tbl.calibration_seconds << " power_s=" << tbl.power_seconds << '\n';
    emit_table(tbl, format, opt.out);
    return 0;
}

int run_inspect_family(const CommonOpts& opt, std::int64_t n) {
    const CondensedFamily fam = build_condensed_family(n);
    write_text(opt.out, family_report_json(fam));
    return 0;
}

int run_bench(const CommonOpts& opt, const std::vector<std::int64_t>& ns, int repeats,
              const std::string& format) {
    const auto results = benchmark_complexity(ns, repeats, opt.seed);
    std::ostringstream report;
    if (format == "json") {
        nlohmann::json j;
        j["kind"] = "bench";
        j["version"] = kVersion;
        j["seed"] = opt.seed;
        j["repeats"] = repeats;
        nlohmann::json rows = nlohmann::json::array();
        for (const BenchResult& r : results) {
            nlohmann::json row;
            row["n"] = r.n;
            row["condensed_evals"] = r.condensed_evals;
            row["condensed_seconds"] = r.condensed_seconds;
            if (std::isnan(r.full_alr_seconds))
                row["full_alr_seconds"] = nullptr;
            else
                row["full_alr_seconds"] = r.full_alr_seconds;
            row["n_log2n"] = r.n_log2n;
            row["n_squared"] = r.n_squared;
            rows.push_back(row);
        }
        j["results"] = rows;
        report << j.dump(2) << '\n';
    } else {
        report << "# msdetect " << kVersion << " bench seed=" << opt.seed
               << " repeats=" << repeats << '\n';
        report << "n,condensed_evals,evals_per_nlog2n,condensed_seconds,"
                  "full_alr_seconds,cond_time_ratio,nlog2n_ratio\n";
        for (std::size_t i = 0; i < results.size(); ++i) {
            const BenchResult& r = results[i];
            report << r.n << ',' << r.condensed_evals << ','
                   << format_double(static_cast<double>(r.condensed_evals) / r.n_log2n)
                   << ',' << format_double(r.condensed_seconds) << ',';
            if (std::isnan(r.full_alr_seconds))
                report << "skipped";
            else
                report << format_double(r.full_alr_seconds);
            if (i > 0) {
                report << ','
                       << format_double(r.condensed_seconds /
                                        results[i - 1].condensed_seconds)
                       << ',' << format_double(r.n_log2n / results[i - 1].n_log2n);
            } else {
                report << ",,";
            }
            report << '\n';
        }
    }
    write_text(opt.out, report.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiscale signal detection in Gaussian noise"};
    app.set_version_flag("--version", std::string(multiscale::kVersion));
    app.require_subcommand(1);

    CommonOpts opt;
    std::int64_t n = 0;
    std::string input;
    std::string config_path;
    std::string format = "csv";
    std::int64_t mc_power = 0;
    bool do_standardize = false;
    std::vector<std::int64_t> bench_ns;
    int repeats = 3;

    const auto add_common = [&](CLI::App* cmd, bool with_calibration) {
        cmd->add_option("--out", opt.out, "output path (default: stdout)");
        if (with_calibration) {
            cmd->add_option("--alpha", opt.alpha, "significance level in (0,1)")
                ->check(CLI::Range(1e-9, 1.0 - 1e-9));
            cmd->add_option("--seed", opt.seed, "64-bit RNG seed");
            cmd->add_option("--mc-crit", opt.mc_crit,
                            "Monte Carlo samples for critical values");
            cmd->add_option("--detector", opt.detector_names,
                            "detector (repeatable; default: all five)");
            cmd->add_option("--cache-dir", opt.cache_dir,
                            "calibration cache directory (or MULTISCALE_CACHE_DIR)");
            cmd->add_option("--threads", opt.threads,
                            "worker threads (0 = hardware concurrency)");
            cmd->add_flag("--long-run", opt.long_run,
                          "allow expensive full-ALR calibration at large n");
        }
    };

    CLI::App* cal = app.add_subcommand("calibrate", "simulate null critical values");
    cal->add_option("--n", n, "sample size")->required();
    add_common(cal, true);

    CLI::App* det = app.add_subcommand("detect", "test a data series for a signal");
    det->add_option("file", input, "newline-delimited numeric series")->required();
    det->add_flag("--standardize", do_standardize,
                  "subtract the median and divide by 1.4826*MAD first");
    add_common(det, true);

    CLI::App* pow = app.add_subcommand("power-table", "run a power study");
    pow->add_option("--config", config_path, "experiment config JSON")->required();
    pow->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    pow->add_option("--mc-power", mc_power, "override the config's B_power");
    opt.mc_crit = 0;  // for power-table, 0 means "use the config's B_crit"
    add_common(pow, true);

    CLI::App* fam = app.add_subcommand("inspect-family",
                                       "report the condensed interval family");
    fam->add_option("--n", n, "sample size")->required();
    add_common(fam, false);

    CLI::App* bench = app.add_subcommand("bench", "time condensed vs full ALR");
    bench->add_option("--n", bench_ns, "sample sizes, ascending (repeatable)")
        ->required();
    bench->add_option("--repeats", repeats, "timing repetitions, best-of");
    bench->add_option("--seed", opt.seed, "64-bit RNG seed");
    bench->add_option("--format", format, "text or json")
        ->check(CLI::IsMember({"text", "json", "csv"}));
    bench->add_option("--out", opt.out, "output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(cal)) {
            if (opt.mc_crit <= 0) opt.mc_crit = 10000;
            return run_calibrate(opt, n);
        }
        if (app.got_subcommand(det)) {
            if (opt.mc_crit <= 0) opt.mc_crit = 10000;
            return run_detect(opt, input, do_standardize);
        }
        if (app.got_subcommand(pow))
            return run_power_table(opt, config_path, format, mc_power);
        if (app.got_subcommand(fam)) return run_inspect_family(opt, n);
        if (app.got_subcommand(bench)) {
            if (format == "csv") format = "text";
            return run_bench(opt, bench_ns, repeats, format);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
