#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "qedcascade/analytics.hpp"
#include "qedcascade/cli.hpp"
#include "qedcascade/phase_space_io.hpp"
#include "qedcascade/stats.hpp"

#ifndef QEDC_VERSION
#define QEDC_VERSION "0.0.0"
#endif

namespace qedc::cli {
namespace {

using nlohmann::json;

class Csv {
public:
    explicit Csv(std::initializer_list<std::string_view> header) {
        row_begin();
        for (auto h : header) {
            cell(h);
        }
        row_end();
    }

    Csv& cell(std::string_view s) {
        if (!first_) {
            text_ += ',';
        }
        text_ += s;
        first_ = false;
        return *this;
    }
    Csv& num(double x) { return cell(format_number(x)); }
    Csv& num(std::int64_t x) { return cell(format_number(x)); }
    Csv& opt(std::optional<double> x) { return x ? num(*x) : cell(""); }

    void row_begin() { first_ = true; }
    void row_end() { text_ += '\n'; }

    std::string str() && { return std::move(text_); }

private:
    std::string text_;
    bool first_ = true;
};

struct RunAccumulator {
    MomentAccumulator moments;
    std::optional<SpectrumAccumulator> spectrum;
    double max_bin_mean = 0.0;

    void add(std::size_t i, TrajectoryOutput&& out) {
        max_bin_mean = std::max(max_bin_mean, out.max_bin_mean);
        if (spectrum) {
            spectrum->add(out.record);
        }
        moments.add(i, std::move(out));
    }
    void merge(RunAccumulator&& other) {
        max_bin_mean = std::max(max_bin_mean, other.max_bin_mean);
        moments.merge(std::move(other.moments));
        if (spectrum) {
            spectrum->merge(std::move(*other.spectrum));
        }
    }
};

std::string violation_message(const std::vector<std::string>& violations) {
    std::string msg = "scenario violates a quantum noise limit:";
    for (const auto& v : violations) {
        msg += "\n  " + v;
    }
    return msg;
}

json check_to_json(const CheckResult& c) {
    return json{{"name", c.name},         {"passed", c.passed}, {"value", c.value},
                {"threshold", c.threshold}, {"margin", c.margin}, {"detail", c.detail}};
}

CheckResult upper_check(std::string name, double value, double threshold, std::string detail) {
    return {std::move(name), value <= threshold, value, threshold, threshold - value, std::move(detail)};
}

CheckResult lower_check(std::string name, double value, double threshold, bool passed, std::string detail) {
    return {std::move(name), passed, value, threshold, value - threshold, std::move(detail)};
}

void add_validator_checks(const ScenarioCheck& check, std::vector<CheckResult>& checks) {
    if (check.amplifier) {
        const auto& a = *check.amplifier;
        checks.push_back(lower_check("amplifier_caves_limit", a.noise_density, a.caves_bound, a.caves_ok,
                                     "4 n_a / gamma_a against [(T_a - 1) + |T_a - 1|] / 2"));
        checks.push_back(lower_check("amplifier_weak_limit", a.noise_density, a.weak_bound, a.weak_ok,
                                     "4 n_a / gamma_a against (T_a - 1) / 2"));
    }
    if (check.source) {
        const auto& s = *check.source;
        checks.push_back(lower_check("source_excess_spectrum", s.min_n2_omega, s.min_n2_omega - s.margin, s.ok,
                                     "minimum excess spectrum at omega = " + format_number(s.omega_at_min) +
                                         " rad/s against -n0"));
    }
}

// Point-mass or exponential total-intensity law when the total-count
// distribution has a closed form for this scenario.
std::optional<IntensityLaw> count_oracle(const Scenario& sc) {
    const double transfer = sc.amplifier ? sc.amplifier->transfer : 1.0;
    if (sc.amplifier && sc.amplifier->noise_flux_per_s > 0.0) {
        return std::nullopt;
    }
    const TimeGrid& g = sc.grid;
    if (const auto* c = std::get_if<CoherentSource>(&sc.source)) {
        double w = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            w += c->flux(g.time(i)) * g.dt();
        }
        return PointMassIntensity{transfer * w};
    }
    if (const auto* t = std::get_if<ThermalSource>(&sc.source)) {
        if (t->coherence_rate_per_s * g.duration() <= 1e-3 && t->mean_flux_per_s > 0.0) {
            return ExponentialIntensity{transfer * t->mean_flux_per_s * g.duration()};
        }
    }
    return std::nullopt;
}

std::pair<double, double> spectrum_band(const Scenario& sc, double nyquist) {
    double lo = 0.1 * nyquist;
    double hi = 0.9 * nyquist;
    if (const auto* t = std::get_if<ThermalSource>(&sc.source)) {
        lo = t->coherence_rate_per_s / 4.0;
        hi = std::min(hi, 4.0 * t->coherence_rate_per_s);
    }
    if (sc.amplifier && sc.amplifier->noise_flux_per_s > 0.0) {
        hi = std::min(hi, sc.amplifier->gamma_per_s / 10.0);
    }
    return {lo, hi};
}

std::string render_envelopes(const TrajectoryOutput& out) {
    Csv csv({"time_s", "source_re_sqrt_per_s", "source_im_sqrt_per_s", "detected_re_sqrt_per_s",
             "detected_im_sqrt_per_s"});
    const auto& e0 = *out.source_field;
    for (std::size_t i = 0; i < e0.size(); ++i) {
        csv.row_begin();
        csv.num(e0.grid().time(i)).num(e0[i].real()).num(e0[i].imag());
        if (out.detected_field) {
            csv.num((*out.detected_field)[i].real()).num((*out.detected_field)[i].imag());
        } else {
            csv.cell("").cell("");
        }
        csv.row_end();
    }
    return std::move(csv).str();
}

RunArtifacts analytic_run(const ScenarioConfig& cfg, const ScenarioCheck& check) {
    const Scenario& sc = cfg.scenario;
    const TimeGrid& g = sc.grid;
    const double q = sc.detector.pulse_charge;
    RunArtifacts art;
    art.analytic_only = true;
    add_validator_checks(check, art.checks);
    const MomentSet m = unconditional_moments(sc.source, sc.amplifier, sc.detector);
    Csv mean({"time_s", "analytic_mean_current_A"});
    for (std::size_t i = 0; i < g.size(); ++i) {
        mean.row_begin();
        mean.num(g.time(i)).num(m.mean(g.time(i)));
        mean.row_end();
    }
    Csv corr({"lag_s", "analytic_correlation_A2"});
    const std::size_t lags = std::min(cfg.moments.max_lag_bins + 1, g.size());
    for (std::size_t k = 0; k < lags; ++k) {
        corr.row_begin();
        corr.num(static_cast<double>(k) * g.dt()).num(m.correlation_on_grid(g, 0, k));
        corr.row_end();
    }
    const auto n2 = source_excess_spectrum(sc.source, g.duration());
    const double n0 = mean_flux(sc.source);
    Csv spec({"omega_rad_per_s", "analytic_spectrum_A2_s"});
    double lowest = std::numeric_limits<double>::infinity();
    double lowest_omega = 0.0;
    for (std::size_t k = 1; k <= cfg.segment_bins / 2; ++k) {
        const double w = g.dft_omega(k, cfg.segment_bins);
        const double v = q * q * spectrum_terms(n0, n2(w), sc.amplifier, sc.detector).total();
        if (v < lowest) {
            lowest = v;
            lowest_omega = w;
        }
        spec.row_begin();
        spec.num(w).num(v);
        spec.row_end();
    }
    art.checks.push_back(lower_check("analytic_spectrum_nonnegative", lowest, 0.0, lowest >= 0.0,
                                     "minimum at omega = " + format_number(lowest_omega) + " rad/s"));
    art.files["mean_current.csv"] = std::move(mean).str();
    art.files["correlation.csv"] = std::move(corr).str();
    art.files["spectrum.csv"] = std::move(spec).str();
    return art;
}

json summary_json(const ScenarioConfig& cfg, const RunArtifacts& art, const json& extra) {
    json checks = json::array();
    for (const auto& c : art.checks) {
        checks.push_back(check_to_json(c));
    }
    json files = json::array();
    for (const auto& [name, text] : art.files) {
        files.push_back(name);
    }
    json scenario = cfg.document;
    if (scenario.contains("run")) {
        scenario["run"].erase("threads");
    }
    json s{{"config_digest", config_digest(cfg)},
           {"scenario", scenario},
           {"analytic_only", art.analytic_only},
           {"checks", checks},
           {"warnings", art.warnings},
           {"data_files", files}};
    s.update(extra);
    return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json manifest_json(const ScenarioConfig& cfg, const RunArtifacts& art, double wall_clock_s, const std::string& started,
                   const std::string& kind) {
    json files = json::array();
    for (const auto& [name, text] : art.files) {
        files.push_back({{"name", name}, {"sha256", sha256_hex(text)}, {"bytes", text.size()}});
    }
    json checks = json::array();
    for (const auto& c : art.checks) {
        checks.push_back(check_to_json(c));
    }
    return json{{"command", kind},
                {"code_version", QEDC_VERSION},
                {"config_digest", config_digest(cfg)},
                {"seed", cfg.scenario.seed},
                {"trajectories", cfg.scenario.n_traj},
                {"plan", std::string(to_string(cfg.scenario.plan))},
                {"threads", cfg.options.threads},
                {"started_utc", started},
                {"wall_clock_s", wall_clock_s},
                {"checks", checks},
                {"files", files}};
}

void emit(const ScenarioConfig& cfg, const RunArtifacts& art, double wall, const std::string& started,
          const std::string& kind) {
    std::filesystem::create_directories(cfg.output_dir);
    for (const auto& [name, text] : art.files) {
        write_text(cfg.output_dir / name, text);
    }
    write_text(cfg.output_dir / "manifest.json", manifest_json(cfg, art, wall, started, kind).dump(2) + "\n");
}

// Recomputes the artifacts and compares them with the manifest on disk.
bool verify_manifest(const ScenarioConfig& cfg, const RunArtifacts& fresh, std::ostream& out, std::ostream& err) {
    const json manifest = json::parse(read_text(cfg.output_dir / "manifest.json"));
    bool ok = true;
    if (manifest.at("config_digest").get<std::string>() != config_digest(cfg)) {
        err << "check: effective configuration differs from the one recorded in the manifest\n";
        ok = false;
    }
    std::size_t verified = 0;
    for (const auto& f : manifest.at("files")) {
        const std::string name = f.at("name").get<std::string>();
        const std::string want = f.at("sha256").get<std::string>();
        const auto it = fresh.files.find(name);
        if (it == fresh.files.end()) {
            err << "check: " << name << " is listed in the manifest but was not recomputed\n";
            ok = false;
            continue;
        }
        const std::string on_disk = sha256_hex(read_text(cfg.output_dir / name));
        const std::string recomputed = sha256_hex(it->second);
        if (on_disk != want || recomputed != want) {
            err << "check: digest mismatch for " << name << "\n";
            ok = false;
        } else {
            ++verified;
        }
    }
    if (manifest.at("files").size() != fresh.files.size()) {
        err << "check: manifest lists " << manifest.at("files").size() << " files, recomputation produced "
            << fresh.files.size() << "\n";
        ok = false;
    }
    if (ok) {
        out << "check: " << verified << " files verified against manifest\n";
    }
    return ok;
}

template <class F>
int guarded(std::ostream& err, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const PhysicsViolation& e) {
        err << "error: " << e.what() << "\n";
        return kExitPhysics;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

ScenarioConfig effective_config(const std::filesystem::path& path, const Overrides& overrides) {
    ScenarioConfig cfg = load_config(path);
    apply_overrides(cfg, overrides);
    return cfg;
}

std::string param_units(const std::string& p) {
    if (p == "T_a" || p == "eta") {
        return p;
    }
    return p + "_per_s";
}

json::json_pointer sweep_pointer(const json& doc, const std::string& p) {
    const std::string type = doc.at("source").value("type", "");
    auto need_amp = [&] {
        if (!doc.contains("amplifier") || doc.at("amplifier").is_null()) {
            throw ConfigError("sweep: parameter '" + p + "' needs an amplifier block");
        }
    };
    if (p == "T_a") {
        need_amp();
        return json::json_pointer("/amplifier/transfer");
    }
    if (p == "n_a") {
        need_amp();
        return json::json_pointer("/amplifier/noise_flux_per_s");
    }
    if (p == "gamma_a") {
        need_amp();
        return json::json_pointer("/amplifier/gamma_per_s");
    }
    if (p == "eta") {
        return json::json_pointer("/detector/efficiency");
    }
    if (p == "n0") {
        return json::json_pointer(type == "coherent" ? "/source/flux_per_s" : "/source/mean_flux_per_s");
    }
    if (p == "gamma_c") {
        if (type == "thermal") {
            return json::json_pointer("/source/coherence_rate_per_s");
        }
        if (type == "moment") {
            return json::json_pointer("/source/excess_corr/rate_per_s");
        }
        throw ConfigError("sweep: gamma_c needs a thermal or moment source");
    }
    throw ConfigError("sweep: unsupported parameter '" + p + "'");
}

}  // namespace

RunArtifacts compute_run(const ScenarioConfig& cfg) {
    const Scenario& sc = cfg.scenario;
    const ScenarioCheck check = check_scenario(sc, cfg.options);
    if (!check.violations.empty() && !cfg.options.allow_unphysical) {
        throw PhysicsViolation(violation_message(check.violations));
    }
    if (!is_sampleable(sc.source)) {
        RunArtifacts art = analytic_run(cfg, check);
        art.files["summary.json"] = summary_json(cfg, art, json::object()).dump(2) + "\n";
        return art;
    }
    const TimeGrid& g = sc.grid;
    const double q = sc.detector.pulse_charge;
    const std::size_t discard = cfg.transient_bins.value_or(transient_bins(sc));
    MomentOptions mo = cfg.moments;
    mo.discard_bins = mo.stationary ? discard : 0;
    const bool want_spectrum = cfg.moments.stationary;
    if (want_spectrum) {
        // Surfaces the too-short-record error before any simulation.
        SpectrumAccumulator probe(g, q, cfg.segment_bins, discard);
    }
    RunAccumulator acc = accumulate_trajectories<RunAccumulator>(sc, cfg.options, [&] {
        RunAccumulator a{MomentAccumulator(g, q, mo), std::nullopt, 0.0};
        if (want_spectrum) {
            a.spectrum.emplace(g, q, cfg.segment_bins, discard);
        }
        return a;
    });
    const EstimatorReport rep = acc.moments.report();
    const MomentSet m = unconditional_moments(sc.source, sc.amplifier, sc.detector);

    RunArtifacts art;
    add_validator_checks(check, art.checks);
    if (acc.max_bin_mean > kCoarseBinMean) {
        art.warnings.push_back("largest per-bin Poisson mean " + format_number(acc.max_bin_mean) + " exceeds " +
                               format_number(kCoarseBinMean) + "; the grid is coarse for detection");
    }

    Csv mean({"time_s", "mean_current_A", "mean_current_se_A", "analytic_mean_current_A"});
    for (std::size_t i = 0; i < g.size(); ++i) {
        mean.row_begin();
        mean.num(rep.time[i]).num(rep.mean_current[i]).num(rep.mean_current_se[i]).num(m.mean(rep.time[i]));
        mean.row_end();
    }
    art.files["mean_current.csv"] = std::move(mean).str();

    json extra{{"trajectories", rep.n_traj},
               {"transient_bins", mo.discard_bins},
               {"mean_total_counts", rep.mean_total},
               {"mean_total_counts_se", rep.mean_total_se},
               {"max_bin_mean", acc.max_bin_mean}};

    if (mo.stationary) {
        const double t_ref = g.time(mo.discard_bins);
        Csv corr({"lag_s", "correlation_A2", "correlation_se_A2", "analytic_correlation_A2"});
        for (std::size_t k = 0; k < rep.lag.size(); ++k) {
            double analytic = m.smooth(t_ref, t_ref + rep.lag[k]);
            if (k == 0) {
                analytic += m.shot_weight(t_ref) / g.dt();
            }
            corr.row_begin();
            corr.num(rep.lag[k]).num(rep.correlation[k]).num(rep.correlation_se[k]).num(analytic);
            corr.row_end();
        }
        art.files["correlation.csv"] = std::move(corr).str();

        const double expected = m.mean(t_ref);
        extra["mean_level_A"] = rep.mean_level;
        extra["mean_level_se_A"] = rep.mean_level_se;
        extra["analytic_mean_A"] = expected;
        const double dev = std::abs(rep.mean_level - expected);
        double z = 0.0;
        if (rep.mean_level_se > 0.0) {
            z = dev / rep.mean_level_se;
        } else if (dev > 1e-12 * std::max(1.0, std::abs(expected))) {
            z = std::numeric_limits<double>::infinity();
        }
        art.checks.push_back(upper_check("mean_current", z, cfg.checks.mean_sigma,
                                         "|mean - q eta (T_a n0 + n_a)| in standard errors"));
    } else {
        Csv corr({"time_s", "time_prime_s", "correlation_A2"});
        const std::size_t mb = rep.matrix_time.size();
        for (std::size_t a = 0; a < mb; ++a) {
            for (std::size_t b = 0; b < mb; ++b) {
                corr.row_begin();
                corr.num(rep.matrix_time[a]).num(rep.matrix_time[b]).num(rep.correlation_matrix[a * mb + b]);
                corr.row_end();
            }
        }
        art.files["correlation.csv"] = std::move(corr).str();
        art.warnings.push_back("non-stationary source: spectrum and mean-level checks skipped");
    }

    if (acc.spectrum) {
        const SpectrumSeries spec = acc.spectrum->result();
        const double n0 = mean_flux(sc.source);
        const auto n2 = source_excess_spectrum(sc.source, g.duration());
        const double nyquist = spec.omega.back();
        const auto [lo, hi] = spectrum_band(sc, nyquist);
        Csv csv({"omega_rad_per_s", "spectrum_A2_s", "spectrum_se_A2_s", "analytic_spectrum_A2_s"});
        double worst = 0.0;
        std::size_t in_band = 0;
        for (std::size_t k = 0; k < spec.size(); ++k) {
            const double w = spec.omega[k];
            std::optional<double> analytic;
            if (w > 0.0) {
                analytic = q * q * spectrum_terms(n0, n2(w), sc.amplifier, sc.detector).total();
            }
            if (analytic && w >= lo && w <= hi && *analytic > 0.0) {
                worst = std::max(worst, std::abs(spec.value[k] / *analytic - 1.0));
                ++in_band;
            }
            csv.row_begin();
            csv.num(w).num(spec.value[k]).opt(spec.ci_halfwidth ? std::optional((*spec.ci_halfwidth)[k]) : std::nullopt);
            csv.opt(analytic);
            csv.row_end();
        }
        art.files["spectrum.csv"] = std::move(csv).str();
        extra["spectrum_segments"] = acc.spectrum->segments();
        extra["spectrum_band_rad_per_s"] = json::array({lo, hi});
        if (in_band > 0) {
            art.checks.push_back(upper_check("spectrum", worst, cfg.checks.spectrum_rel_tol,
                                             "largest relative deviation from the analytic spectrum over " +
                                                 format_number(lo) + " to " + format_number(hi) + " rad/s"));
        } else {
            art.warnings.push_back("no periodogram frequencies inside the comparison band; spectrum check skipped");
        }
    }

    const auto oracle = count_oracle(sc);
    std::optional<CountDistribution> dist;
    if (oracle) {
        dist = photocount_distribution(*oracle, sc.detector);
    }
    Csv counts({"total_counts", "probability", "probability_se", "oracle_probability"});
    for (std::size_t n = 0; n < rep.count_probability.size(); ++n) {
        counts.row_begin();
        counts.num(static_cast<std::int64_t>(n)).num(rep.count_probability[n]).num(rep.count_probability_se[n]);
        counts.opt(dist && n < dist->probability.size() ? std::optional(dist->probability[n])
                                                        : (dist ? std::optional(0.0) : std::nullopt));
        counts.row_end();
    }
    art.files["counts.csv"] = std::move(counts).str();
    if (dist) {
        std::vector<double> cdf(dist->probability.size());
        std::partial_sum(dist->probability.begin(), dist->probability.end(), cdf.begin());
        const double d = ks_distance(rep.totals, [&](std::int64_t n) {
            if (n < 0) {
                return 0.0;
            }
            return static_cast<std::size_t>(n) < cdf.size() ? cdf[static_cast<std::size_t>(n)] : 1.0;
        });
        art.checks.push_back(upper_check("count_distribution", d, ks_critical_value(cfg.checks.ks_alpha, rep.n_traj),
                                         "Kolmogorov-Smirnov distance to the photocount oracle"));
    }

    if (cfg.options.retain_envelopes) {
        art.files["envelopes.csv"] = render_envelopes(simulate_trajectory(sc, 0, true));
    }
    art.files["summary.json"] = summary_json(cfg, art, extra).dump(2) + "\n";
    return art;
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = effective_config(args.config, args.overrides);
        const bool verify_existing = args.check && std::filesystem::exists(cfg.output_dir / "manifest.json");
        const std::string started = utc_now();
        const auto t0 = std::chrono::steady_clock::now();
        const RunArtifacts art = compute_run(cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (verify_existing) {
            return static_cast<int>(verify_manifest(cfg, art, out, err) ? kExitOk : kExitRuntime);
        }
        emit(cfg, art, wall, started, "run");
        for (const auto& w : art.warnings) {
            err << "warning: " << w << "\n";
        }
        std::size_t failed = 0;
        for (const auto& c : art.checks) {
            out << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << format_number(c.value)
                << " threshold=" << format_number(c.threshold) << "\n";
            failed += c.passed ? 0 : 1;
        }
        out << "wrote " << art.files.size() + 1 << " files to " << cfg.output_dir.string() << "\n";
        if (failed > 0) {
            out << failed << " statistical check(s) outside tolerance\n";
        }
        if (args.check) {
            const RunArtifacts again = compute_run(cfg);
            if (!verify_manifest(cfg, again, out, err)) {
                return static_cast<int>(kExitRuntime);
            }
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_validate(const std::filesystem::path& path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = load_config(path);
        const ScenarioCheck check = check_scenario(cfg.scenario, cfg.options);
        json report = json::object();
        if (check.amplifier) {
            const auto& a = *check.amplifier;
            report["amplifier"] = {{"transfer", cfg.scenario.amplifier->transfer},
                                   {"noise_density", a.noise_density},
                                   {"caves_bound", a.caves_bound},
                                   {"caves_margin", a.caves_margin},
                                   {"caves_ok", a.caves_ok},
                                   {"weak_bound", a.weak_bound},
                                   {"weak_margin", a.weak_margin},
                                   {"weak_ok", a.weak_ok}};
        }
        if (check.source) {
            const auto& s = *check.source;
            report["source"] = {{"classical", false},
                                {"min_excess_spectrum_per_s2", s.min_n2_omega},
                                {"omega_at_min_rad_per_s", s.omega_at_min},
                                {"margin_per_s", s.margin},
                                {"ok", s.ok}};
        } else {
            report["source"] = {{"classical", true}, {"ok", true}};
        }
        report["violations"] = check.violations;
        report["passed"] = check.violations.empty();
        out << report.dump(2) << "\n";
        for (const auto& v : check.violations) {
            err << "violation: " << v << "\n";
        }
        return static_cast<int>(check.violations.empty() ? kExitOk : kExitPhysics);
    });
}

int cmd_compose(const ComposeArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::vector<std::filesystem::path> files;
        if (std::filesystem::is_directory(args.fixtures)) {
            for (const auto& e : std::filesystem::directory_iterator(args.fixtures)) {
                if (e.path().extension() == ".json") {
                    files.push_back(e.path());
                }
            }
            std::sort(files.begin(), files.end());
        } else {
            files.push_back(args.fixtures);
        }
        if (files.empty()) {
            throw ConfigError("compose: no fixture files found in '" + args.fixtures.string() + "'");
        }
        std::vector<std::pair<std::filesystem::path, ComposeFixture>> fixtures;
        for (const auto& f : files) {
            std::ifstream in(f);
            if (!in) {
                throw ConfigError("compose: cannot read fixture '" + f.string() + "'");
            }
            try {
                fixtures.emplace_back(f, fixture_from_json(json::parse(in)));
            } catch (const json::exception& e) {
                throw ConfigError("compose: fixture '" + f.string() + "' does not parse: " + e.what());
            } catch (const std::invalid_argument& e) {
                throw ConfigError("compose: fixture '" + f.string() + "' is invalid: " + e.what());
            }
        }
        bool all = true;
        for (const auto& [path, fx] : fixtures) {
            const ComposeReport rep = run_compose_suite(fx);
            out << path.filename().string() << ": " << fx.description << "\n";
            for (const auto& c : rep.checks) {
                out << "  " << (c.passed ? "PASS " : "FAIL ") << c.name
                    << " max_abs_deviation=" << format_number(c.max_deviation) << "\n";
            }
            if (rep.kernel_is_zero) {
                out << "  kernel is zero: dress " << (rep.dress_is_identity ? "is" : "is NOT") << " the identity\n";
            }
            if (rep.any_signed) {
                out << "  signed quasi-distribution weights present\n";
            }
            all = all && rep.all_passed();
        }
        return static_cast<int>(all ? kExitOk : kExitRuntime);
    });
}

std::vector<double> SweepRange::values() const {
    std::vector<double> v;
    for (std::size_t i = 0; i < count; ++i) {
        v.push_back(count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return v;
}

SweepRange parse_range(const std::string& text) {
    const auto a = text.find(':');
    const auto b = a == std::string::npos ? a : text.find(':', a + 1);
    if (b == std::string::npos) {
        throw ConfigError("sweep: range must read start:stop:count");
    }
    auto number = [&](const std::string& s) {
        char* end = nullptr;
        const double x = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(x)) {
            throw ConfigError("sweep: bad number '" + s + "' in range");
        }
        return x;
    };
    SweepRange r{number(text.substr(0, a)), number(text.substr(a + 1, b - a - 1)), 0};
    const std::string c = text.substr(b + 1);
    if (c.empty() || c.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("sweep: count must be a non-negative integer");
    }
    r.count = std::stoul(c);
    if (r.count == 0) {
        throw ConfigError("sweep: empty range");
    }
    return r;
}

const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> names{"T_a", "n_a", "eta", "n0", "gamma_a", "gamma_c"};
    return names;
}

std::string compute_sweep(const ScenarioConfig& base, const std::string& parameter, const SweepRange& range) {
    const auto& names = sweep_parameters();
    if (std::find(names.begin(), names.end(), parameter) == names.end()) {
        throw ConfigError("sweep: parameter '" + parameter + "' is not one of T_a, n_a, eta, n0, gamma_a, gamma_c");
    }
    const auto ptr = sweep_pointer(base.document, parameter);
    const bool simulate = base.sweep.simulate;
    std::vector<std::string> header{"omega_rad_per_s", param_units(parameter), "analytic_spectrum_A2_s",
                                    "n0_coefficient", "caves_ok", "weak_ok"};
    if (simulate) {
        header.push_back("simulated_spectrum_A2_s");
        header.push_back("simulated_spectrum_se_A2_s");
    }
    std::string text;
    for (std::size_t i = 0; i < header.size(); ++i) {
        text += (i ? "," : "") + header[i];
    }
    text += '\n';
    for (double value : range.values()) {
        json doc = base.document;
        doc[ptr] = value;
        const ScenarioConfig cfg = parse_config(doc);
        const Scenario& sc = cfg.scenario;
        const ScenarioCheck check = check_scenario(sc, cfg.options);
        double omega = 0.0;
        if (cfg.sweep.omega_rad_per_s) {
            omega = *cfg.sweep.omega_rad_per_s;
        } else if (check.source) {
            omega = check.source->omega_at_min;
        } else {
            throw ConfigError("sweep: set sweep.omega_rad_per_s (no moment source to locate the spectral minimum)");
        }
        const double n0 = mean_flux(sc.source);
        const double n2 = source_excess_spectrum(sc.source, sc.grid.duration())(omega);
        const double q = sc.detector.pulse_charge;
        // At omega = 0 this is the omega -> 0+ limit; the DC constant is excluded.
        const double analytic = q * q * spectrum_terms(n0, n2, sc.amplifier, sc.detector).total();
        const double ratio = n0 > 0.0 ? n2 / n0 : 0.0;
        const double coefficient = spectrum_n0_coefficient(ratio, sc.amplifier, sc.detector);
        const bool caves = !check.amplifier || check.amplifier->caves_ok;
        const bool weak = !check.amplifier || check.amplifier->weak_ok;
        std::string row = format_number(omega) + "," + format_number(value) + "," + format_number(analytic) + "," +
                          format_number(coefficient) + "," + (caves ? "1" : "0") + "," + (weak ? "1" : "0");
        if (simulate) {
            if (!is_sampleable(sc.source)) {
                row += ",,";
            } else {
                if (!check.violations.empty() && !cfg.options.allow_unphysical) {
                    throw PhysicsViolation(violation_message(check.violations));
                }
                const std::size_t discard = cfg.transient_bins.value_or(transient_bins(sc));
                const SpectrumSeries spec = simulate_spectrum(sc, cfg.options, cfg.segment_bins, discard);
                std::size_t best = 1;
                for (std::size_t k = 1; k < spec.size(); ++k) {
                    if (std::abs(spec.omega[k] - omega) < std::abs(spec.omega[best] - omega)) {
                        best = k;
                    }
                }
                row += "," + format_number(spec.value[best]) + "," +
                       (spec.ci_halfwidth ? format_number((*spec.ci_halfwidth)[best]) : std::string());
            }
        }
        text += row + '\n';
    }
    return text;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = effective_config(args.config, args.overrides);
        const SweepRange range = parse_range(args.range);
        const std::string started = utc_now();
        const auto t0 = std::chrono::steady_clock::now();
        RunArtifacts art;
        art.files["sweep.csv"] = compute_sweep(cfg, args.parameter, range);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        emit(cfg, art, wall, started, "sweep " + args.parameter + " " + args.range);
        out << "wrote " << (cfg.output_dir / "sweep.csv").string() << "\n";
        return static_cast<int>(kExitOk);
    });
}

}  // namespace qedc::cli
