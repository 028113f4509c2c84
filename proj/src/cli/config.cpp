#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "qedcascade/cli.hpp"

namespace qedc::cli {
namespace {

using nlohmann::json;

// Read-once view of a JSON object; finish() rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(where() + "must be an object");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const json* find(const std::string& key) {
        used_.insert(key);
        if (!has(key)) {
            return nullptr;
        }
        return &j_.at(key);
    }

    const json& require(const std::string& key) {
        const json* v = find(key);
        if (!v) {
            throw ConfigError(where() + "missing required key '" + key + "'");
        }
        return *v;
    }

    double number(const std::string& key) { return as_number(require(key), key); }

    std::optional<double> opt_number(const std::string& key) {
        const json* v = find(key);
        return v ? std::optional<double>(as_number(*v, key)) : std::nullopt;
    }

    std::uint64_t count(const std::string& key) { return as_count(require(key), key); }

    std::optional<std::uint64_t> opt_count(const std::string& key) {
        const json* v = find(key);
        return v ? std::optional<std::uint64_t>(as_count(*v, key)) : std::nullopt;
    }

    std::optional<bool> opt_bool(const std::string& key) {
        const json* v = find(key);
        if (!v) {
            return std::nullopt;
        }
        if (!v->is_boolean()) {
            throw ConfigError(where() + "'" + key + "' must be true or false");
        }
        return v->get<bool>();
    }

    std::string text(const std::string& key) {
        const json& v = require(key);
        if (!v.is_string()) {
            throw ConfigError(where() + "'" + key + "' must be a string");
        }
        return v.get<std::string>();
    }

    std::optional<std::string> opt_text(const std::string& key) {
        if (!has(key)) {
            used_.insert(key);
            return std::nullopt;
        }
        return text(key);
    }

    Section child(const std::string& key) { return Section(require(key), path_ + key + "."); }

    std::optional<Section> opt_child(const std::string& key) {
        const json* v = find(key);
        return v ? std::optional<Section>(Section(*v, path_ + key + ".")) : std::nullopt;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.count(key)) {
                throw ConfigError("unknown configuration key '" + path_ + key + "'");
            }
        }
    }

    std::string where() const { return path_.empty() ? std::string("config: ") : "config " + path_ + ": "; }

private:
    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) {
            throw ConfigError(where() + "'" + key + "' must be a number");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            throw ConfigError(where() + "'" + key + "' must be finite");
        }
        return x;
    }

    std::uint64_t as_count(const json& v, const std::string& key) const {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            throw ConfigError(where() + "'" + key + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::function<double(double)> parse_modulation(Section s) {
    const std::string shape = s.text("shape");
    std::function<double(double)> m;
    if (shape == "cosine") {
        const double depth = s.number("depth");
        const double omega = s.number("omega_rad_per_s");
        if (!(depth >= 0.0 && depth <= 1.0)) {
            throw ConfigError(s.where() + "'depth' must lie in [0, 1]");
        }
        m = [depth, omega](double t) { return 1.0 + depth * std::cos(omega * t); };
    } else if (shape == "pulse") {
        const double start = s.number("start_s");
        const double stop = s.number("stop_s");
        if (!(stop > start)) {
            throw ConfigError(s.where() + "'stop_s' must exceed 'start_s'");
        }
        m = [start, stop](double t) { return (t >= start && t < stop) ? 1.0 : 0.0; };
    } else {
        throw ConfigError(s.where() + "unknown modulation shape '" + shape + "' (expected cosine or pulse)");
    }
    s.finish();
    return m;
}

// Excess intensity correlation. relative_amplitude fixes the excess spectrum
// at zero frequency to relative_amplitude * n0.
std::function<double(double)> parse_excess(Section s, double n0) {
    const std::string shape = s.text("shape");
    const double rate = s.number("rate_per_s");
    if (!(rate > 0.0)) {
        throw ConfigError(s.where() + "'rate_per_s' must be positive");
    }
    const auto absolute = s.opt_number("amplitude_per_s2");
    const auto relative = s.opt_number("relative_amplitude");
    if (absolute.has_value() == relative.has_value()) {
        throw ConfigError(s.where() + "give exactly one of 'amplitude_per_s2' and 'relative_amplitude'");
    }
    std::function<double(double)> f;
    if (shape == "lorentzian") {
        const double a = absolute ? *absolute : *relative * n0 * rate / 2.0;
        f = [a, rate](double tau) { return a * std::exp(-rate * std::abs(tau)); };
    } else if (shape == "gaussian") {
        const double a = absolute ? *absolute : *relative * n0 * rate / std::sqrt(std::numbers::pi);
        f = [a, rate](double tau) { return a * std::exp(-(rate * tau) * (rate * tau)); };
    } else {
        throw ConfigError(s.where() + "unknown excess correlation shape '" + shape + "' (expected lorentzian or gaussian)");
    }
    s.finish();
    return f;
}

SourceModel parse_source(Section s) {
    const std::string type = s.text("type");
    SourceModel src;
    if (type == "coherent") {
        CoherentSource c;
        c.flux_per_s = s.number("flux_per_s");
        if (auto m = s.opt_child("modulation")) {
            c.modulation = parse_modulation(std::move(*m));
        }
        src = std::move(c);
    } else if (type == "thermal") {
        src = ThermalSource{s.number("mean_flux_per_s"), s.number("coherence_rate_per_s")};
    } else if (type == "moment") {
        MomentSource m;
        m.mean_flux_per_s = s.number("mean_flux_per_s");
        m.excess_corr = parse_excess(s.child("excess_corr"), m.mean_flux_per_s);
        src = std::move(m);
    } else {
        throw ConfigError(s.where() + "unknown source type '" + type + "' (expected coherent, thermal or moment)");
    }
    s.finish();
    return src;
}

template <class F>
auto config_guard(F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

}  // namespace

ScenarioConfig parse_config(const json& doc) {
    return config_guard([&] {
        Section root(doc, "");
        Section g = root.child("grid");
        const double t0 = g.opt_number("t0_s").value_or(0.0);
        const double dt = g.number("dt_s");
        const auto bins = g.count("bins");
        g.finish();
        TimeGrid grid(t0, dt, bins);

        SourceModel source = parse_source(root.child("source"));
        const bool modulated = [&] {
            const auto* c = std::get_if<CoherentSource>(&source);
            return c && !c->stationary();
        }();

        RunOptions options;
        std::optional<AmplifierModel> amplifier;
        if (auto a = root.opt_child("amplifier")) {
            AmplifierModel amp;
            amp.transfer = a->number("transfer");
            amp.noise_flux_per_s = a->number("noise_flux_per_s");
            amp.gamma_per_s = a->number("gamma_per_s");
            const std::string mode = a->opt_text("noise_mode").value_or("ou");
            if (mode == "ou") {
                amp.mode = NoiseMode::OrnsteinUhlenbeck;
            } else if (mode == "white") {
                amp.mode = NoiseMode::White;
            } else {
                throw ConfigError(a->where() + "unknown noise_mode '" + mode + "' (expected ou or white)");
            }
            options.bandwidth_ratio = a->opt_number("bandwidth_ratio").value_or(options.bandwidth_ratio);
            a->finish();
            amplifier = amp;
        }

        Section d = root.child("detector");
        DetectorModel det{d.number("efficiency"), d.number("charge_c")};
        d.finish();

        ScenarioConfig cfg(Scenario{std::move(source), amplifier, det, grid, 1, 0, ExecutionPlan::Chain});
        cfg.moments.stationary = !modulated;
        if (auto r = root.opt_child("run")) {
            cfg.scenario.n_traj = r->opt_count("trajectories").value_or(1);
            cfg.scenario.seed = r->opt_count("seed").value_or(0);
            if (auto p = r->opt_text("plan")) {
                auto plan = parse_plan(*p);
                if (!plan) {
                    throw ConfigError(r->where() + "unknown plan '" + *p +
                                      "' (expected chain, composite-source or composite-detector)");
                }
                cfg.scenario.plan = *plan;
            }
            options.threads = static_cast<unsigned>(r->opt_count("threads").value_or(1));
            if (options.threads < 1) {
                throw ConfigError(r->where() + "'threads' must be >= 1");
            }
            cfg.segment_bins = r->opt_count("segment_bins").value_or(cfg.segment_bins);
            cfg.transient_bins = r->opt_count("transient_bins");
            cfg.moments.max_lag_bins = r->opt_count("max_lag_bins").value_or(cfg.moments.max_lag_bins);
            cfg.moments.matrix_bins = r->opt_count("matrix_bins").value_or(cfg.moments.matrix_bins);
            cfg.moments.stationary = r->opt_bool("stationary").value_or(cfg.moments.stationary);
            options.allow_unphysical = r->opt_bool("allow_unphysical").value_or(false);
            options.retain_envelopes = r->opt_bool("retain_envelopes").value_or(false);
            r->finish();
        }
        if (cfg.moments.stationary && modulated) {
            throw ConfigError("config run.: stationary estimators need an unmodulated source");
        }
        if (cfg.scenario.n_traj < 2) {
            throw ConfigError("config run.: 'trajectories' must be >= 2 for error estimates");
        }
        cfg.options = options;
        if (auto o = root.opt_child("output")) {
            cfg.output_dir = o->opt_text("dir").value_or("out");
            o->finish();
        }
        if (auto c = root.opt_child("checks")) {
            cfg.checks.mean_sigma = c->opt_number("mean_sigma").value_or(cfg.checks.mean_sigma);
            cfg.checks.spectrum_rel_tol = c->opt_number("spectrum_rel_tol").value_or(cfg.checks.spectrum_rel_tol);
            cfg.checks.ks_alpha = c->opt_number("ks_alpha").value_or(cfg.checks.ks_alpha);
            c->finish();
            if (!(cfg.checks.mean_sigma > 0.0) || !(cfg.checks.spectrum_rel_tol > 0.0) ||
                !(cfg.checks.ks_alpha > 0.0 && cfg.checks.ks_alpha < 1.0)) {
                throw ConfigError("config checks.: tolerances must be positive (ks_alpha in (0, 1))");
            }
        }
        if (auto s = root.opt_child("sweep")) {
            cfg.sweep.omega_rad_per_s = s->opt_number("omega_rad_per_s");
            cfg.sweep.simulate = s->opt_bool("simulate").value_or(false);
            s->finish();
            if (cfg.sweep.omega_rad_per_s && !(*cfg.sweep.omega_rad_per_s >= 0.0)) {
                throw ConfigError("config sweep.: 'omega_rad_per_s' must be >= 0");
            }
        }
        root.finish();
        cfg.document = doc;
        return cfg;
    });
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read configuration file '" + path.string() + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("configuration file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

std::string config_digest(const ScenarioConfig& config) {
    json doc = config.document;
    if (doc.contains("run") && doc["run"].is_object()) {
        doc["run"].erase("threads");
        if (doc["run"].empty()) {
            doc.erase("run");
        }
    }
    return sha256_hex(doc.dump());
}

void apply_overrides(ScenarioConfig& config, const Overrides& o) {
    json doc = config.document;
    if (o.seed) {
        doc["run"]["seed"] = *o.seed;
    }
    if (o.trajectories) {
        doc["run"]["trajectories"] = *o.trajectories;
    }
    if (o.threads) {
        doc["run"]["threads"] = *o.threads;
    }
    if (o.allow_unphysical) {
        doc["run"]["allow_unphysical"] = true;
    }
    if (o.out) {
        doc["output"]["dir"] = o.out->string();
    }
    config = parse_config(doc);
}

}  // namespace qedc::cli
