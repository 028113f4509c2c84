// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/poisson.hpp>

#include "qedcascade/analytics.hpp"
#include "qedcascade/cascade.hpp"
#include "qedcascade/cli.hpp"
#include "qedcascade/phase_space_random.hpp"
#include "qedcascade/stats.hpp"

using namespace qedc;

namespace {

// Pinned tolerances.
constexpr double kMeanSigma = 3.0;
constexpr double kSpectrumRelTol = 0.05;
constexpr double kBoundaryCoeffTol = 1e-12;
constexpr double kBoundarySigma = 3.0;
constexpr double kPhaseSpaceTol = 1e-12;
constexpr double kPoissonCdfTol = 1e-9;
constexpr double kGeometricTol = 1e-8;
constexpr double kKsAlpha = 0.01;
constexpr double kSplitTol = 1e-12;
constexpr double kKernelTol = 1e-10;
constexpr double kWhiteSigma = 3.0;
constexpr double kMarginTol = 1e-9;

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
    bool passed;
    std::string detail;
};

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(4);
    s << x;
    return s.str();
}

RunOptions threaded() {
    RunOptions o;
    o.threads = worker_threads();
    return o;
}

// --- 1 ---------------------------------------------------------------------

Outcome mean_photocurrent() {
    const Timer timer;
    constexpr double n0 = 10.0, eta = 0.8, q = 2.0, gamma_a = 10.0, gamma_c = 1.0;
    constexpr std::size_t kTraj = 100000;
    double worst = 0.0;
    int triples = 0, overridden = 0;
    std::uint64_t seed = 31000;
    for (double T : {0.5, 1.0, 4.0}) {
        // Noise at zero and at the minimum the Caves bound allows.
        for (double na : {0.0, caves_bound(T) * gamma_a / 4.0}) {
            for (bool thermal : {false, true}) {
                Scenario s{thermal ? SourceModel{ThermalSource{n0, gamma_c}} : SourceModel{CoherentSource{n0, {}}},
                           AmplifierModel{T, na, gamma_a},
                           DetectorModel{eta, q},
                           TimeGrid(0.0, 0.01, 64),
                           kTraj,
                           seed++};
                // The mean is linear in the noise flux whether or not the
                // amplifier respects the Caves bound (T = 4 with n_a = 0 does not).
                RunOptions opts = threaded();
                if (!check_scenario(s, opts).violations.empty()) {
                    opts.allow_unphysical = true;
                    ++overridden;
                }
                MomentOptions mo;
                mo.max_lag_bins = 1;
                const EstimatorReport r = simulate_moments(s, opts, mo);
                const double expect = q * eta * (T * n0 + na);
                const double z = std::abs(r.mean_level - expect) / r.mean_level_se;
                worst = std::max(worst, z);
                ++triples;
            }
        }
    }
    const double secs = timer.seconds();
    return {worst <= kMeanSigma && secs <= 300.0, std::to_string(triples) + " triples at 1e5 trajectories, worst |z| = " +
                                                      fmt(worst) + " (limit " + fmt(kMeanSigma) + "), budget 300 s, " +
                                                      std::to_string(overridden) + " below the Caves bound by design"};
}

// --- 2 ---------------------------------------------------------------------

Outcome spectrum_shapes() {
    double worst_coherent = 0.0;
    {
        constexpr double n0 = 10.0, eta = 0.8, q = 1.5, dt = 0.01;
        constexpr std::size_t seg = 256;
        Scenario s{CoherentSource{n0, {}}, std::nullopt, DetectorModel{eta, q}, TimeGrid(0.0, dt, 16384), 200, 32001};
        const SpectrumSeries spec = simulate_spectrum(s, threaded(), seg, 0);
        const double nyquist = std::numbers::pi / dt;
        const double floor = q * q * eta * n0;
        for (std::size_t k = 1; k < spec.size(); ++k) {
            if (spec.omega[k] >= 0.1 * nyquist && spec.omega[k] <= 0.9 * nyquist) {
                worst_coherent = std::max(worst_coherent, std::abs(spec.value[k] / floor - 1.0));
            }
        }
    }
    double worst_thermal = 0.0, worst_analytic = 0.0;
    {
        constexpr double n0 = 5.0, gamma_c = 1.0, eta = 0.8, q = 1.0, dt = 0.02;
        constexpr std::size_t seg = 8192;
        Scenario s{ThermalSource{n0, gamma_c}, std::nullopt, DetectorModel{eta, q}, TimeGrid(0.0, dt, 1), 2500, 32002};
        const std::size_t transient = transient_bins(s);
        s.grid = TimeGrid(0.0, dt, 4 * seg + transient);
        const SpectrumSeries spec = simulate_spectrum(s, threaded(), seg, transient);
        std::vector<double> band;
        std::vector<double> measured;
        for (std::size_t k = 1; k < spec.size(); ++k) {
            if (spec.omega[k] >= gamma_c / 4.0 && spec.omega[k] <= 4.0 * gamma_c) {
                band.push_back(spec.omega[k]);
                measured.push_back(spec.value[k]);
            }
        }
        const SpectrumSeries model = analytic_spectrum(n0, source_excess_spectrum(s.source), std::nullopt, s.detector, band);
        for (std::size_t i = 0; i < band.size(); ++i) {
            const double w = band[i];
            // Shot floor plus bunching Lorentzian of the chaotic intensity.
            const double oracle = q * q * (eta * n0 + eta * eta * 2.0 * n0 * n0 * gamma_c / (gamma_c * gamma_c + w * w));
            worst_analytic = std::max(worst_analytic, std::abs(model.value[i] / oracle - 1.0));
            worst_thermal = std::max(worst_thermal, std::abs(measured[i] / oracle - 1.0));
        }
    }
    const bool ok = worst_coherent <= kSpectrumRelTol && worst_thermal <= kSpectrumRelTol && worst_analytic < 1e-12;
    return {ok, "coherent mid-band worst rel dev " + fmt(worst_coherent) + ", thermal [gamma_c/4, 4 gamma_c] worst rel dev " +
                    fmt(worst_thermal) + " (limit " + fmt(kSpectrumRelTol) + "), analytic vs oracle " +
                    fmt(worst_analytic)};
}

// --- 3 ---------------------------------------------------------------------

Outcome noise_limit_boundary() {
    const DetectorModel unit{1.0, 1.0};
    double worst_coeff = 0.0;
    for (double T : {1.5, 2.0, 3.0, 5.0}) {
        for (double gamma : {0.5, 1.0, 10.0}) {
            const AmplifierModel amp{T, (T - 1.0) * gamma / 8.0, gamma};
            worst_coeff = std::max(worst_coeff, std::abs(spectrum_n0_coefficient(-1.0, amp, unit)));
        }
    }

    // On the boundary the spectrum no longer depends on n0; n0 = 0 is the
    // sampleable representative. The amplifier itself sits below the Caves
    // bound there, so the validator has to be overridden.
    constexpr double na = 0.125, gamma = 1.0, dt = 0.1, q = 1.0;
    constexpr std::size_t seg = 1024;
    const double T = 1.0 + 8.0 * na / gamma;
    Scenario s{CoherentSource{0.0, {}}, AmplifierModel{T, na, gamma}, DetectorModel{1.0, q}, TimeGrid(0.0, dt, 1),
               1000, 33001};
    const std::size_t transient = transient_bins(s);
    s.grid = TimeGrid(0.0, dt, 12 * seg + transient);
    RunOptions opts = threaded();
    opts.allow_unphysical = true;
    const SpectrumSeries spec = simulate_spectrum(s, opts, seg, transient);
    const double expect = q * q * na * (1.0 + 2.0 * na / gamma);
    const double z = std::abs(spec.value[1] - expect) / (*spec.ci_halfwidth)[1];
    const bool ok = worst_coeff < kBoundaryCoeffTol && z <= kBoundarySigma;
    return {ok, "n0 coefficient max |c| = " + fmt(worst_coeff) + " (limit 1e-12); MC at omega = " + fmt(spec.omega[1]) +
                    ": " + fmt(spec.value[1]) + " vs " + fmt(expect) + ", |z| = " + fmt(z) + " (limit " +
                    fmt(kBoundarySigma) + ")"};
}

// --- 4 ---------------------------------------------------------------------

Outcome phase_space_identities() {
    const Timer timer;
    RandomStream rng(34001, 0);
    std::map<std::string, double> worst;
    int instances = 0, signed_count = 0, with_kernel = 0;
    bool all_passed = true;
    for (int i = 0; i < 60; ++i) {
        RandomFixtureShape shape;
        shape.bins = 1 + static_cast<std::size_t>(i % 3);
        shape.current_levels = 2 + static_cast<std::size_t>((i / 3) % 3);
        shape.is_signed = i % 2 == 1;
        shape.zero_kernel = i % 7 == 0;
        const ComposeFixture fx = random_compose_fixture(shape, rng);
        const ComposeReport rep = run_compose_suite(fx, kPhaseSpaceTol);
        for (const auto& c : rep.checks) {
            worst[c.name] = std::max(worst[c.name], c.max_deviation);
        }
        all_passed = all_passed && rep.all_passed();
        ++instances;
        signed_count += rep.any_signed ? 1 : 0;
        with_kernel += rep.kernel_is_zero ? 0 : 1;
    }
    double overall = 0.0;
    for (const auto& [name, dev] : worst) {
        overall = std::max(overall, dev);
    }
    return {all_passed && overall < kPhaseSpaceTol && timer.seconds() <= 60.0,
            std::to_string(instances) + " instances (" + std::to_string(signed_count) + " signed, " +
                std::to_string(with_kernel) + " nonzero kernels), " + std::to_string(worst.size()) +
                " identities, max deviation " + fmt(overall) + " (limit 1e-12), budget 60 s"};
}

// --- 5 ---------------------------------------------------------------------

Outcome photocounting() {
    double worst_poisson = 0.0;
    for (double w : {0.3, 4.0, 25.0}) {
        const DetectorModel det{0.7, 1.0};
        const CountDistribution d = photocount_distribution(PointMassIntensity{w}, det);
        const boost::math::poisson_distribution<double> ref(0.7 * w);
        for (std::size_t n = 0; n < d.probability.size(); ++n) {
            worst_poisson = std::max(worst_poisson, std::abs(d.cdf(n) - boost::math::cdf(ref, static_cast<double>(n))));
        }
    }
    double worst_geometric = 0.0;
    for (double w : {0.5, 3.0, 12.0}) {
        const DetectorModel det{0.9, 1.0};
        const CountDistribution d = photocount_distribution(ExponentialIntensity{w}, det);
        const double nbar = 0.9 * w;
        for (std::size_t n = 0; n < d.probability.size(); ++n) {
            const double p = std::pow(nbar, static_cast<double>(n)) / std::pow(1.0 + nbar, static_cast<double>(n) + 1.0);
            worst_geometric = std::max(worst_geometric, std::abs(d.probability[n] - p));
        }
    }

    // Single coherence cell: gamma_c * window = 1e-3, mean count 2.
    constexpr std::size_t bins = 16, kTraj = 100000;
    constexpr double gamma_c = 1.0, window = 1e-3, eta = 0.8;
    const double n0 = 2.0 / (eta * window);
    const Scenario s{ThermalSource{n0, gamma_c}, std::nullopt, DetectorModel{eta, 1.0},
                     TimeGrid(0.0, window / bins, bins), kTraj, 35001};
    const std::vector<std::int64_t> totals = simulate_totals(s, threaded());
    const CountDistribution oracle = photocount_distribution(ExponentialIntensity{n0 * window}, s.detector);
    const double ks = ks_distance(totals, [&](std::int64_t n) {
        return n < 0 ? 0.0 : oracle.cdf(static_cast<std::size_t>(n));
    });
    const double crit = ks_critical_value(kKsAlpha, kTraj);
    const bool ok = worst_poisson <= kPoissonCdfTol && worst_geometric <= kGeometricTol && ks < crit;
    return {ok, "Poisson CDF max dev " + fmt(worst_poisson) + " (limit 1e-9), geometric max dev " +
                    fmt(worst_geometric) + " (limit 1e-8), thermal cell KS " + fmt(ks) + " (1% critical " +
                    fmt(crit) + ")"};
}

// --- 6 ---------------------------------------------------------------------

Outcome validator_arithmetic() {
    bool table_ok = true;
    for (auto [t, want] : {std::pair{0.5, 0.0}, {1.0, 0.0}, {2.0, 1.0}, {3.0, 2.0}}) {
        table_ok = table_ok && caves_bound(t) == want && weak_bound(t) == (t - 1.0) / 2.0;
    }
    const std::vector<double> transfers{0.5, 1.0, 2.0, 3.0};
    for (const auto& row : caves_boundary_curve(transfers)) {
        table_ok = table_ok && row.weak_raw == (row.transfer - 1.0) / 2.0;
    }
    constexpr double n0 = 4.0, gamma = 1.0;
    const double amp = -n0 * gamma / 2.0;
    const MomentSource boundary{n0, [=](double tau) { return amp * std::exp(-gamma * std::abs(tau)); }};
    const MomentSourceReport rep = validate_moment_source(boundary, TimeGrid(0.0, 0.05, 4096));
    const bool ok = table_ok && rep.ok && std::abs(rep.margin) <= kMarginTol * n0;
    return {ok, std::string("Caves/weak table ") + (table_ok ? "exact" : "MISMATCH") +
                    "; Lorentzian boundary source margin " + fmt(rep.margin) + " at omega " + fmt(rep.omega_at_min)};
}

// --- 7 ---------------------------------------------------------------------

std::vector<Complex> circular_apply(const std::vector<Complex>& h, std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<Complex> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < n; ++m) {
            y[i] += h[m] * x[(i + n - m) % n];
        }
    }
    return y;
}

Outcome signal_numerics() {
    RandomStream rng(37001, 0);
    double split = 0.0, conj = 0.0, kernel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 8 + static_cast<std::size_t>(rng.uniform() * 250.0);
        std::vector<double> x(n);
        for (auto& v : x) {
            v = rng.normal();
        }
        const RealSignal sig(TimeGrid(0.0, 0.1, n), x);
        const FrequencyParts p = split_frequency(sig);
        // Discrete delta-plus kernel; delta-minus is its conjugate.
        std::vector<Complex> hp(n, 0.0), hm(n, 0.0);
        hp[0] = hm[0] = 0.5;
        const double dn = static_cast<double>(n);
        for (std::size_t m = 1; m < n; ++m) {
            const double a = std::numbers::pi * static_cast<double>(m) / dn;
            double c = 0.0;
            if (n % 2 == 0) {
                c = m % 2 == 1 ? -1.0 / std::tan(a) : 0.0;
            } else {
                c = m % 2 == 1 ? -0.5 / std::tan(a / 2.0) : 0.5 * std::tan(a / 2.0);
            }
            hp[m] = Complex(0.0, c / dn);
            hm[m] = Complex(0.0, -c / dn);
        }
        const auto plus = circular_apply(hp, x);
        const auto minus = circular_apply(hm, x);
        for (std::size_t i = 0; i < n; ++i) {
            split = std::max(split, std::abs(p.positive[i] + p.negative[i] - x[i]));
            conj = std::max(conj, std::abs(p.negative[i] - std::conj(p.positive[i])));
            kernel = std::max(kernel, std::max(std::abs(plus[i] - p.positive[i]), std::abs(minus[i] - p.negative[i])));
        }
    }

    constexpr double sigma = 0.7, dt = 0.02;
    constexpr std::size_t len = 256;
    PeriodogramAccumulator acc(dt, len);
    std::vector<double> rec(len * 40);
    for (int r = 0; r < 100; ++r) {
        for (auto& v : rec) {
            v = sigma * rng.normal();
        }
        acc.add_record(rec);
    }
    const SpectrumSeries s = acc.result();
    double total = 0.0, var = 0.0;
    std::size_t bins = 0;
    for (std::size_t k = 1; k + 1 < s.size(); ++k) {
        total += s.value[k];
        var += (*s.ci_halfwidth)[k] * (*s.ci_halfwidth)[k];
        ++bins;
    }
    const double mean = total / static_cast<double>(bins);
    const double se = std::sqrt(var) / static_cast<double>(bins);
    const double z = std::abs(mean - sigma * sigma * dt) / se;
    const bool ok = split <= kSplitTol && conj <= kSplitTol && kernel <= kKernelTol && z <= kWhiteSigma;
    return {ok, "reconstruction " + fmt(split) + ", conjugation " + fmt(conj) + " (limit 1e-12); kernel oracle " +
                    fmt(kernel) + " (limit 1e-10); white-noise level |z| = " + fmt(z) + " (limit 3)"};
}

// --- 8 ---------------------------------------------------------------------

std::map<std::string, std::string> read_csvs(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".csv") {
            std::ifstream in(e.path(), std::ios::binary);
            std::ostringstream body;
            body << in.rdbuf();
            out[e.path().filename().string()] = body.str();
        }
    }
    return out;
}

Outcome reproducibility() {
    const nlohmann::json configs[] = {
        nlohmann::json::parse(R"({
            "grid": {"dt_s": 0.01, "bins": 4096},
            "source": {"type": "coherent", "flux_per_s": 10.0},
            "detector": {"efficiency": 0.8, "charge_c": 1.0},
            "run": {"trajectories": 300, "seed": 38001, "segment_bins": 256, "retain_envelopes": true}
        })"),
        nlohmann::json::parse(R"({
            "grid": {"dt_s": 0.005, "bins": 4096},
            "source": {"type": "thermal", "mean_flux_per_s": 4.0, "coherence_rate_per_s": 1.0},
            "amplifier": {"transfer": 2.0, "noise_flux_per_s": 5.0, "gamma_per_s": 20.0},
            "detector": {"efficiency": 0.5, "charge_c": 1.0},
            "run": {"trajectories": 200, "seed": 38002, "segment_bins": 512, "plan": "composite-detector"}
        })"),
    };
    const auto root = std::filesystem::temp_directory_path() / "qedc_acceptance_repro";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);
    std::size_t compared = 0;
    bool identical = true;
    int idx = 0;
    for (const auto& cfg : configs) {
        const auto cfg_path = root / ("config" + std::to_string(idx) + ".json");
        std::ofstream(cfg_path) << cfg.dump(2);
        std::vector<std::map<std::string, std::string>> runs;
        int r = 0;
        for (unsigned threads : {1u, 1u, 4u, 4u}) {
            cli::RunArgs args;
            args.config = cfg_path;
            args.overrides.threads = threads;
            args.overrides.out = root / ("run" + std::to_string(idx) + "_" + std::to_string(r++));
            std::ostringstream sink;
            if (cli::cmd_run(args, sink, sink) != cli::kExitOk) {
                return {false, "run failed: " + sink.str()};
            }
            runs.push_back(read_csvs(*args.overrides.out));
        }
        for (std::size_t k = 1; k < runs.size(); ++k) {
            identical = identical && runs[k] == runs[0];
        }
        compared += runs[0].size();
        ++idx;
    }
    std::filesystem::remove_all(root);
    return {identical && compared > 0, std::to_string(compared) + " CSV files per run, 2 configs x 2 runs x threads {1, 4}: " +
                                           (identical ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"1 mean photocurrent", mean_photocurrent},
        {"2 spectrum", spectrum_shapes},
        {"3 noise-limit boundary", noise_limit_boundary},
        {"4 phase-space identities", phase_space_identities},
        {"5 photocounting", photocounting},
        {"6 validator arithmetic", validator_arithmetic},
        {"7 signal-core numerics", signal_numerics},
        {"8 reproducibility", reproducibility},
    };
    int failures = 0;
    Timer total;
    for (const auto& c : criteria) {
        Timer t;
        Outcome o{false, ""};
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.passed ? "PASS" : "FAIL") << "  [" << c.name << "]  " << o.detail << "  (" << fmt(t.seconds())
                  << " s)" << std::endl;
        failures += o.passed ? 0 : 1;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
              << fmt(total.seconds()) << " s" << std::endl;
    return failures == 0 ? 0 : 1;
}
