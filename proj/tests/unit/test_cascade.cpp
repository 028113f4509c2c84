#include <catch_amalgamated.hpp>

#include <cmath>

#include "qedcascade/cascade.hpp"
#include "qedcascade/stats.hpp"

using namespace qedc;

namespace {

Scenario coherent(std::size_t bins, std::size_t n_traj, std::uint64_t seed) {
    return Scenario{CoherentSource{10.0, {}}, std::nullopt, DetectorModel{0.8, 1.0}, TimeGrid(0.0, 0.01, bins),
                    n_traj, seed};
}

Scenario thermal_amplified(std::size_t bins, std::size_t n_traj, ExecutionPlan plan) {
    return Scenario{ThermalSource{4.0, 1.0},
                    AmplifierModel{2.0, 5.0, 20.0},
                    DetectorModel{0.5, 1.0},
                    TimeGrid(0.0, 0.005, bins),
                    n_traj,
                    777,
                    plan};
}

}  // namespace

TEST_CASE("plan names round-trip") {
    for (auto p : {ExecutionPlan::Chain, ExecutionPlan::CompositeSource, ExecutionPlan::CompositeDetector}) {
        CHECK(parse_plan(to_string(p)) == p);
    }
    CHECK_FALSE(parse_plan("sequential").has_value());
}

TEST_CASE("structural scenario problems raise ScenarioError") {
    Scenario s = coherent(16, 0, 1);
    CHECK_THROWS_AS(check_scenario(s), ScenarioError);

    Scenario coarse = coherent(16, 1, 1);
    coarse.amplifier = AmplifierModel{2.0, 5.0, 20.0};
    CHECK_THROWS_AS(check_scenario(coarse), ScenarioError);
    coarse.amplifier->mode = NoiseMode::White;
    CHECK_NOTHROW(check_scenario(coarse));

    Scenario narrow = thermal_amplified(16, 1, ExecutionPlan::Chain);
    narrow.amplifier->gamma_per_s = 5.0;
    CHECK_THROWS_AS(check_scenario(narrow), ScenarioError);

    Scenario moment = coherent(16, 2, 1);
    moment.source = MomentSource{1.0, [](double) { return 0.0; }};
    CHECK_NOTHROW(check_scenario(moment));
    CHECK_THROWS_AS(run_chain(moment), ScenarioError);
}

TEST_CASE("noise-limit violations block runs unless overridden") {
    Scenario s = coherent(64, 2, 3);
    s.amplifier = AmplifierModel{3.0, 1.0, 40.0, NoiseMode::White};
    const auto chk = check_scenario(s);
    REQUIRE(chk.violations.size() == 1);
    CHECK(chk.violations[0].find("Caves bound") != std::string::npos);
    CHECK_THROWS_AS(run_chain(s), PhysicsViolation);
    RunOptions opts;
    opts.allow_unphysical = true;
    CHECK(run_chain(s, opts).records.size() == 2);

    s.amplifier->noise_flux_per_s = 20.0;  // exactly on the bound
    CHECK(check_scenario(s).violations.empty());
}

TEST_CASE("transient length follows the slowest correlation rate") {
    const Scenario s = thermal_amplified(16, 1, ExecutionPlan::Chain);
    CHECK(transient_bins(s) == static_cast<std::size_t>(std::ceil(5.0 / 1.0 / 0.005)));
    CHECK(transient_bins(coherent(16, 1, 1)) == 0);
}

TEST_CASE("trajectories are reproducible and independent of thread count") {
    const Scenario s = thermal_amplified(512, 150, ExecutionPlan::CompositeDetector);
    const auto a = simulate_trajectory(s, 17, true);
    const auto b = simulate_trajectory(s, 17, true);
    CHECK(a.record.counts == b.record.counts);
    CHECK(a.detected_field->samples().front() == b.detected_field->samples().front());
    CHECK(simulate_trajectory(s, 18, false).record.counts != a.record.counts);

    RunOptions one, many;
    many.threads = 4;
    const auto r1 = simulate_moments(s, one, MomentOptions{});
    const auto r4 = simulate_moments(s, many, MomentOptions{});
    CHECK(r1.mean_current == r4.mean_current);
    CHECK(r1.correlation == r4.correlation);
    CHECK(r1.totals == r4.totals);
    CHECK(run_chain(s, many).records[149].counts == simulate_trajectory(s, 149, false).record.counts);
}

TEST_CASE("coherent counts are Poisson") {
    const Scenario s = coherent(1000, 400, 5);
    const auto r = simulate_moments(s, {}, MomentOptions{});
    const double mu = 0.8 * 10.0 * 10.0;
    CHECK(std::abs(r.mean_total - mu) < 4 * r.mean_total_se);
    // Var of the sample variance for Poisson: ~ (2 mu^2 + mu) / n.
    CHECK(std::abs(r.var_total - mu) < 4 * std::sqrt((2 * mu * mu + mu) / 400.0));
    CHECK(r.mean_level == Catch::Approx(0.8 * 10.0).margin(4 * r.mean_level_se));
}

TEST_CASE("all execution plans agree on the detected photocurrent statistics") {
    const std::size_t bins = 4000;
    std::vector<std::vector<std::int64_t>> totals;
    for (auto plan : {ExecutionPlan::Chain, ExecutionPlan::CompositeSource, ExecutionPlan::CompositeDetector}) {
        Scenario s = thermal_amplified(bins, 600, plan);
        s.seed = 1000 + static_cast<std::uint64_t>(plan);
        const auto t = simulate_totals(s, {});
        double mean = 0.0;
        for (auto v : t) {
            mean += static_cast<double>(v);
        }
        mean /= static_cast<double>(t.size());
        const double expect = 0.5 * (2.0 * 4.0 + 5.0) * bins * 0.005;
        double var = 0.0;
        for (auto v : t) {
            var += (v - mean) * (v - mean);
        }
        const double se = std::sqrt(var / (t.size() - 1.0) / t.size());
        INFO(to_string(plan));
        CHECK(std::abs(mean - expect) < 4 * se);
        totals.push_back(t);
    }
    const double crit = ks_critical_value(0.001, 600, 600);
    CHECK(ks_distance(totals[0], totals[1]) < crit);
    CHECK(ks_distance(totals[0], totals[2]) < crit);
}

TEST_CASE("thermal photocurrent correlation shows bunching") {
    Scenario s{ThermalSource{5.0, 1.0}, std::nullopt, DetectorModel{0.8, 1.0}, TimeGrid(0.0, 0.05, 2200), 300, 9};
    MomentOptions mo;
    mo.max_lag_bins = 20;
    mo.discard_bins = transient_bins(s);
    const auto r = simulate_moments(s, {}, mo);
    const double level = 0.8 * 5.0;
    for (std::size_t k = 1; k < r.lag.size(); k += 4) {
        const double expect = level * level * (1.0 + std::exp(-r.lag[k]));
        INFO("lag " << r.lag[k]);
        CHECK(std::abs(r.correlation[k] - expect) < 4 * r.correlation_se[k]);
    }
}

TEST_CASE("coherent spectrum is flat at the shot level") {
    const Scenario s = coherent(4096, 64, 21);
    const auto spec = simulate_spectrum(s, {}, 256, 0);
    // eta n0 q^2 per unit of two-sided density.
    double sum = 0.0, var = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 1; k + 1 < spec.size(); ++k) {
        sum += spec.value[k];
        var += (*spec.ci_halfwidth)[k] * (*spec.ci_halfwidth)[k];
        ++n;
    }
    CHECK(std::abs(sum / n - 8.0) < 4 * std::sqrt(var) / n);
    CHECK_THROWS_AS(SpectrumAccumulator(s.grid, 1.0, 2048, 0), ScenarioError);
}

TEST_CASE("moment reports need at least two trajectories") {
    const Scenario s = coherent(64, 1, 2);
    CHECK_THROWS(simulate_moments(s, {}, MomentOptions{}));
}

TEST_CASE("non-stationary mode reports a correlation matrix") {
    Scenario s = coherent(128, 50, 4);
    std::get<CoherentSource>(s.source).modulation = [](double t) { return t < 0.64 ? 1.0 : 0.0; };
    MomentOptions mo;
    mo.stationary = false;
    mo.matrix_bins = 8;
    const auto r = simulate_moments(s, {}, mo);
    REQUIRE(r.matrix_time.size() == 8);
    REQUIRE(r.correlation_matrix.size() == 64);
    // Second half is dark: no counts and no correlation.
    CHECK(r.correlation_matrix[7 * 8 + 7] == 0.0);
    CHECK(r.mean_current.back() == 0.0);
    CHECK(r.correlation_matrix[0] > 0.0);
}
