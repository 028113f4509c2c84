#include <catch_amalgamated.hpp>

#include <cmath>

#include <boost/math/distributions/poisson.hpp>

#include "qedcascade/analytics.hpp"
#include "qedcascade/stats.hpp"

using namespace qedc;

TEST_CASE("spectrum terms for a hand-worked chain") {
    // T = 2, n_a = 0.5, gamma_a = 4, eta = 0.5, n0 = 3, n2 = 1.
    const AmplifierModel amp{2.0, 0.5, 4.0};
    const DetectorModel det{0.5, 1.0};
    const auto s = spectrum_terms(3.0, 1.0, amp, det);
    CHECK(s.shot == Catch::Approx(0.5 * 6.5));
    CHECK(s.source_excess == Catch::Approx(0.25 * 4.0));
    CHECK(s.cross == Catch::Approx(0.25 * 8.0 * 2.0 * 3.0 * 0.5 / 4.0));
    CHECK(s.noise == Catch::Approx(0.25 * 2.0 * 0.25 / 4.0));
    CHECK(s.total() == Catch::Approx(3.25 + 1.0 + 1.5 + 0.03125));
    const auto bare = spectrum_terms(3.0, 1.0, std::nullopt, det);
    CHECK(bare.cross == 0.0);
    CHECK(bare.total() == Catch::Approx(1.5 + 0.25));
}

TEST_CASE("n0 coefficient vanishes on the noise-limit boundary") {
    const DetectorModel det{1.0, 1.0};
    for (double t : {1.5, 2.0, 4.0, 9.0}) {
        const double gamma = 3.0;
        const double na = (t - 1.0) * gamma / 8.0;
        const AmplifierModel amp{t, na, gamma};
        CHECK(std::abs(spectrum_n0_coefficient(-1.0, amp, det)) < 1e-12);
        // Remaining spectrum: n_a (1 + 2 n_a / gamma_a).
        CHECK(spectrum_terms(0.0, 0.0, amp, det).total() == Catch::Approx(na * (1 + 2 * na / gamma)));
        CHECK(spectrum_n0_coefficient(-0.9, amp, det) > 0.0);
    }
}

TEST_CASE("analytic spectrum of thermal light through a detector") {
    const ThermalSource src{5.0, 1.0};
    const DetectorModel det{0.8, 0.5};
    const std::vector<double> w{0.25, 1.0, 4.0};
    const auto s = analytic_spectrum(5.0, source_excess_spectrum(src), std::nullopt, det, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double bunching = 25.0 * 2.0 / (1.0 + w[i] * w[i]);
        CHECK(s.value[i] == Catch::Approx(0.25 * (0.8 * 5.0 + 0.64 * bunching)));
    }
    CHECK_THROWS_AS(analytic_spectrum(5.0, {}, std::nullopt, det, std::vector<double>{0.0}), std::invalid_argument);
}

TEST_CASE("unconditional moments of coherent light are Poissonian") {
    const DetectorModel det{0.5, 2.0};
    const auto m = unconditional_moments(CoherentSource{10.0, {}}, std::nullopt, det);
    CHECK(m.mean(0.3) == Catch::Approx(10.0));
    CHECK(m.shot_weight(0.3) == Catch::Approx(20.0));
    CHECK(m.smooth(0.0, 1.0) == Catch::Approx(100.0));
    const TimeGrid g(0.0, 0.1, 4);
    CHECK(m.correlation_on_grid(g, 1, 1) == Catch::Approx(100.0 + 20.0 / 0.1));
    CHECK(m.correlation_on_grid(g, 1, 2) == Catch::Approx(100.0));
}

TEST_CASE("amplified unconditional moments follow the white-noise limit") {
    const double T = 2.0, na = 0.5, gamma = 4.0, n0 = 3.0, eta = 0.5;
    const auto m = unconditional_moments(CoherentSource{n0, {}}, AmplifierModel{T, na, gamma}, DetectorModel{eta, 1.0});
    CHECK(m.mean(0.0) == Catch::Approx(eta * (T * n0 + na)));
    const double shot = eta * (T * n0 + na) + eta * eta * (2 * T * n0 * na * 4 / gamma + na * na * 2 / gamma);
    CHECK(m.shot_weight(0.0) == Catch::Approx(shot));
    CHECK(m.smooth(0.0, 2.0) == Catch::Approx(eta * eta * (T * T * n0 * n0 + 2 * T * n0 * na + na * na)));
}

TEST_CASE("conditional moments follow the flux") {
    const TimeGrid g(0.0, 1.0, 3);
    const RealSignal flux(g, {1.0, 2.0, 4.0});
    const auto m = conditional_moments(flux, DetectorModel{0.5, 3.0});
    CHECK(m.mean(1.0) == Catch::Approx(3.0));
    CHECK(m.shot_weight(2.0) == Catch::Approx(18.0));
    CHECK(m.smooth(0.0, 2.0) == Catch::Approx(9.0 * 0.25 * 4.0));
    CHECK_THROWS(conditional_moments(RealSignal(g, {1.0, -1.0, 0.0}), DetectorModel{}));
}

TEST_CASE("photocount distribution of a point mass is Poisson") {
    const DetectorModel det{0.7, 1.0};
    const auto d = photocount_distribution(PointMassIntensity{12.0}, det);
    const boost::math::poisson_distribution<double> ref(0.7 * 12.0);
    for (std::size_t n = 0; n < d.probability.size(); ++n) {
        CHECK(std::abs(d.probability[n] - boost::math::pdf(ref, static_cast<double>(n))) < 1e-12);
    }
    CHECK(d.tail < 1e-9);
    CHECK(d.mean() == Catch::Approx(8.4).epsilon(1e-8));
}

TEST_CASE("photocount distribution of an exponential intensity is geometric") {
    const DetectorModel det{0.5, 1.0};
    const auto d = photocount_distribution(ExponentialIntensity{6.0}, det);
    const double m = 3.0;
    for (std::size_t n = 0; n < d.probability.size(); ++n) {
        CHECK(std::abs(d.probability[n] - std::pow(m, n) / std::pow(1 + m, n + 1.0)) < 1e-12);
    }
    CHECK(d.cdf(d.probability.size()) + d.tail == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empirical intensity laws mix Poisson distributions") {
    const DetectorModel det{1.0, 1.0};
    const auto d = photocount_distribution(EmpiricalIntensity{{1.0, 3.0}}, det);
    const boost::math::poisson_distribution<double> p1(1.0), p3(3.0);
    for (std::size_t n = 0; n < 6; ++n) {
        const double expect = 0.5 * (boost::math::pdf(p1, double(n)) + boost::math::pdf(p3, double(n)));
        CHECK(std::abs(d.probability[n] - expect) < 1e-12);
    }
    CHECK_THROWS(photocount_distribution(EmpiricalIntensity{{}}, det));
}

TEST_CASE("boundary curve table") {
    const std::vector<double> t{0.5, 1.0, 2.0, 3.0};
    const auto rows = caves_boundary_curve(t);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].caves == 0.0);
    CHECK(rows[0].weak_raw == -0.25);
    CHECK(rows[0].weak == 0.0);
    CHECK(rows[2].caves == 1.0);
    CHECK(rows[3].weak == 1.0);
    CHECK_THROWS(caves_boundary_curve(std::vector<double>{0.0}));
}

TEST_CASE("KS distances and critical values") {
    const std::vector<std::int64_t> s{0, 0, 1, 1};
    // Empirical CDF 0.5 at 0, 1 at 1; model CDF 0.25 at 0, 1 at 1.
    CHECK(ks_distance(s, [](std::int64_t n) { return n <= 0 ? 0.25 : 1.0; }) == Catch::Approx(0.25));
    const std::vector<std::int64_t> b{1, 1, 1, 1};
    CHECK(ks_distance(s, b) == Catch::Approx(0.5));
    CHECK(ks_critical_value(0.05, 100) == Catch::Approx(1.3581 / 10.0).epsilon(1e-3));
    CHECK(ks_critical_value(0.05, 100, 100) == Catch::Approx(1.3581 * std::sqrt(0.02)).epsilon(1e-3));
}
