#include "qedcascade/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qedc {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct ChainParams {
    double transfer = 1.0;
    double noise = 0.0;
    double gamma = 1.0;
};

ChainParams chain_params(const std::optional<AmplifierModel>& amp) {
    if (!amp) {
        return {};
    }
    validate_amplifier_model(*amp);
    return {amp->transfer, amp->noise_flux_per_s, amp->gamma_per_s};
}

double log_poisson(double mu, std::size_t n) {
    if (mu == 0.0) {
        return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    const double dn = static_cast<double>(n);
    return -mu + dn * std::log(mu) - std::lgamma(dn + 1.0);
}

// Accumulates the pmf of Poisson(mu) into `acc` (grown as needed).
void add_poisson(double mu, double weight, std::vector<double>& acc) {
    const double spread = std::sqrt(mu);
    const auto top = static_cast<std::size_t>(std::ceil(mu + 14.0 * spread + 40.0));
    if (acc.size() <= top) {
        acc.resize(top + 1, 0.0);
    }
    if (mu < 600.0) {
        double p = std::exp(-mu);
        acc[0] += weight * p;
        for (std::size_t n = 1; n <= top; ++n) {
            p *= mu / static_cast<double>(n);
            acc[n] += weight * p;
        }
    } else {
        for (std::size_t n = 0; n <= top; ++n) {
            acc[n] += weight * std::exp(log_poisson(mu, n));
        }
    }
}

CountDistribution finish(std::vector<double> p, double tail_tolerance) {
    // Drop trailing entries while the tail stays below tolerance.
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    double tail = std::max(0.0, 1.0 - total);
    while (p.size() > 1 && tail + p.back() < tail_tolerance && p.back() < tail_tolerance) {
        tail += p.back();
        p.pop_back();
    }
    return {std::move(p), tail};
}

double mandel_exponential(double mean_counts, std::size_t n) {
    using boost::math::quadrature::gauss_kronrod;
    // x = eta W is exponential with mean `mean_counts`.
    const double rate = 1.0 + 1.0 / mean_counts;
    const double dn = static_cast<double>(n);
    const double log_norm = -std::log(mean_counts) - std::lgamma(dn + 1.0);
    auto integrand = [&](double x) {
        if (x <= 0.0) {
            return n == 0 ? std::exp(log_norm) : 0.0;
        }
        return std::exp(log_norm - rate * x + dn * std::log(x));
    };
    const double peak = dn / rate;
    const double width = std::sqrt(dn + 1.0) / rate;
    const double split = peak + 10.0 * width + 10.0 / rate;
    const double inner = gauss_kronrod<double, 61>::integrate(integrand, 0.0, split, 15, 1e-14);
    const double outer = gauss_kronrod<double, 61>::integrate(integrand, split, std::numeric_limits<double>::infinity(),
                                                              15, 1e-14);
    return inner + outer;
}

}  // namespace

double MomentSet::correlation_on_grid(const TimeGrid& grid, std::size_t i, std::size_t j) const {
    const double ti = grid.time(i);
    const double tj = grid.time(j);
    double c = smooth(ti, tj);
    if (i == j) {
        c += shot_weight(ti) / grid.dt();
    }
    return c;
}

MomentSet conditional_moments(const RealSignal& flux, const DetectorModel& det) {
    validate_detector(det);
    for (double w : flux.samples()) {
        if (w < 0.0) {
            throw std::invalid_argument("conditional_moments: negative flux");
        }
    }
    auto samples = std::make_shared<std::vector<double>>(flux.samples().begin(), flux.samples().end());
    const TimeGrid grid = flux.grid();
    auto at = [samples, grid](double t) {
        const double pos = std::round((t - grid.t0()) / grid.dt());
        const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(grid.size() - 1)));
        return (*samples)[idx];
    };
    const double q = det.pulse_charge;
    const double eta = det.efficiency;
    MomentSet m;
    m.mean = [=](double t) { return q * eta * at(t); };
    m.shot_weight = [=](double t) { return q * q * eta * at(t); };
    m.smooth = [=](double t, double tp) { return q * q * eta * eta * at(t) * at(tp); };
    return m;
}

MomentSet unconditional_moments(const SourceModel& source, const std::optional<AmplifierModel>& amp,
                                const DetectorModel& det) {
    validate_source(source);
    validate_detector(det);
    const auto [T, na, gamma] = chain_params(amp);
    const double q = det.pulse_charge;
    const double eta = det.efficiency;
    // Source intensity flux n0(t) and full two-time intensity moment n0^2(t, t').
    std::function<double(double)> n0;
    std::function<double(double, double)> n2;
    std::visit(overloaded{
                   [&](const CoherentSource& s) {
                       n0 = [s](double t) { return s.flux(t); };
                       n2 = [s](double t, double tp) { return s.flux(t) * s.flux(tp); };
                   },
                   [&](const ThermalSource& s) {
                       const double mean = s.mean_flux_per_s;
                       const double rate = s.coherence_rate_per_s;
                       n0 = [mean](double) { return mean; };
                       n2 = [mean, rate](double t, double tp) {
                           return mean * mean * (1.0 + std::exp(-rate * std::abs(t - tp)));
                       };
                   },
                   [&](const MomentSource& s) {
                       const double mean = s.mean_flux_per_s;
                       auto excess = s.excess_corr;
                       n0 = [mean](double) { return mean; };
                       n2 = [mean, excess](double t, double tp) { return mean * mean + excess(t - tp); };
                   },
               },
               source);
    const bool amplified = amp.has_value();
    MomentSet m;
    m.mean = [=](double t) { return q * eta * (T * n0(t) + na); };
    m.shot_weight = [=](double t) {
        double w = eta * (T * n0(t) + na);
        if (amplified) {
            w += eta * eta * (2.0 * T * n0(t) * na * 4.0 / gamma + na * na * 2.0 / gamma);
        }
        return q * q * w;
    };
    m.smooth = [=](double t, double tp) {
        const double cross = T * na * (n0(t) + n0(tp));
        return q * q * eta * eta * (T * T * n2(t, tp) + cross + na * na);
    };
    return m;
}

SpectrumTerms spectrum_terms(double n0, double n2_omega, const std::optional<AmplifierModel>& amp,
                             const DetectorModel& det) {
    validate_detector(det);
    const auto [T, na, gamma] = chain_params(amp);
    const double eta = det.efficiency;
    SpectrumTerms s;
    s.shot = eta * (T * n0 + na);
    s.source_excess = eta * eta * T * T * n2_omega;
    if (amp) {
        s.cross = eta * eta * 8.0 * T * n0 * na / gamma;
        s.noise = eta * eta * 2.0 * na * na / gamma;
    }
    return s;
}

SpectrumSeries analytic_spectrum(double n0, const std::function<double(double)>& n2_spectrum,
                                 const std::optional<AmplifierModel>& amp, const DetectorModel& det,
                                 std::span<const double> omegas) {
    const double q2 = det.pulse_charge * det.pulse_charge;
    std::vector<double> w(omegas.begin(), omegas.end());
    std::vector<double> v(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) {
            throw std::invalid_argument("analytic_spectrum: only omega > 0 is defined (DC term dropped)");
        }
        v[i] = q2 * spectrum_terms(n0, n2_spectrum ? n2_spectrum(w[i]) : 0.0, amp, det).total();
    }
    return SpectrumSeries(std::move(w), std::move(v));
}

double spectrum_n0_coefficient(double ratio, const std::optional<AmplifierModel>& amp, const DetectorModel& det) {
    const auto [T, na, gamma] = chain_params(amp);
    const double eta = det.efficiency;
    double c = eta * T + eta * eta * T * T * ratio;
    if (amp) {
        c += eta * eta * 8.0 * T * na / gamma;
    }
    return c;
}

std::function<double(double)> source_excess_spectrum(const SourceModel& source, double window) {
    validate_source(source);
    return std::visit(overloaded{
                          [](const CoherentSource&) -> std::function<double(double)> {
                              return [](double) { return 0.0; };
                          },
                          [](const ThermalSource& s) -> std::function<double(double)> {
                              const double a = s.mean_flux_per_s * s.mean_flux_per_s;
                              const double g = s.coherence_rate_per_s;
                              return [a, g](double w) { return a * 2.0 * g / (g * g + w * w); };
                          },
                          [window](const MomentSource& s) -> std::function<double(double)> {
                              if (!(window > 0.0)) {
                                  throw std::invalid_argument("source_excess_spectrum: moment sources need a window");
                              }
                              return [s, window](double w) { return excess_spectrum(s, w, window); };
                          },
                      },
                      source);
}

double CountDistribution::mean() const noexcept {
    double m = 0.0;
    for (std::size_t n = 0; n < probability.size(); ++n) {
        m += static_cast<double>(n) * probability[n];
    }
    return m;
}

double CountDistribution::cdf(std::size_t n) const noexcept {
    double c = 0.0;
    for (std::size_t k = 0; k <= n && k < probability.size(); ++k) {
        c += probability[k];
    }
    return c;
}

CountDistribution photocount_distribution(const IntensityLaw& law, const DetectorModel& det, double tail_tolerance) {
    validate_detector(det);
    const double eta = det.efficiency;
    return std::visit(
        overloaded{
            [&](const PointMassIntensity& p) {
                if (!(p.integrated_flux >= 0.0)) {
                    throw std::invalid_argument("photocount_distribution: negative integrated flux");
                }
                std::vector<double> acc;
                add_poisson(eta * p.integrated_flux, 1.0, acc);
                return finish(std::move(acc), tail_tolerance);
            },
            [&](const ExponentialIntensity& e) {
                if (!(e.mean_integrated_flux > 0.0)) {
                    throw std::invalid_argument("photocount_distribution: exponential law needs a positive mean");
                }
                const double mean_counts = eta * e.mean_integrated_flux;
                std::vector<double> p;
                double total = 0.0;
                for (std::size_t n = 0; n < 10'000'000; ++n) {
                    const double pn = mandel_exponential(mean_counts, n);
                    p.push_back(pn);
                    total += pn;
                    if (static_cast<double>(n) > mean_counts && 1.0 - total < tail_tolerance) {
                        break;
                    }
                }
                return CountDistribution{std::move(p), std::max(0.0, 1.0 - total)};
            },
            [&](const EmpiricalIntensity& e) {
                if (e.samples.empty()) {
                    throw std::invalid_argument("photocount_distribution: empty intensity sample");
                }
                std::vector<double> acc;
                const double weight = 1.0 / static_cast<double>(e.samples.size());
                for (double w : e.samples) {
                    if (!(w >= 0.0)) {
                        throw std::invalid_argument("photocount_distribution: negative integrated flux sample");
                    }
                    add_poisson(eta * w, weight, acc);
                }
                return finish(std::move(acc), tail_tolerance);
            },
        },
        law);
}

std::vector<CavesRow> caves_boundary_curve(std::span<const double> transfers) {
    std::vector<CavesRow> rows;
    rows.reserve(transfers.size());
    for (double t : transfers) {
        if (!(t > 0.0)) {
            throw std::invalid_argument("caves_boundary_curve: transfer must be positive");
        }
        CavesRow r{t, caves_bound(t), weak_bound(t), std::max(0.0, weak_bound(t))};
        if (r.caves < r.weak_raw || (t > 1.0 && !(r.caves > r.weak_raw))) {
            throw std::logic_error("caves_boundary_curve: Caves bound must dominate the weak bound");
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace qedc
