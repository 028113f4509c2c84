#include "qedcascade/devices.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qedc {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate_source(const SourceModel& source) {
    std::visit(overloaded{
                   [](const CoherentSource& s) {
                       if (!(s.flux_per_s >= 0.0) || !std::isfinite(s.flux_per_s)) {
                           throw std::invalid_argument("coherent source: flux must be finite and >= 0");
                       }
                   },
                   [](const ThermalSource& s) {
                       if (!(s.mean_flux_per_s >= 0.0) || !std::isfinite(s.mean_flux_per_s)) {
                           throw std::invalid_argument("thermal source: mean flux must be finite and >= 0");
                       }
                       if (!(s.coherence_rate_per_s > 0.0) || !std::isfinite(s.coherence_rate_per_s)) {
                           throw std::invalid_argument("thermal source: coherence rate must be positive");
                       }
                   },
                   [](const MomentSource& s) {
                       if (!(s.mean_flux_per_s >= 0.0) || !std::isfinite(s.mean_flux_per_s)) {
                           throw std::invalid_argument("moment source: mean flux must be finite and >= 0");
                       }
                       if (!s.excess_corr) {
                           throw std::invalid_argument("moment source: missing excess correlation");
                       }
                   },
               },
               source);
}

bool is_sampleable(const SourceModel& source) noexcept { return !std::holds_alternative<MomentSource>(source); }

double mean_flux(const SourceModel& source) {
    return std::visit(overloaded{
                          [](const CoherentSource& s) {
                              if (!s.stationary()) {
                                  throw std::invalid_argument("mean_flux: modulated coherent source is not stationary");
                              }
                              return s.flux_per_s;
                          },
                          [](const ThermalSource& s) { return s.mean_flux_per_s; },
                          [](const MomentSource& s) { return s.mean_flux_per_s; },
                      },
                      source);
}

void validate_amplifier_model(const AmplifierModel& amp) {
    if (!(amp.transfer > 0.0) || !std::isfinite(amp.transfer)) {
        throw std::invalid_argument("amplifier: transfer must be positive");
    }
    if (!(amp.noise_flux_per_s >= 0.0) || !std::isfinite(amp.noise_flux_per_s)) {
        throw std::invalid_argument("amplifier: added-noise flux must be >= 0");
    }
    if (!(amp.gamma_per_s > 0.0) || !std::isfinite(amp.gamma_per_s)) {
        throw std::invalid_argument("amplifier: noise bandwidth must be positive");
    }
}

void validate_detector(const DetectorModel& det) {
    if (!(det.efficiency > 0.0 && det.efficiency <= 1.0)) {
        throw std::invalid_argument("detector: efficiency must lie in (0, 1]");
    }
    if (!(det.pulse_charge > 0.0) || !std::isfinite(det.pulse_charge)) {
        throw std::invalid_argument("detector: pulse charge must be positive");
    }
}

std::int64_t PhotocurrentRecord::total() const noexcept {
    std::int64_t s = 0;
    for (auto c : counts) {
        s += c;
    }
    return s;
}

RealSignal PhotocurrentRecord::current(double pulse_charge) const {
    std::vector<double> j(counts.size());
    const double scale = pulse_charge / grid.dt();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        j[i] = scale * counts[i];
    }
    return RealSignal(grid, std::move(j));
}

OuProcess::OuProcess(double variance, double rate, double dt)
    : sigma_(std::sqrt(variance)), rho_(std::exp(-0.5 * rate * dt)), innovation_(sigma_ * std::sqrt(-std::expm1(-rate * dt))) {
    if (!(variance >= 0.0) || !(rate > 0.0) || !(dt > 0.0)) {
        throw std::invalid_argument("OuProcess: invalid parameters");
    }
}

Complex OuProcess::start(RandomStream& rng) {
    value_ = sigma_ * rng.circular_normal();
    return value_;
}

Complex OuProcess::step(RandomStream& rng) {
    value_ = rho_ * value_ + innovation_ * rng.circular_normal();
    return value_;
}

ComplexEnvelope sample_source(const SourceModel& source, const TimeGrid& grid, RandomStream& rng) {
    validate_source(source);
    return std::visit(overloaded{
                          [&](const CoherentSource& s) {
                              std::vector<Complex> e(grid.size());
                              for (std::size_t i = 0; i < e.size(); ++i) {
                                  const double w = s.flux(grid.time(i));
                                  if (!(w >= 0.0)) {
                                      throw std::invalid_argument("coherent source: negative flux envelope");
                                  }
                                  e[i] = std::sqrt(w);
                              }
                              return ComplexEnvelope(grid, std::move(e));
                          },
                          [&](const ThermalSource& s) {
                              OuProcess ou(s.mean_flux_per_s, s.coherence_rate_per_s, grid.dt());
                              std::vector<Complex> e(grid.size());
                              e[0] = ou.start(rng);
                              for (std::size_t i = 1; i < e.size(); ++i) {
                                  e[i] = ou.step(rng);
                              }
                              return ComplexEnvelope(grid, std::move(e));
                          },
                          [](const MomentSource&) -> ComplexEnvelope {
                              throw std::invalid_argument(
                                  "sample_source: moment-specified sources cannot be sampled; use the analytic moments");
                          },
                      },
                      source);
}

ComplexEnvelope amplify(const ComplexEnvelope& input, const AmplifierModel& amp, RandomStream& rng) {
    validate_amplifier_model(amp);
    const TimeGrid& grid = input.grid();
    if (amp.mode == NoiseMode::OrnsteinUhlenbeck && amp.gamma_per_s * grid.dt() > kMaxGammaDt) {
        throw std::invalid_argument("amplify: bin width too coarse for the noise bandwidth (need gamma_a * dt <= " +
                                    std::to_string(kMaxGammaDt) + ")");
    }
    const double gain = std::sqrt(amp.transfer);
    std::vector<Complex> out(grid.size());
    if (amp.noise_flux_per_s == 0.0) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = gain * input[i];
        }
        return ComplexEnvelope(grid, std::move(out));
    }
    OuProcess noise(amp.noise_flux_per_s, amp.gamma_per_s, grid.dt());
    out[0] = gain * input[0] + noise.start(rng);
    for (std::size_t i = 1; i < out.size(); ++i) {
        out[i] = gain * input[i] + noise.step(rng);
    }
    return ComplexEnvelope(grid, std::move(out));
}

PhotocurrentRecord detect(const ComplexEnvelope& field, const DetectorModel& det, RandomStream& rng) {
    validate_detector(det);
    const TimeGrid& grid = field.grid();
    const double scale = det.efficiency * grid.dt();
    PhotocurrentRecord rec{grid, std::vector<std::int32_t>(grid.size(), 0)};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double mean = scale * std::norm(field[i]);
        if (!(mean >= 0.0)) {
            throw std::invalid_argument("detect: negative photon flux");
        }
        rec.counts[i] = static_cast<std::int32_t>(rng.poisson(mean));
    }
    return rec;
}

double max_bin_mean(const ComplexEnvelope& field, const DetectorModel& det) {
    double worst = 0.0;
    for (const auto& e : field.samples()) {
        worst = std::max(worst, std::norm(e));
    }
    return det.efficiency * field.grid().dt() * worst;
}

double caves_bound(double transfer) noexcept { return 0.5 * ((transfer - 1.0) + std::abs(transfer - 1.0)); }

double weak_bound(double transfer) noexcept { return 0.5 * (transfer - 1.0); }

AmplifierLimitReport validate_amplifier(const AmplifierModel& amp) {
    AmplifierLimitReport r;
    r.noise_density = amp.noise_density();
    r.caves_bound = caves_bound(amp.transfer);
    r.weak_bound = weak_bound(amp.transfer);
    r.caves_margin = r.noise_density - r.caves_bound;
    r.weak_margin = r.noise_density - r.weak_bound;
    r.caves_ok = r.caves_margin >= 0.0;
    r.weak_ok = r.weak_margin >= 0.0;
    return r;
}

namespace {

// Adaptive Gauss-Kronrod with an absolute error target, so chunks where the
// integrand has decayed to nothing are accepted at once.
template <class F>
double integrate_abs(const F& f, double a, double b, double tol, int depth) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
    if (err <= tol || depth == 0) {
        return v;
    }
    const double m = 0.5 * (a + b);
    return integrate_abs(f, a, m, 0.5 * tol, depth - 1) + integrate_abs(f, m, b, 0.5 * tol, depth - 1);
}

}  // namespace

double excess_spectrum(const MomentSource& source, double omega, double window) {
    const auto& f = source.excess_corr;
    // Integrate one oscillation period (or less) at a time.
    const double period = omega > 0.0 ? 2.0 * std::numbers::pi / omega : window;
    const auto chunks = static_cast<std::size_t>(std::max(1.0, std::ceil(window / period)));
    const double h = window / static_cast<double>(chunks);
    double scale = 0.0;
    for (std::size_t c = 0; c <= chunks; ++c) {
        scale = std::max(scale, std::abs(f(h * static_cast<double>(c))));
    }
    const double tol = 1e-14 * std::max(scale, 1e-300) * h;
    double total = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        const double a = h * static_cast<double>(c);
        total += integrate_abs([&](double tau) { return std::cos(omega * tau) * f(tau); }, a, a + h, tol, 12);
    }
    return 2.0 * total;
}

MomentSourceReport validate_moment_source(const MomentSource& source, const TimeGrid& grid, double tolerance) {
    validate_source(source);
    const auto& f = source.excess_corr;
    double scale = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        scale = std::max(scale, std::abs(f(static_cast<double>(k) * grid.dt())));
    }
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double tau = static_cast<double>(k) * grid.dt();
        if (std::abs(f(tau) - f(-tau)) > 1e-12 * std::max(scale, 1e-300)) {
            throw std::invalid_argument("validate_moment_source: excess correlation is not symmetric in tau");
        }
    }
    MomentSourceReport r;
    const double window = grid.duration();
    const std::size_t bins = grid.size() / 2 + 1;
    r.omega.resize(bins);
    r.n2_omega.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        r.omega[k] = grid.dft_omega(k);
        r.n2_omega[k] = excess_spectrum(source, r.omega[k], window);
    }
    const auto it = std::min_element(r.n2_omega.begin(), r.n2_omega.end());
    r.min_n2_omega = *it;
    r.omega_at_min = r.omega[static_cast<std::size_t>(it - r.n2_omega.begin())];
    const double n0 = source.mean_flux_per_s;
    r.margin = r.min_n2_omega + n0;
    r.ok = r.margin >= -tolerance * std::max(n0, 1e-300);
    return r;
}

}  // namespace qedc
