#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qedcascade/devices.hpp"
#include "qedcascade/signal.hpp"

namespace qedc {

// Photocurrent moments split as
//   <J(t) J(t')> = smooth(t, t') + shot_weight(t) * delta(t - t').
// On a grid the delta becomes 1/dt on the diagonal.
struct MomentSet {
    std::function<double(double)> mean;
    std::function<double(double)> shot_weight;
    std::function<double(double, double)> smooth;

    double correlation_on_grid(const TimeGrid& grid, std::size_t i, std::size_t j) const;
};

// Moments conditional on the detected flux w1(t) (photons/s).
MomentSet conditional_moments(const RealSignal& flux, const DetectorModel& det);

// Unconditional moments of the source -> amplifier -> detector chain, with the
// amplifier noise in its white limit: the cross term carries 2 T n0 n_a
// [1 + 4/gamma_a delta] and the noise term n_a^2 [1 + 2/gamma_a delta].
MomentSet unconditional_moments(const SourceModel& source, const std::optional<AmplifierModel>& amp,
                                const DetectorModel& det);

// Spectrum terms per q^2 at one frequency.
struct SpectrumTerms {
    double shot = 0.0;           // eta (T n0 + n_a)
    double source_excess = 0.0;  // eta^2 T^2 n2_w
    double cross = 0.0;          // eta^2 8 T n0 n_a / gamma_a
    double noise = 0.0;          // eta^2 2 n_a^2 / gamma_a
    double total() const noexcept { return shot + source_excess + cross + noise; }
};

SpectrumTerms spectrum_terms(double n0, double n2_omega, const std::optional<AmplifierModel>& amp,
                             const DetectorModel& det);

// Photocurrent fluctuation spectrum (two-sided density, zero-frequency
// constant dropped), in current^2 units. Requires every omega > 0.
SpectrumSeries analytic_spectrum(double n0, const std::function<double(double)>& n2_spectrum,
                                 const std::optional<AmplifierModel>& amp, const DetectorModel& det,
                                 std::span<const double> omegas);

// Coefficient of n0 in the spectrum (per q^2) when the excess source spectrum
// scales as n2_w = ratio * n0: eta T + eta^2 (T^2 ratio + 8 T n_a / gamma_a).
double spectrum_n0_coefficient(double ratio, const std::optional<AmplifierModel>& amp, const DetectorModel& det);

// Excess intensity spectrum of a source, i.e. the transform of n0^2(tau)
// with the constant n0^2 baseline removed. Moment sources are integrated
// numerically over |tau| <= window.
std::function<double(double)> source_excess_spectrum(const SourceModel& source, double window = 0.0);

struct PointMassIntensity {
    double integrated_flux;  // W, photons per window
};
struct ExponentialIntensity {
    double mean_integrated_flux;
};
struct EmpiricalIntensity {
    std::vector<double> samples;
};
using IntensityLaw = std::variant<PointMassIntensity, ExponentialIntensity, EmpiricalIntensity>;

struct CountDistribution {
    std::vector<double> probability;  // n = 0..n_max
    double tail = 0.0;

    double mean() const noexcept;
    double cdf(std::size_t n) const noexcept;
};

// P(n) = E_W[exp(-eta W) (eta W)^n / n!], truncated once the tail mass drops
// below `tail_tolerance`.
CountDistribution photocount_distribution(const IntensityLaw& law, const DetectorModel& det,
                                          double tail_tolerance = 1e-9);

struct CavesRow {
    double transfer;
    double caves;       // minimal 4 n_a / gamma_a
    double weak_raw;    // (T - 1) / 2
    double weak;        // weak_raw clamped at 0
};

std::vector<CavesRow> caves_boundary_curve(std::span<const double> transfers);

}  // namespace qedc
