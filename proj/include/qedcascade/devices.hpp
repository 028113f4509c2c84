#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "qedcascade/rng.hpp"
#include "qedcascade/signal.hpp"

namespace qedc {

// All optical intensities are photon fluxes w = |E|^2 in photons/s; the
// detector's chi |E|^2 becomes efficiency * w.

// Deterministic coherent field. flux(t) = flux_per_s * modulation(t); no
// modulation means a stationary source.
struct CoherentSource {
    double flux_per_s = 0.0;
    std::function<double(double)> modulation;

    double flux(double t) const { return modulation ? flux_per_s * modulation(t) : flux_per_s; }
    bool stationary() const noexcept { return !modulation; }
};

// Chaotic light: complex OU field with <E*(t)E(t')> = n0 exp(-gamma_c |t-t'| / 2).
struct ThermalSource {
    double mean_flux_per_s = 0.0;
    double coherence_rate_per_s = 1.0;
};

// Source known only through its moments. excess_corr(tau) is the intensity
// correlation n0^2(tau) with the constant n0^2 baseline removed; it may be
// negative (sub-Poissonian light) and the source cannot be sampled.
struct MomentSource {
    double mean_flux_per_s = 0.0;
    std::function<double(double)> excess_corr;
};

using SourceModel = std::variant<CoherentSource, ThermalSource, MomentSource>;

void validate_source(const SourceModel& source);
bool is_sampleable(const SourceModel& source) noexcept;
double mean_flux(const SourceModel& source);

enum class NoiseMode {
    // Exact OU stepping; requires dt <= 0.1 / gamma_a.
    OrnsteinUhlenbeck,
    // Same exact update with the bin-width check waived (coarse grids where
    // the noise is effectively white on the bin scale).
    White,
};

struct AmplifierModel {
    double transfer = 1.0;         // T_a
    double noise_flux_per_s = 0.0; // n_a
    double gamma_per_s = 1.0;      // gamma_a
    NoiseMode mode = NoiseMode::OrnsteinUhlenbeck;

    // 4 n_a / gamma_a: low-frequency spectral density of the added noise.
    double noise_density() const noexcept { return 4.0 * noise_flux_per_s / gamma_per_s; }
};

void validate_amplifier_model(const AmplifierModel& amp);

// Bin-width precondition for OU stepping.
inline constexpr double kMaxGammaDt = 0.1;

struct DetectorModel {
    double efficiency = 1.0;  // eta in (0, 1]
    double pulse_charge = 1.0;
};

void validate_detector(const DetectorModel& det);

struct PhotocurrentRecord {
    TimeGrid grid;
    std::vector<std::int32_t> counts;

    std::int64_t total() const noexcept;
    // J(t) = q * counts / dt
    RealSignal current(double pulse_charge) const;
};

// Stationary complex OU process with <a*(t) a(t')> = variance * exp(-rate |t-t'| / 2),
// advanced by the exact one-step update.
class OuProcess {
public:
    OuProcess(double variance, double rate, double dt);

    Complex start(RandomStream& rng);
    Complex step(RandomStream& rng);
    Complex value() const noexcept { return value_; }

private:
    double sigma_;
    double rho_;
    double innovation_;
    Complex value_{0.0, 0.0};
};

ComplexEnvelope sample_source(const SourceModel& source, const TimeGrid& grid, RandomStream& rng);

// E1(t) = sqrt(T_a) E0(t) + a(t), with a(t) drawn from `rng` independently of E0.
ComplexEnvelope amplify(const ComplexEnvelope& input, const AmplifierModel& amp, RandomStream& rng);

// Independent Poisson counts per bin with mean efficiency * |E|^2 * dt.
PhotocurrentRecord detect(const ComplexEnvelope& field, const DetectorModel& det, RandomStream& rng);

// Largest per-bin Poisson mean; detection flags grids where it exceeds 0.1.
double max_bin_mean(const ComplexEnvelope& field, const DetectorModel& det);
inline constexpr double kCoarseBinMean = 0.1;

struct AmplifierLimitReport {
    double noise_density = 0.0;  // 4 n_a / gamma_a
    double caves_bound = 0.0;    // [(T-1) + |T-1|] / 2
    double weak_bound = 0.0;     // (T-1) / 2
    double caves_margin = 0.0;
    double weak_margin = 0.0;
    bool caves_ok = false;
    bool weak_ok = false;
};

AmplifierLimitReport validate_amplifier(const AmplifierModel& amp);

double caves_bound(double transfer) noexcept;
double weak_bound(double transfer) noexcept;

// Fourier transform of the excess intensity correlation,
// 2 * int_0^window cos(w tau) excess_corr(tau) dtau.
double excess_spectrum(const MomentSource& source, double omega, double window);

struct MomentSourceReport {
    std::vector<double> omega;
    std::vector<double> n2_omega;
    double min_n2_omega = 0.0;
    double omega_at_min = 0.0;
    double margin = 0.0;  // min_n2_omega + n0
    bool ok = false;
};

// Evaluates the excess spectrum on the grid's DFT frequencies and checks it
// never drops below -n0. `tolerance` is relative to n0.
MomentSourceReport validate_moment_source(const MomentSource& source, const TimeGrid& grid,
                                          double tolerance = 1e-9);

}  // namespace qedc
