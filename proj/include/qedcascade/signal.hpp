#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qedc {

using Complex = std::complex<double>;

// Uniform sampling of the time axis: bin i sits at t0 + i*dt.
class TimeGrid {
public:
    TimeGrid(double t0, double dt, std::size_t n);

    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return dt_; }
    std::size_t size() const noexcept { return n_; }
    double time(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) * dt_; }
    double duration() const noexcept { return static_cast<double>(n_) * dt_; }

    // Angular frequency of DFT bin k for a segment of `length` bins on this grid.
    double dft_omega(std::size_t k, std::size_t length) const noexcept;
    double dft_omega(std::size_t k) const noexcept { return dft_omega(k, n_); }

    bool operator==(const TimeGrid&) const = default;

private:
    double t0_;
    double dt_;
    std::size_t n_;
};

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what);

template <class T>
class SampledSignal {
public:
    using value_type = T;

    SampledSignal(TimeGrid grid, std::vector<T> samples);

    static SampledSignal zeros(const TimeGrid& grid) { return SampledSignal(grid, std::vector<T>(grid.size())); }

    const TimeGrid& grid() const noexcept { return grid_; }
    std::span<const T> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    const T& operator[](std::size_t i) const noexcept { return samples_[i]; }

    std::vector<T> release() && { return std::move(samples_); }

private:
    TimeGrid grid_;
    std::vector<T> samples_;
};

using RealSignal = SampledSignal<double>;
using ComplexEnvelope = SampledSignal<Complex>;

extern template class SampledSignal<double>;
extern template class SampledSignal<Complex>;

enum class KernelKind { BroadBand, NarrowBand };

// Causal response kernel sampled at lags k*dt, k = 0..n-1. Negative lags are
// not stored and read back as exact zero.
class ResponseKernel {
public:
    ResponseKernel(TimeGrid grid, std::vector<Complex> samples, KernelKind kind);

    const TimeGrid& grid() const noexcept { return grid_; }
    KernelKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return samples_.size(); }
    std::span<const Complex> samples() const noexcept { return samples_; }

    Complex at_lag(long long k) const noexcept {
        if (k < 0 || static_cast<std::size_t>(k) >= samples_.size()) {
            return {0.0, 0.0};
        }
        return samples_[static_cast<std::size_t>(k)];
    }

    // Kernel equal to delta(tau - shift*dt) with the on-grid delta 1/dt.
    static ResponseKernel discrete_delta(const TimeGrid& grid, std::size_t shift = 0);

private:
    TimeGrid grid_;
    std::vector<Complex> samples_;
    KernelKind kind_;
};

struct SpectrumSeries {
    std::vector<double> omega;
    std::vector<double> value;
    std::optional<std::vector<double>> ci_halfwidth;

    SpectrumSeries() = default;
    SpectrumSeries(std::vector<double> omega_, std::vector<double> value_,
                   std::optional<std::vector<double>> ci = std::nullopt);

    std::size_t size() const noexcept { return omega.size(); }
};

struct FrequencyParts {
    ComplexEnvelope positive;
    ComplexEnvelope negative;
};

// Positive part keeps components e^{-i w t} with w > 0. DC and (for even n)
// the Nyquist component are shared half/half between the parts.
FrequencyParts split_frequency(const RealSignal& signal);
FrequencyParts split_frequency(const ComplexEnvelope& signal);

// output[i] = dt * sum_{k=0..i} kernel[k] * input[i-k]
RealSignal convolve_causal(const ResponseKernel& kernel, const RealSignal& input);
ComplexEnvelope convolve_causal(const ResponseKernel& kernel, const ComplexEnvelope& input);

ResponseKernel single_mode_retarded_kernel(const TimeGrid& grid, double omega0, double scale);
ResponseKernel narrowband_retarded_kernel(const TimeGrid& grid, double detuning, double scale);

// Streaming form of the averaged-segment periodogram. Segments are
// non-overlapping, mean-subtracted and rectangular-windowed; each bin holds
// dt/L |sum_n x_n e^{i w_k n dt}|^2 so white noise of variance s^2 sits at s^2*dt.
class PeriodogramAccumulator {
public:
    PeriodogramAccumulator(double dt, std::size_t segment_bins);

    // Splits `samples` into floor(size/L) segments starting at `offset`.
    void add_record(std::span<const double> samples, std::size_t offset = 0);
    void merge(const PeriodogramAccumulator& other);

    std::size_t segments() const noexcept { return segments_; }
    std::size_t segment_bins() const noexcept { return length_; }
    SpectrumSeries result() const;

private:
    double dt_;
    std::size_t length_;
    std::size_t segments_ = 0;
    std::vector<double> sum_;
    std::vector<double> sum_sq_;
};

SpectrumSeries periodogram(std::span<const RealSignal> records, std::size_t segment_bins);

// Integral of a one-sided periodogram back over both signs of frequency,
// i.e. the mean per-sample variance. Spectrum must come from a segment of
// `segment_bins` bins (needed to weight the Nyquist bin correctly).
double integrated_power(const SpectrumSeries& spectrum, std::size_t segment_bins);

}  // namespace qedc
