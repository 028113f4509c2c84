#include "qedcascade/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"

namespace qedc {
namespace {

bool finite(double x) { return std::isfinite(x); }
bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

FrequencyParts split_spectrum(const TimeGrid& grid, std::vector<Complex> coeffs) {
    // coeffs are the forward DFT; entry m multiplies e^{+2 pi i m n / N}, so
    // 0 < m < N/2 are e^{+i w t} (negative part) and N/2 < m < N are e^{-i w t}.
    const std::size_t n = coeffs.size();
    std::vector<Complex> pos(n, Complex{0.0, 0.0});
    std::vector<Complex> neg(n, Complex{0.0, 0.0});
    pos[0] = neg[0] = 0.5 * coeffs[0];
    for (std::size_t m = 1; m < n; ++m) {
        if (2 * m < n) {
            neg[m] = coeffs[m];
        } else if (2 * m > n) {
            pos[m] = coeffs[m];
        } else {
            pos[m] = neg[m] = 0.5 * coeffs[m];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    auto back = [&](const std::vector<Complex>& c) {
        auto x = detail::fft_backward(c);
        for (auto& v : x) {
            v *= inv_n;
        }
        return ComplexEnvelope(grid, std::move(x));
    };
    return {back(pos), back(neg)};
}

template <class Out, class In>
std::vector<Out> causal_sum(const ResponseKernel& kernel, std::span<const In> input, double dt) {
    const std::size_t n = input.size();
    const std::size_t klen = std::min(kernel.size(), n);
    const auto k = kernel.samples();
    std::vector<Out> out(n, Out{});
    for (std::size_t i = 0; i < n; ++i) {
        Complex acc{0.0, 0.0};
        const std::size_t top = std::min(i + 1, klen);
        for (std::size_t lag = 0; lag < top; ++lag) {
            acc += k[lag] * input[i - lag];
        }
        if constexpr (std::is_same_v<Out, double>) {
            out[i] = dt * acc.real();
        } else {
            out[i] = dt * acc;
        }
    }
    return out;
}

}  // namespace

TimeGrid::TimeGrid(double t0, double dt, std::size_t n) : t0_(t0), dt_(dt), n_(n) {
    if (!std::isfinite(t0) || !std::isfinite(dt) || dt <= 0.0) {
        throw std::invalid_argument("TimeGrid: dt must be finite and positive");
    }
    if (n == 0) {
        throw std::invalid_argument("TimeGrid: bin count must be at least 1");
    }
}

double TimeGrid::dft_omega(std::size_t k, std::size_t length) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(length) * dt_);
}

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
    if (!(a == b)) {
        throw std::invalid_argument(std::string(what) + ": signals live on different time grids");
    }
}

template <class T>
SampledSignal<T>::SampledSignal(TimeGrid grid, std::vector<T> samples) : grid_(grid), samples_(std::move(samples)) {
    if (samples_.size() != grid_.size()) {
        throw std::invalid_argument("signal length does not match its grid");
    }
    for (const auto& v : samples_) {
        if (!finite(v)) {
            throw std::invalid_argument("signal contains non-finite samples");
        }
    }
}

template class SampledSignal<double>;
template class SampledSignal<Complex>;

ResponseKernel::ResponseKernel(TimeGrid grid, std::vector<Complex> samples, KernelKind kind)
    : grid_(grid), samples_(std::move(samples)), kind_(kind) {
    if (samples_.empty()) {
        throw std::invalid_argument("ResponseKernel: empty kernel");
    }
    for (const auto& v : samples_) {
        if (!finite(v)) {
            throw std::invalid_argument("ResponseKernel: non-finite sample");
        }
        if (kind_ == KernelKind::BroadBand && v.imag() != 0.0) {
            throw std::invalid_argument("ResponseKernel: broad-band kernels are real");
        }
    }
}

ResponseKernel ResponseKernel::discrete_delta(const TimeGrid& grid, std::size_t shift) {
    if (shift >= grid.size()) {
        throw std::invalid_argument("discrete_delta: shift exceeds grid");
    }
    std::vector<Complex> k(grid.size(), Complex{0.0, 0.0});
    k[shift] = 1.0 / grid.dt();
    return ResponseKernel(grid, std::move(k), KernelKind::BroadBand);
}

SpectrumSeries::SpectrumSeries(std::vector<double> omega_, std::vector<double> value_,
                               std::optional<std::vector<double>> ci)
    : omega(std::move(omega_)), value(std::move(value_)), ci_halfwidth(std::move(ci)) {
    if (omega.size() != value.size() || (ci_halfwidth && ci_halfwidth->size() != omega.size())) {
        throw std::invalid_argument("SpectrumSeries: length mismatch");
    }
    for (std::size_t i = 1; i < omega.size(); ++i) {
        if (!(omega[i] > omega[i - 1])) {
            throw std::invalid_argument("SpectrumSeries: frequencies must be strictly increasing");
        }
    }
}

FrequencyParts split_frequency(const RealSignal& signal) {
    std::vector<Complex> z(signal.samples().begin(), signal.samples().end());
    return split_spectrum(signal.grid(), detail::fft_forward(z));
}

FrequencyParts split_frequency(const ComplexEnvelope& signal) {
    return split_spectrum(signal.grid(), detail::fft_forward(signal.samples()));
}

RealSignal convolve_causal(const ResponseKernel& kernel, const RealSignal& input) {
    if (kernel.grid().dt() != input.grid().dt()) {
        throw std::invalid_argument("convolve_causal: kernel and input bin widths differ");
    }
    if (kernel.kind() != KernelKind::BroadBand) {
        throw std::invalid_argument("convolve_causal: a narrow-band kernel needs a complex envelope input");
    }
    return RealSignal(input.grid(), causal_sum<double>(kernel, input.samples(), input.grid().dt()));
}

ComplexEnvelope convolve_causal(const ResponseKernel& kernel, const ComplexEnvelope& input) {
    if (kernel.grid().dt() != input.grid().dt()) {
        throw std::invalid_argument("convolve_causal: kernel and input bin widths differ");
    }
    return ComplexEnvelope(input.grid(), causal_sum<Complex>(kernel, input.samples(), input.grid().dt()));
}

ResponseKernel single_mode_retarded_kernel(const TimeGrid& grid, double omega0, double scale) {
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
        throw std::invalid_argument("single_mode_retarded_kernel: omega0 must be positive");
    }
    std::vector<Complex> k(grid.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        k[i] = scale * std::sin(omega0 * static_cast<double>(i) * grid.dt());
    }
    return ResponseKernel(grid, std::move(k), KernelKind::BroadBand);
}

ResponseKernel narrowband_retarded_kernel(const TimeGrid& grid, double detuning, double scale) {
    std::vector<Complex> k(grid.size());
    const Complex i_scale{0.0, scale};
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double tau = static_cast<double>(i) * grid.dt();
        k[i] = i_scale * std::polar(1.0, -detuning * tau);
    }
    return ResponseKernel(grid, std::move(k), KernelKind::NarrowBand);
}

PeriodogramAccumulator::PeriodogramAccumulator(double dt, std::size_t segment_bins)
    : dt_(dt), length_(segment_bins), sum_(segment_bins / 2 + 1, 0.0), sum_sq_(segment_bins / 2 + 1, 0.0) {
    if (segment_bins < 2) {
        throw std::invalid_argument("periodogram: segments need at least 2 bins");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("periodogram: dt must be positive");
    }
}

void PeriodogramAccumulator::add_record(std::span<const double> samples, std::size_t offset) {
    if (offset > samples.size() || samples.size() - offset < length_) {
        throw std::invalid_argument("periodogram: segment longer than record");
    }
    const double norm = dt_ / static_cast<double>(length_);
    std::vector<double> seg(length_);
    for (std::size_t start = offset; start + length_ <= samples.size(); start += length_) {
        double mean = 0.0;
        for (std::size_t i = 0; i < length_; ++i) {
            mean += samples[start + i];
        }
        mean /= static_cast<double>(length_);
        for (std::size_t i = 0; i < length_; ++i) {
            seg[i] = samples[start + i] - mean;
        }
        const auto coeffs = detail::rfft(seg);
        for (std::size_t k = 0; k < sum_.size(); ++k) {
            const double p = norm * std::norm(coeffs[k]);
            sum_[k] += p;
            sum_sq_[k] += p * p;
        }
        ++segments_;
    }
}

void PeriodogramAccumulator::merge(const PeriodogramAccumulator& other) {
    if (other.length_ != length_ || other.dt_ != dt_) {
        throw std::invalid_argument("periodogram: cannot merge differently configured accumulators");
    }
    for (std::size_t k = 0; k < sum_.size(); ++k) {
        sum_[k] += other.sum_[k];
        sum_sq_[k] += other.sum_sq_[k];
    }
    segments_ += other.segments_;
}

SpectrumSeries PeriodogramAccumulator::result() const {
    if (segments_ == 0) {
        throw std::invalid_argument("periodogram: no segments accumulated");
    }
    const auto count = static_cast<double>(segments_);
    std::vector<double> omega(sum_.size()), value(sum_.size()), se(sum_.size(), 0.0);
    for (std::size_t k = 0; k < sum_.size(); ++k) {
        omega[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(length_) * dt_);
        value[k] = sum_[k] / count;
        if (segments_ > 1) {
            const double var = std::max(0.0, (sum_sq_[k] - count * value[k] * value[k]) / (count - 1.0));
            se[k] = std::sqrt(var / count);
        }
    }
    return SpectrumSeries(std::move(omega), std::move(value), std::move(se));
}

SpectrumSeries periodogram(std::span<const RealSignal> records, std::size_t segment_bins) {
    if (records.empty()) {
        throw std::invalid_argument("periodogram: no records");
    }
    const TimeGrid& grid = records.front().grid();
    if (segment_bins > grid.size()) {
        throw std::invalid_argument("periodogram: segment longer than record");
    }
    PeriodogramAccumulator acc(grid.dt(), segment_bins);
    for (const auto& r : records) {
        require_same_grid(grid, r.grid(), "periodogram");
        acc.add_record(r.samples());
    }
    return acc.result();
}

double integrated_power(const SpectrumSeries& spectrum, std::size_t segment_bins) {
    if (spectrum.size() != segment_bins / 2 + 1 || spectrum.size() < 2) {
        throw std::invalid_argument("integrated_power: spectrum does not match segment length");
    }
    const double d_omega = spectrum.omega[1] - spectrum.omega[0];
    double total = spectrum.value[0];
    for (std::size_t k = 1; k < spectrum.size(); ++k) {
        const bool nyquist = (segment_bins % 2 == 0) && (k == spectrum.size() - 1);
        total += (nyquist ? 1.0 : 2.0) * spectrum.value[k];
    }
    return total * d_omega / (2.0 * std::numbers::pi);
}

}  // namespace qedc
