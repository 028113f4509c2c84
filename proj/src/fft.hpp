#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qedc::detail {

// Forward DFT X_m = sum_n x_n e^{-2 pi i m n / N}. Thread-safe.
std::vector<std::complex<double>> fft_forward(std::span<const std::complex<double>> input);

// Inverse DFT without the 1/N factor. Thread-safe.
std::vector<std::complex<double>> fft_backward(std::span<const std::complex<double>> input);

// Real-input forward DFT, bins 0..N/2. Thread-safe.
std::vector<std::complex<double>> rfft(std::span<const double> input);

}  // namespace qedc::detail
