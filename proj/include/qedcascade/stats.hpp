#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace qedc {

// Sup-distance between the empirical CDF of integer samples and a model CDF
// evaluated at the integers.
double ks_distance(std::span<const std::int64_t> samples, const std::function<double(std::int64_t)>& cdf);

// Two-sample sup-distance between empirical CDFs of integer samples.
double ks_distance(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

// Asymptotic Kolmogorov critical value sqrt(-ln(alpha/2)/2) / sqrt(n_eff).
// For discrete data the test is conservative.
double ks_critical_value(double alpha, std::size_t n);
double ks_critical_value(double alpha, std::size_t n, std::size_t m);

}  // namespace qedc
