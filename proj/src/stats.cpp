#include "qedcascade/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace qedc {
namespace {

std::vector<std::int64_t> sorted(std::span<const std::int64_t> s) {
    std::vector<std::int64_t> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

double ks_distance(std::span<const std::int64_t> samples, const std::function<double(std::int64_t)>& cdf) {
    if (samples.empty()) {
        throw std::invalid_argument("ks_distance: no samples");
    }
    const auto v = sorted(samples);
    const auto n = static_cast<double>(v.size());
    double worst = 0.0;
    // Both CDFs are step functions jumping at integers; compare just below
    // and at every value between the extremes.
    for (std::int64_t x = v.front() - 1; x <= v.back(); ++x) {
        const auto upto = std::upper_bound(v.begin(), v.end(), x) - v.begin();
        worst = std::max(worst, std::abs(static_cast<double>(upto) / n - cdf(x)));
    }
    // Above the largest sample the empirical CDF is 1.
    worst = std::max(worst, std::abs(1.0 - cdf(v.back())));
    return worst;
}

double ks_distance(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_distance: no samples");
    }
    const auto va = sorted(a);
    const auto vb = sorted(b);
    const auto na = static_cast<double>(va.size());
    const auto nb = static_cast<double>(vb.size());
    const std::int64_t lo = std::min(va.front(), vb.front());
    const std::int64_t hi = std::max(va.back(), vb.back());
    double worst = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x) {
        const auto ca = std::upper_bound(va.begin(), va.end(), x) - va.begin();
        const auto cb = std::upper_bound(vb.begin(), vb.end(), x) - vb.begin();
        worst = std::max(worst, std::abs(static_cast<double>(ca) / na - static_cast<double>(cb) / nb));
    }
    return worst;
}

double ks_critical_value(double alpha, std::size_t n) {
    if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("ks_critical_value: bad arguments");
    }
    return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(static_cast<double>(n));
}

double ks_critical_value(double alpha, std::size_t n, std::size_t m) {
    if (n == 0 || m == 0) {
        throw std::invalid_argument("ks_critical_value: bad arguments");
    }
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    return std::sqrt(-0.5 * std::log(0.5 * alpha)) * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace qedc
