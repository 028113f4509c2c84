#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace qedc::detail {
namespace {

enum class Transform { Forward, Backward, RealForward };

struct PlanDeleter {
    void operator()(fftw_plan_s* plan) const noexcept { fftw_destroy_plan(plan); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct BufferDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

// The FFTW planner is not re-entrant; plans are created once per
// (size, transform) under this lock and then executed through the new-array
// interface, which is safe to call concurrently.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_plan cached_plan(Transform kind, std::size_t n) {
    static std::map<std::pair<Transform, std::size_t>, PlanHandle> plans;
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto key = std::make_pair(kind, n);
    auto it = plans.find(key);
    if (it != plans.end()) {
        return it->second.get();
    }
    const int len = static_cast<int>(n);
    std::unique_ptr<void, BufferDeleter> in(fftw_malloc(sizeof(fftw_complex) * (n + 1)));
    std::unique_ptr<void, BufferDeleter> out(fftw_malloc(sizeof(fftw_complex) * (n + 1)));
    fftw_plan plan = nullptr;
    switch (kind) {
        case Transform::Forward:
            plan = fftw_plan_dft_1d(len, static_cast<fftw_complex*>(in.get()), static_cast<fftw_complex*>(out.get()),
                                    FFTW_FORWARD, FFTW_ESTIMATE);
            break;
        case Transform::Backward:
            plan = fftw_plan_dft_1d(len, static_cast<fftw_complex*>(in.get()), static_cast<fftw_complex*>(out.get()),
                                    FFTW_BACKWARD, FFTW_ESTIMATE);
            break;
        case Transform::RealForward:
            plan = fftw_plan_dft_r2c_1d(len, static_cast<double*>(in.get()), static_cast<fftw_complex*>(out.get()),
                                        FFTW_ESTIMATE);
            break;
    }
    if (plan == nullptr) {
        throw std::runtime_error("FFTW failed to create a plan");
    }
    auto [pos, inserted] = plans.emplace(key, PlanHandle(plan));
    return pos->second.get();
}

std::vector<std::complex<double>> complex_transform(Transform kind, std::span<const std::complex<double>> input) {
    const std::size_t n = input.size();
    if (n == 0) {
        return {};
    }
    fftw_plan plan = cached_plan(kind, n);
    std::unique_ptr<void, BufferDeleter> in(fftw_malloc(sizeof(fftw_complex) * n));
    std::unique_ptr<void, BufferDeleter> out(fftw_malloc(sizeof(fftw_complex) * n));
    auto* src = static_cast<fftw_complex*>(in.get());
    auto* dst = static_cast<fftw_complex*>(out.get());
    for (std::size_t i = 0; i < n; ++i) {
        src[i][0] = input[i].real();
        src[i][1] = input[i].imag();
    }
    fftw_execute_dft(plan, src, dst);
    std::vector<std::complex<double>> result(n);
    for (std::size_t i = 0; i < n; ++i) {
        result[i] = {dst[i][0], dst[i][1]};
    }
    return result;
}

}  // namespace

std::vector<std::complex<double>> fft_forward(std::span<const std::complex<double>> input) {
    return complex_transform(Transform::Forward, input);
}

std::vector<std::complex<double>> fft_backward(std::span<const std::complex<double>> input) {
    return complex_transform(Transform::Backward, input);
}

std::vector<std::complex<double>> rfft(std::span<const double> input) {
    const std::size_t n = input.size();
    if (n == 0) {
        return {};
    }
    fftw_plan plan = cached_plan(Transform::RealForward, n);
    const std::size_t bins = n / 2 + 1;
    std::unique_ptr<void, BufferDeleter> in(fftw_malloc(sizeof(double) * n));
    std::unique_ptr<void, BufferDeleter> out(fftw_malloc(sizeof(fftw_complex) * bins));
    auto* src = static_cast<double*>(in.get());
    auto* dst = static_cast<fftw_complex*>(out.get());
    std::copy(input.begin(), input.end(), src);
    fftw_execute_dft_r2c(plan, src, dst);
    std::vector<std::complex<double>> result(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        result[i] = {dst[i][0], dst[i][1]};
    }
    return result;
}

}  // namespace qedc::detail
