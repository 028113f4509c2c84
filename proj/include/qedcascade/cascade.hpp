#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qedcascade/devices.hpp"
#include "qedcascade/signal.hpp"

namespace qedc {

// How the source -> amplifier -> detector chain is factorised when sampled.
//   Chain:             one stream per trajectory, E0 then E1 then counts.
//   CompositeSource:   (source + amplifier) emits E1 from one stream, the
//                      detector counts it from another.
//   CompositeDetector: the source emits E0 from one stream; (amplifier +
//                      detector) consumes it bin by bin from another.
enum class ExecutionPlan { Chain, CompositeSource, CompositeDetector };

std::string_view to_string(ExecutionPlan plan) noexcept;
std::optional<ExecutionPlan> parse_plan(std::string_view name) noexcept;

struct Scenario {
    SourceModel source;
    std::optional<AmplifierModel> amplifier;
    DetectorModel detector;
    TimeGrid grid;
    std::size_t n_traj = 1;
    std::uint64_t seed = 0;
    ExecutionPlan plan = ExecutionPlan::Chain;
};

struct RunOptions {
    unsigned threads = 1;
    bool retain_envelopes = false;
    bool allow_unphysical = false;
    // gamma_a must exceed the source bandwidth by this factor.
    double bandwidth_ratio = 10.0;
};

// Malformed or numerically unsupported scenario.
class ScenarioError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Scenario rejected by a quantum noise-limit validator.
class PhysicsViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScenarioCheck {
    std::optional<AmplifierLimitReport> amplifier;
    std::optional<MomentSourceReport> source;
    std::vector<std::string> violations;
};

// Structural problems throw ScenarioError; physics-limit failures are listed
// in `violations`.
ScenarioCheck check_scenario(const Scenario& scenario, const RunOptions& options = {});

// Bins covering 5 / (slowest OU rate) of transient.
std::size_t transient_bins(const Scenario& scenario);

struct TrajectoryEnsemble {
    TimeGrid grid;
    double pulse_charge = 1.0;
    std::vector<PhotocurrentRecord> records;
    // Filled only with RunOptions::retain_envelopes.
    std::vector<ComplexEnvelope> source_fields;
    std::vector<ComplexEnvelope> detected_fields;
    std::uint64_t seed = 0;
    ExecutionPlan plan = ExecutionPlan::Chain;
    double max_bin_mean = 0.0;
};

struct TrajectoryOutput {
    PhotocurrentRecord record;
    std::optional<ComplexEnvelope> source_field;
    std::optional<ComplexEnvelope> detected_field;
    double max_bin_mean = 0.0;
};

// One trajectory, drawn from substreams keyed on (seed, index, role).
TrajectoryOutput simulate_trajectory(const Scenario& scenario, std::size_t index, bool retain_envelopes);

inline constexpr std::size_t kTrajectoryBlock = 64;

// Runs every trajectory and folds it into an accumulator. Trajectories are
// grouped in fixed blocks of kTrajectoryBlock; each block is folded in index
// order and blocks are merged in block order, so the result does not depend
// on the thread count. Accumulator needs add(index, TrajectoryOutput&&) and
// merge(Accumulator&&).
template <class Accumulator, class Factory>
Accumulator accumulate_trajectories(const Scenario& scenario, const RunOptions& options, Factory make) {
    const std::size_t n = scenario.n_traj;
    const std::size_t blocks = (n + kTrajectoryBlock - 1) / kTrajectoryBlock;
    std::vector<std::optional<Accumulator>> partial(blocks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::size_t b = next++; b < blocks; b = next++) {
                Accumulator acc = make();
                const std::size_t end = std::min(n, (b + 1) * kTrajectoryBlock);
                for (std::size_t i = b * kTrajectoryBlock; i < end; ++i) {
                    acc.add(i, simulate_trajectory(scenario, i, options.retain_envelopes));
                }
                partial[b].emplace(std::move(acc));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
            next = blocks;
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(blocks)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    Accumulator total = make();
    for (auto& p : partial) {
        total.merge(std::move(*p));
    }
    return total;
}

// Validates the scenario (throwing PhysicsViolation unless allow_unphysical)
// and materialises every trajectory's photocurrent record.
TrajectoryEnsemble run_chain(const Scenario& scenario, const RunOptions& options = {});

struct MomentOptions {
    // Stationary mode averages over time origins and reports correlation(tau);
    // otherwise a coarse (t, t') matrix is reported.
    bool stationary = true;
    std::size_t max_lag_bins = 32;
    std::size_t discard_bins = 0;
    std::size_t matrix_bins = 64;
};

struct EstimatorReport {
    std::size_t n_traj = 0;
    std::vector<double> time;
    std::vector<double> mean_current;
    std::vector<double> mean_current_se;
    // Ensemble and time average of J over the analysed window.
    double mean_level = 0.0;
    double mean_level_se = 0.0;
    std::vector<double> lag;
    std::vector<double> correlation;
    std::vector<double> correlation_se;
    std::vector<double> matrix_time;
    std::vector<double> correlation_matrix;  // row-major, matrix_time.size()^2
    std::vector<double> count_probability;
    std::vector<double> count_probability_se;
    std::vector<std::int64_t> totals;
    double mean_total = 0.0;
    double mean_total_se = 0.0;
    double var_total = 0.0;
};

// Streaming ensemble moments. Standard errors are delete-one jackknife errors
// over trajectories; for these per-trajectory averages they coincide with
// s / sqrt(n).
class MomentAccumulator {
public:
    MomentAccumulator(const TimeGrid& grid, double pulse_charge, MomentOptions options);

    void add(const PhotocurrentRecord& record);
    void add(std::size_t, TrajectoryOutput&& out) { add(out.record); }
    void merge(MomentAccumulator&& other);
    EstimatorReport report() const;

private:
    TimeGrid grid_;
    double charge_;
    MomentOptions options_;
    std::size_t n_ = 0;
    std::size_t window_;
    std::size_t lags_;
    std::size_t stride_ = 1;
    std::vector<double> sum_j_, sum_j2_;
    double sum_level_ = 0.0, sum_level2_ = 0.0;
    std::vector<double> sum_c_, sum_c2_;
    std::vector<double> sum_matrix_;
    std::vector<std::int64_t> totals_;
};

EstimatorReport estimate_moments(const TrajectoryEnsemble& ensemble, const MomentOptions& options = {});

// Periodogram of the photocurrent J = q counts / dt, skipping `discard_bins`
// at the start of each record. Each record must hold at least 4 segments.
class SpectrumAccumulator {
public:
    SpectrumAccumulator(const TimeGrid& grid, double pulse_charge, std::size_t segment_bins, std::size_t discard_bins);

    void add(const PhotocurrentRecord& record);
    void add(std::size_t, TrajectoryOutput&& out) { add(out.record); }
    void merge(SpectrumAccumulator&& other) { periodogram_.merge(other.periodogram_); }
    SpectrumSeries result() const { return periodogram_.result(); }
    std::size_t segments() const noexcept { return periodogram_.segments(); }

private:
    double charge_;
    std::size_t discard_;
    PeriodogramAccumulator periodogram_;
};

SpectrumSeries estimate_spectrum(const TrajectoryEnsemble& ensemble, std::size_t segment_bins,
                                 std::size_t discard_bins = 0);

// Streaming equivalents of run_chain followed by the estimators.
EstimatorReport simulate_moments(const Scenario& scenario, const RunOptions& options,
                                 const MomentOptions& moment_options);
SpectrumSeries simulate_spectrum(const Scenario& scenario, const RunOptions& options, std::size_t segment_bins,
                                 std::size_t discard_bins);
std::vector<std::int64_t> simulate_totals(const Scenario& scenario, const RunOptions& options);

}  // namespace qedc
