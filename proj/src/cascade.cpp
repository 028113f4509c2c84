#include "qedcascade/cascade.hpp"

#include <cmath>
#include <sstream>

namespace qedc {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string describe(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

template <class F>
void as_scenario_error(F&& f) {
    try {
        f();
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
}

// Amplifier and detector consuming E0 bin by bin from a single stream.
PhotocurrentRecord composite_detect(const ComplexEnvelope& input, const std::optional<AmplifierModel>& amp,
                                    const DetectorModel& det, RandomStream& rng, double& worst,
                                    std::vector<Complex>* detected) {
    const TimeGrid& grid = input.grid();
    const double scale = det.efficiency * grid.dt();
    PhotocurrentRecord rec{grid, std::vector<std::int32_t>(grid.size(), 0)};
    const double gain = amp ? std::sqrt(amp->transfer) : 1.0;
    std::optional<OuProcess> noise;
    if (amp && amp->noise_flux_per_s > 0.0) {
        noise.emplace(amp->noise_flux_per_s, amp->gamma_per_s, grid.dt());
    }
    worst = 0.0;
    if (detected) {
        detected->assign(grid.size(), Complex{});
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Complex e = gain * input[i];
        if (noise) {
            e += i == 0 ? noise->start(rng) : noise->step(rng);
        }
        if (detected) {
            (*detected)[i] = e;
        }
        const double mean = scale * std::norm(e);
        worst = std::max(worst, mean);
        rec.counts[i] = static_cast<std::int32_t>(rng.poisson(mean));
    }
    return rec;
}

void prepare(const Scenario& scenario, const RunOptions& options) {
    const ScenarioCheck check = check_scenario(scenario, options);
    if (!check.violations.empty() && !options.allow_unphysical) {
        std::string msg = "scenario violates a quantum noise limit:";
        for (const auto& v : check.violations) {
            msg += "\n  " + v;
        }
        throw PhysicsViolation(msg);
    }
    if (!is_sampleable(scenario.source)) {
        throw ScenarioError("moment-specified sources cannot be sampled; only analytic outputs are available");
    }
}

struct RecordCollector {
    std::vector<PhotocurrentRecord> records;
    std::vector<ComplexEnvelope> source_fields;
    std::vector<ComplexEnvelope> detected_fields;
    double max_bin_mean = 0.0;

    void add(std::size_t, TrajectoryOutput&& out) {
        records.push_back(std::move(out.record));
        if (out.source_field) {
            source_fields.push_back(std::move(*out.source_field));
        }
        if (out.detected_field) {
            detected_fields.push_back(std::move(*out.detected_field));
        }
        max_bin_mean = std::max(max_bin_mean, out.max_bin_mean);
    }

    void merge(RecordCollector&& other) {
        auto append = [](auto& dst, auto& src) {
            dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
        };
        append(records, other.records);
        append(source_fields, other.source_fields);
        append(detected_fields, other.detected_fields);
        max_bin_mean = std::max(max_bin_mean, other.max_bin_mean);
    }
};

struct TotalsCollector {
    std::vector<std::int64_t> totals;
    void add(std::size_t, TrajectoryOutput&& out) { totals.push_back(out.record.total()); }
    void merge(TotalsCollector&& other) { totals.insert(totals.end(), other.totals.begin(), other.totals.end()); }
};

struct MeanSe {
    double mean;
    double se;
};

MeanSe mean_se(double sum, double sum_sq, std::size_t n) {
    const double dn = static_cast<double>(n);
    const double mean = sum / dn;
    const double var = std::max(0.0, (sum_sq - dn * mean * mean) / (dn - 1.0));
    return {mean, std::sqrt(var / dn)};
}

}  // namespace

std::string_view to_string(ExecutionPlan plan) noexcept {
    switch (plan) {
        case ExecutionPlan::Chain:
            return "chain";
        case ExecutionPlan::CompositeSource:
            return "composite-source";
        case ExecutionPlan::CompositeDetector:
            return "composite-detector";
    }
    return "chain";
}

std::optional<ExecutionPlan> parse_plan(std::string_view name) noexcept {
    for (auto p : {ExecutionPlan::Chain, ExecutionPlan::CompositeSource, ExecutionPlan::CompositeDetector}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    return std::nullopt;
}

ScenarioCheck check_scenario(const Scenario& scenario, const RunOptions& options) {
    ScenarioCheck check;
    if (scenario.n_traj < 1) {
        throw ScenarioError("scenario: need at least one trajectory");
    }
    if (!(options.bandwidth_ratio >= 1.0)) {
        throw ScenarioError("scenario: bandwidth ratio must be >= 1");
    }
    as_scenario_error([&] {
        validate_source(scenario.source);
        validate_detector(scenario.detector);
        if (scenario.amplifier) {
            validate_amplifier_model(*scenario.amplifier);
        }
    });
    const double dt = scenario.grid.dt();
    if (const auto* ms = std::get_if<MomentSource>(&scenario.source)) {
        MomentSourceReport r;
        as_scenario_error([&] { r = validate_moment_source(*ms, scenario.grid); });
        if (!r.ok) {
            check.violations.push_back("source: excess intensity spectrum reaches " + describe(r.min_n2_omega) +
                                       " at omega = " + describe(r.omega_at_min) + " rad/s, below -n0 = " +
                                       describe(-ms->mean_flux_per_s));
        }
        check.source = std::move(r);
    }
    if (scenario.amplifier) {
        const AmplifierModel& amp = *scenario.amplifier;
        if (amp.mode == NoiseMode::OrnsteinUhlenbeck && amp.noise_flux_per_s > 0.0 &&
            amp.gamma_per_s * dt > kMaxGammaDt) {
            throw ScenarioError("amplifier: gamma_a * dt = " + describe(amp.gamma_per_s * dt) + " exceeds " +
                                describe(kMaxGammaDt) + "; refine the grid or select white noise mode");
        }
        if (const auto* th = std::get_if<ThermalSource>(&scenario.source)) {
            if (amp.gamma_per_s < options.bandwidth_ratio * th->coherence_rate_per_s) {
                throw ScenarioError("amplifier: gamma_a = " + describe(amp.gamma_per_s) +
                                    " must exceed the source bandwidth " + describe(th->coherence_rate_per_s) +
                                    " by a factor " + describe(options.bandwidth_ratio));
            }
        }
        const AmplifierLimitReport r = validate_amplifier(amp);
        if (!r.caves_ok) {
            check.violations.push_back("amplifier: 4 n_a / gamma_a = " + describe(r.noise_density) +
                                       " is below the Caves bound " + describe(r.caves_bound) + " for T_a = " +
                                       describe(amp.transfer));
        }
        check.amplifier = r;
    }
    return check;
}

std::size_t transient_bins(const Scenario& scenario) {
    double slowest = 0.0;
    auto consider = [&](double rate) {
        if (rate > 0.0 && (slowest == 0.0 || rate < slowest)) {
            slowest = rate;
        }
    };
    if (const auto* th = std::get_if<ThermalSource>(&scenario.source)) {
        consider(th->coherence_rate_per_s);
    }
    if (scenario.amplifier && scenario.amplifier->noise_flux_per_s > 0.0) {
        consider(scenario.amplifier->gamma_per_s);
    }
    if (slowest == 0.0) {
        return 0;
    }
    return static_cast<std::size_t>(std::ceil(5.0 / (slowest * scenario.grid.dt())));
}

TrajectoryOutput simulate_trajectory(const Scenario& scenario, std::size_t index, bool retain_envelopes) {
    const std::uint64_t seed = scenario.seed;
    const TimeGrid& grid = scenario.grid;
    TrajectoryOutput out{PhotocurrentRecord{grid, {}}, std::nullopt, std::nullopt, 0.0};
    switch (scenario.plan) {
        case ExecutionPlan::Chain: {
            RandomStream rng(seed, substream_id(index, StreamRole::Chain));
            ComplexEnvelope e0 = sample_source(scenario.source, grid, rng);
            ComplexEnvelope e1 = scenario.amplifier ? amplify(e0, *scenario.amplifier, rng) : e0;
            out.record = detect(e1, scenario.detector, rng);
            out.max_bin_mean = max_bin_mean(e1, scenario.detector);
            if (retain_envelopes) {
                out.source_field = std::move(e0);
                out.detected_field = std::move(e1);
            }
            break;
        }
        case ExecutionPlan::CompositeSource: {
            RandomStream src(seed, substream_id(index, StreamRole::Source));
            ComplexEnvelope e0 = sample_source(scenario.source, grid, src);
            ComplexEnvelope e1 = scenario.amplifier ? amplify(e0, *scenario.amplifier, src) : e0;
            RandomStream det(seed, substream_id(index, StreamRole::Detector));
            out.record = detect(e1, scenario.detector, det);
            out.max_bin_mean = max_bin_mean(e1, scenario.detector);
            if (retain_envelopes) {
                out.source_field = std::move(e0);
                out.detected_field = std::move(e1);
            }
            break;
        }
        case ExecutionPlan::CompositeDetector: {
            RandomStream src(seed, substream_id(index, StreamRole::Source));
            ComplexEnvelope e0 = sample_source(scenario.source, grid, src);
            RandomStream det(seed, substream_id(index, StreamRole::CompositeDetector));
            std::vector<Complex> e1;
            out.record = composite_detect(e0, scenario.amplifier, scenario.detector, det, out.max_bin_mean,
                                          retain_envelopes ? &e1 : nullptr);
            if (retain_envelopes) {
                out.source_field = std::move(e0);
                out.detected_field.emplace(grid, std::move(e1));
            }
            break;
        }
    }
    return out;
}

TrajectoryEnsemble run_chain(const Scenario& scenario, const RunOptions& options) {
    prepare(scenario, options);
    RecordCollector all = accumulate_trajectories<RecordCollector>(scenario, options, [] { return RecordCollector{}; });
    TrajectoryEnsemble ens{scenario.grid,
                           scenario.detector.pulse_charge,
                           std::move(all.records),
                           std::move(all.source_fields),
                           std::move(all.detected_fields),
                           scenario.seed,
                           scenario.plan,
                           all.max_bin_mean};
    return ens;
}

MomentAccumulator::MomentAccumulator(const TimeGrid& grid, double pulse_charge, MomentOptions options)
    : grid_(grid), charge_(pulse_charge), options_(options) {
    if (options_.discard_bins >= grid_.size()) {
        throw ScenarioError("moments: transient discard leaves no bins");
    }
    window_ = grid_.size() - options_.discard_bins;
    sum_j_.assign(grid_.size(), 0.0);
    sum_j2_.assign(grid_.size(), 0.0);
    if (options_.stationary) {
        lags_ = std::min(options_.max_lag_bins + 1, window_);
        sum_c_.assign(lags_, 0.0);
        sum_c2_.assign(lags_, 0.0);
    } else {
        if (options_.matrix_bins < 1) {
            throw ScenarioError("moments: matrix resolution must be >= 1");
        }
        lags_ = 0;
        stride_ = (window_ + options_.matrix_bins - 1) / options_.matrix_bins;
        const std::size_t m = (window_ + stride_ - 1) / stride_;
        sum_matrix_.assign(m * m, 0.0);
    }
}

void MomentAccumulator::add(const PhotocurrentRecord& record) {
    if (!(record.grid == grid_) || record.counts.size() != grid_.size()) {
        throw ScenarioError("moments: record grid does not match");
    }
    const double scale = charge_ / grid_.dt();
    const std::size_t d = options_.discard_bins;
    std::vector<double> j(window_);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double ji = scale * record.counts[i];
        sum_j_[i] += ji;
        sum_j2_[i] += ji * ji;
        if (i >= d) {
            j[i - d] = ji;
        }
    }
    double level = 0.0;
    for (double x : j) {
        level += x;
    }
    level /= static_cast<double>(window_);
    sum_level_ += level;
    sum_level2_ += level * level;
    if (options_.stationary) {
        for (std::size_t m = 0; m < lags_; ++m) {
            double c = 0.0;
            for (std::size_t i = 0; i + m < window_; ++i) {
                c += j[i] * j[i + m];
            }
            c /= static_cast<double>(window_ - m);
            sum_c_[m] += c;
            sum_c2_[m] += c * c;
        }
    } else {
        const std::size_t m = (window_ + stride_ - 1) / stride_;
        std::vector<double> coarse(m, 0.0);
        for (std::size_t a = 0; a < m; ++a) {
            const std::size_t lo = a * stride_;
            const std::size_t hi = std::min(window_, lo + stride_);
            for (std::size_t i = lo; i < hi; ++i) {
                coarse[a] += j[i];
            }
            coarse[a] /= static_cast<double>(hi - lo);
        }
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < m; ++b) {
                sum_matrix_[a * m + b] += coarse[a] * coarse[b];
            }
        }
    }
    totals_.push_back(record.total());
    ++n_;
}

void MomentAccumulator::merge(MomentAccumulator&& other) {
    if (!(other.grid_ == grid_) || other.sum_c_.size() != sum_c_.size() ||
        other.sum_matrix_.size() != sum_matrix_.size()) {
        throw ScenarioError("moments: cannot merge accumulators with different layouts");
    }
    for (std::size_t i = 0; i < sum_j_.size(); ++i) {
        sum_j_[i] += other.sum_j_[i];
        sum_j2_[i] += other.sum_j2_[i];
    }
    for (std::size_t m = 0; m < sum_c_.size(); ++m) {
        sum_c_[m] += other.sum_c_[m];
        sum_c2_[m] += other.sum_c2_[m];
    }
    for (std::size_t k = 0; k < sum_matrix_.size(); ++k) {
        sum_matrix_[k] += other.sum_matrix_[k];
    }
    sum_level_ += other.sum_level_;
    sum_level2_ += other.sum_level2_;
    totals_.insert(totals_.end(), other.totals_.begin(), other.totals_.end());
    n_ += other.n_;
}

EstimatorReport MomentAccumulator::report() const {
    if (n_ < 2) {
        throw ScenarioError("moments: need at least two trajectories for error estimates");
    }
    EstimatorReport r;
    r.n_traj = n_;
    const double dn = static_cast<double>(n_);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        const auto [m, se] = mean_se(sum_j_[i], sum_j2_[i], n_);
        r.time.push_back(grid_.time(i));
        r.mean_current.push_back(m);
        r.mean_current_se.push_back(se);
    }
    const auto [lvl, lvl_se] = mean_se(sum_level_, sum_level2_, n_);
    r.mean_level = lvl;
    r.mean_level_se = lvl_se;
    for (std::size_t m = 0; m < sum_c_.size(); ++m) {
        const auto [c, se] = mean_se(sum_c_[m], sum_c2_[m], n_);
        r.lag.push_back(static_cast<double>(m) * grid_.dt());
        r.correlation.push_back(c);
        r.correlation_se.push_back(se);
    }
    if (!sum_matrix_.empty()) {
        const std::size_t m = (window_ + stride_ - 1) / stride_;
        for (std::size_t a = 0; a < m; ++a) {
            const std::size_t lo = options_.discard_bins + a * stride_;
            const std::size_t hi = std::min(grid_.size(), lo + stride_);
            r.matrix_time.push_back(0.5 * (grid_.time(lo) + grid_.time(hi - 1)));
        }
        r.correlation_matrix.resize(sum_matrix_.size());
        for (std::size_t k = 0; k < sum_matrix_.size(); ++k) {
            r.correlation_matrix[k] = sum_matrix_[k] / dn;
        }
    }
    r.totals = totals_;
    double s = 0.0, s2 = 0.0;
    std::int64_t top = 0;
    for (auto t : totals_) {
        s += static_cast<double>(t);
        s2 += static_cast<double>(t) * static_cast<double>(t);
        top = std::max(top, t);
    }
    const auto [mt, mt_se] = mean_se(s, s2, n_);
    r.mean_total = mt;
    r.mean_total_se = mt_se;
    r.var_total = mt_se * mt_se * dn;
    std::vector<double> hist(static_cast<std::size_t>(top) + 1, 0.0);
    for (auto t : totals_) {
        hist[static_cast<std::size_t>(t)] += 1.0;
    }
    for (double h : hist) {
        const double p = h / dn;
        r.count_probability.push_back(p);
        r.count_probability_se.push_back(std::sqrt(p * (1.0 - p) / (dn - 1.0)));
    }
    return r;
}

EstimatorReport estimate_moments(const TrajectoryEnsemble& ensemble, const MomentOptions& options) {
    MomentAccumulator acc(ensemble.grid, ensemble.pulse_charge, options);
    for (const auto& rec : ensemble.records) {
        acc.add(rec);
    }
    return acc.report();
}

SpectrumAccumulator::SpectrumAccumulator(const TimeGrid& grid, double pulse_charge, std::size_t segment_bins,
                                         std::size_t discard_bins)
    : charge_(pulse_charge), discard_(discard_bins), periodogram_(grid.dt(), segment_bins) {
    if (segment_bins < 2 || discard_bins >= grid.size() || (grid.size() - discard_bins) / segment_bins < 4) {
        throw ScenarioError("spectrum: each record must hold at least 4 segments of " + std::to_string(segment_bins) +
                            " bins after discarding " + std::to_string(discard_bins) + " transient bins");
    }
}

void SpectrumAccumulator::add(const PhotocurrentRecord& record) {
    const double scale = charge_ / record.grid.dt();
    std::vector<double> j(record.counts.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        j[i] = scale * record.counts[i];
    }
    periodogram_.add_record(j, discard_);
}

SpectrumSeries estimate_spectrum(const TrajectoryEnsemble& ensemble, std::size_t segment_bins,
                                 std::size_t discard_bins) {
    SpectrumAccumulator acc(ensemble.grid, ensemble.pulse_charge, segment_bins, discard_bins);
    for (const auto& rec : ensemble.records) {
        acc.add(rec);
    }
    return acc.result();
}

EstimatorReport simulate_moments(const Scenario& scenario, const RunOptions& options,
                                 const MomentOptions& moment_options) {
    prepare(scenario, options);
    const double q = scenario.detector.pulse_charge;
    return accumulate_trajectories<MomentAccumulator>(
               scenario, options, [&] { return MomentAccumulator(scenario.grid, q, moment_options); })
        .report();
}

SpectrumSeries simulate_spectrum(const Scenario& scenario, const RunOptions& options, std::size_t segment_bins,
                                 std::size_t discard_bins) {
    prepare(scenario, options);
    const double q = scenario.detector.pulse_charge;
    return accumulate_trajectories<SpectrumAccumulator>(
               scenario, options,
               [&] { return SpectrumAccumulator(scenario.grid, q, segment_bins, discard_bins); })
        .result();
}

std::vector<std::int64_t> simulate_totals(const Scenario& scenario, const RunOptions& options) {
    prepare(scenario, options);
    return accumulate_trajectories<TotalsCollector>(scenario, options, [] { return TotalsCollector{}; }).totals;
}

}  // namespace qedc
