#include "qedcascade/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace qedc {
namespace {

void require_bins(const LatticeKernel& kernel, const Lattice& lattice, const char* what) {
    if (kernel.bins() != lattice.bins()) {
        throw LatticeError(std::string(what) + ": kernel and lattice bin counts differ");
    }
}

std::size_t shifted_index(const Lattice& field, const Configuration& base, const Configuration& shift,
                          const char* what) {
    Configuration target(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        target[i] = base[i] + shift[i];
    }
    const auto idx = field.index_of(target);
    if (!idx) {
        throw LatticeError(std::string(what) + ": shifted field falls off the field lattice");
    }
    return *idx;
}

// Values (K J)_i takes at each bin as J ranges over `current`.
std::vector<std::set<int>> shift_sets(const LatticeKernel& kernel, const Lattice& current) {
    std::vector<std::set<int>> sets(current.bins());
    for (std::size_t j = 0; j < current.size(); ++j) {
        const auto shift = kernel.apply(current.config(j));
        for (std::size_t i = 0; i < shift.size(); ++i) {
            sets[i].insert(shift[i]);
        }
    }
    return sets;
}

Lattice intersect(const Lattice& a, const Lattice& b) {
    std::vector<std::vector<int>> levels(a.bins());
    for (std::size_t i = 0; i < a.bins(); ++i) {
        std::set_intersection(a.levels(i).begin(), a.levels(i).end(), b.levels(i).begin(), b.levels(i).end(),
                              std::back_inserter(levels[i]));
        if (levels[i].empty()) {
            throw LatticeError("lattice intersection is empty");
        }
    }
    return Lattice(std::move(levels));
}

}  // namespace

Lattice::Lattice(std::vector<std::vector<int>> levels) : levels_(std::move(levels)) {
    stride_.resize(levels_.size());
    std::size_t stride = 1;
    for (std::size_t i = levels_.size(); i-- > 0;) {
        const auto& lv = levels_[i];
        if (lv.empty()) {
            throw LatticeError("Lattice: a bin has no levels");
        }
        for (std::size_t k = 1; k < lv.size(); ++k) {
            if (lv[k] <= lv[k - 1]) {
                throw LatticeError("Lattice: levels must be strictly increasing");
            }
        }
        stride_[i] = stride;
        if (stride > kMaxTableEntries * 16 / lv.size()) {
            throw LatticeError("Lattice: configuration space too large");
        }
        stride *= lv.size();
    }
    size_ = stride;
}

Lattice Lattice::uniform(std::size_t bins, std::vector<int> levels) {
    return Lattice(std::vector<std::vector<int>>(bins, std::move(levels)));
}

std::optional<std::size_t> Lattice::index_of(std::span<const int> config) const {
    if (config.size() != levels_.size()) {
        return std::nullopt;
    }
    std::size_t index = 0;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        const auto& lv = levels_[i];
        auto it = std::lower_bound(lv.begin(), lv.end(), config[i]);
        if (it == lv.end() || *it != config[i]) {
            return std::nullopt;
        }
        index += static_cast<std::size_t>(it - lv.begin()) * stride_[i];
    }
    return index;
}

Configuration Lattice::config(std::size_t index) const {
    Configuration c(levels_.size());
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        c[i] = levels_[i][(index / stride_[i]) % levels_[i].size()];
    }
    return c;
}

Lattice sum_lattice(const Lattice& a, const Lattice& b) {
    if (a.bins() != b.bins()) {
        throw LatticeError("sum_lattice: bin counts differ");
    }
    std::vector<std::vector<int>> levels(a.bins());
    for (std::size_t i = 0; i < a.bins(); ++i) {
        std::set<int> s;
        for (int x : a.levels(i)) {
            for (int y : b.levels(i)) {
                s.insert(x + y);
            }
        }
        levels[i].assign(s.begin(), s.end());
    }
    return Lattice(std::move(levels));
}

LatticeKernel::LatticeKernel(std::size_t bins, std::vector<int> row_major)
    : bins_(bins), entries_(std::move(row_major)) {
    if (entries_.size() != bins_ * bins_) {
        throw LatticeError("LatticeKernel: expected a square bins x bins matrix");
    }
    for (std::size_t r = 0; r < bins_; ++r) {
        for (std::size_t c = r; c < bins_; ++c) {
            if (entries_[r * bins_ + c] != 0) {
                throw LatticeError("LatticeKernel: kernel must be strictly lower triangular (causal)");
            }
        }
    }
}

bool LatticeKernel::is_zero() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [](int v) { return v == 0; });
}

Configuration LatticeKernel::apply(std::span<const int> current) const {
    if (current.size() != bins_) {
        throw LatticeError("LatticeKernel: configuration has the wrong number of bins");
    }
    Configuration shift(bins_, 0);
    for (std::size_t r = 0; r < bins_; ++r) {
        for (std::size_t c = 0; c < r; ++c) {
            shift[r] += entries_[r * bins_ + c] * current[c];
        }
    }
    return shift;
}

ConditionalTable::ConditionalTable(Lattice current, Lattice field, std::vector<double> weights, bool is_signed,
                                   double tolerance)
    : current_(std::move(current)), field_(std::move(field)), weights_(std::move(weights)), signed_(is_signed) {
    if (current_.size() > kMaxTableEntries / field_.size()) {
        throw LatticeError("ConditionalTable: table exceeds the dense-entry cap");
    }
    if (weights_.size() != current_.size() * field_.size()) {
        throw LatticeError("ConditionalTable: weight count does not match lattices");
    }
    for (double w : weights_) {
        if (!std::isfinite(w)) {
            throw std::invalid_argument("ConditionalTable: non-finite weight");
        }
        if (!signed_ && w < 0.0) {
            throw std::invalid_argument("ConditionalTable: negative weight in an unsigned table");
        }
    }
    const double err = max_normalization_error();
    if (err > tolerance) {
        throw NormalizationError("ConditionalTable: column sums deviate from 1 by " + std::to_string(err));
    }
}

std::span<const double> ConditionalTable::column(std::size_t field_index) const {
    return std::span<const double>(weights_).subspan(field_index * current_.size(), current_.size());
}

double ConditionalTable::weight(std::span<const int> field, std::span<const int> current) const {
    const auto f = field_.index_of(field);
    if (!f) {
        throw LatticeError("ConditionalTable: field configuration off lattice");
    }
    const auto j = current_.index_of(current);
    return j ? weight(*f, *j) : 0.0;
}

double ConditionalTable::max_normalization_error() const {
    double worst = 0.0;
    for (std::size_t f = 0; f < field_.size(); ++f) {
        double s = 0.0;
        for (double w : column(f)) {
            s += w;
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

bool ConditionalTable::has_negative_weights() const {
    return std::any_of(weights_.begin(), weights_.end(), [](double w) { return w < 0.0; });
}

ConditionalTable make_distribution(Lattice lattice, std::vector<double> weights, bool is_signed) {
    return ConditionalTable(std::move(lattice), Lattice{}, std::move(weights), is_signed);
}

Lattice dressable_field_lattice(const Lattice& field, const LatticeKernel& kernel, const Lattice& current) {
    require_bins(kernel, field, "dressable_field_lattice");
    require_bins(kernel, current, "dressable_field_lattice");
    const auto shifts = shift_sets(kernel, current);
    std::vector<std::vector<int>> levels(field.bins());
    for (std::size_t i = 0; i < field.bins(); ++i) {
        const auto lv = field.levels(i);
        for (int a : lv) {
            const bool ok = std::all_of(shifts[i].begin(), shifts[i].end(),
                                        [&](int s) { return std::binary_search(lv.begin(), lv.end(), a + s); });
            if (ok) {
                levels[i].push_back(a);
            }
        }
        if (levels[i].empty()) {
            throw LatticeError("dressable_field_lattice: no external field value survives the shift at bin " +
                               std::to_string(i));
        }
    }
    return Lattice(std::move(levels));
}

ConditionalTable dress(const ConditionalTable& bare, const LatticeKernel& kernel, const std::optional<Lattice>& external) {
    const Lattice& field = external ? *external : bare.field_lattice();
    const Lattice& current = bare.current_lattice();
    require_bins(kernel, current, "dress");
    require_bins(kernel, field, "dress");
    std::vector<double> w(field.size() * current.size());
    for (std::size_t j = 0; j < current.size(); ++j) {
        const auto cur = current.config(j);
        const auto shift = kernel.apply(cur);
        for (std::size_t f = 0; f < field.size(); ++f) {
            const auto src = shifted_index(bare.field_lattice(), field.config(f), shift, "dress");
            w[f * current.size() + j] = bare.weight(src, j);
        }
    }
    // The substitution need not be a bijection; column sums are re-verified.
    return ConditionalTable(current, field, std::move(w), bare.is_signed(), 1e-9);
}

ConditionalTable compose_bare(const ConditionalTable& a, const ConditionalTable& b) {
    if (!(a.field_lattice() == b.field_lattice()) || !(a.current_lattice() == b.current_lattice())) {
        throw LatticeError("compose_bare: components must share current and field lattices");
    }
    const Lattice& in = a.current_lattice();
    const Lattice out = sum_lattice(in, in);
    const Lattice& field = a.field_lattice();
    // Map each (J_A, J_B) pair to its sum once.
    std::vector<std::size_t> sum_index(in.size() * in.size());
    for (std::size_t ja = 0; ja < in.size(); ++ja) {
        const auto ca = in.config(ja);
        for (std::size_t jb = 0; jb < in.size(); ++jb) {
            auto cb = in.config(jb);
            for (std::size_t i = 0; i < cb.size(); ++i) {
                cb[i] += ca[i];
            }
            sum_index[ja * in.size() + jb] = *out.index_of(cb);
        }
    }
    std::vector<double> w(field.size() * out.size(), 0.0);
    for (std::size_t f = 0; f < field.size(); ++f) {
        const auto ca = a.column(f);
        const auto cb = b.column(f);
        double* dst = w.data() + f * out.size();
        for (std::size_t ja = 0; ja < in.size(); ++ja) {
            if (ca[ja] == 0.0) {
                continue;
            }
            for (std::size_t jb = 0; jb < in.size(); ++jb) {
                dst[sum_index[ja * in.size() + jb]] += ca[ja] * cb[jb];
            }
        }
    }
    return ConditionalTable(out, field, std::move(w), a.is_signed() || b.is_signed());
}

ConditionalTable compose_dressed(const ConditionalTable& a, const ConditionalTable& b, const LatticeKernel& kernel,
                                 const std::optional<Lattice>& external) {
    if (!(a.current_lattice() == b.current_lattice())) {
        throw LatticeError("compose_dressed: components must share the current lattice");
    }
    const Lattice& in = a.current_lattice();
    require_bins(kernel, in, "compose_dressed");
    Lattice field = external ? *external
                             : intersect(dressable_field_lattice(a.field_lattice(), kernel, in),
                                         dressable_field_lattice(b.field_lattice(), kernel, in));
    require_bins(kernel, field, "compose_dressed");
    const Lattice out = sum_lattice(in, in);

    std::vector<Configuration> shifts(in.size());
    std::vector<Configuration> configs(in.size());
    for (std::size_t j = 0; j < in.size(); ++j) {
        configs[j] = in.config(j);
        shifts[j] = kernel.apply(configs[j]);
    }
    std::vector<double> w(field.size() * out.size(), 0.0);
    for (std::size_t f = 0; f < field.size(); ++f) {
        const auto ext = field.config(f);
        // A_eA depends on J_B and A_eB on J_A: precompute field indices.
        std::vector<std::size_t> field_a(in.size()), field_b(in.size());
        for (std::size_t j = 0; j < in.size(); ++j) {
            field_a[j] = shifted_index(a.field_lattice(), ext, shifts[j], "compose_dressed");
            field_b[j] = shifted_index(b.field_lattice(), ext, shifts[j], "compose_dressed");
        }
        double* dst = w.data() + f * out.size();
        for (std::size_t ja = 0; ja < in.size(); ++ja) {
            for (std::size_t jb = 0; jb < in.size(); ++jb) {
                const double wa = a.weight(field_a[jb], ja);
                const double wb = b.weight(field_b[ja], jb);
                if (wa == 0.0 || wb == 0.0) {
                    continue;
                }
                Configuration sum = configs[ja];
                for (std::size_t i = 0; i < sum.size(); ++i) {
                    sum[i] += configs[jb][i];
                }
                dst[*out.index_of(sum)] += wa * wb;
            }
        }
    }
    return ConditionalTable(out, std::move(field), std::move(w), a.is_signed() || b.is_signed(), 1e-9);
}

ConditionalTable chain_compose(const ConditionalTable& stage1, const ConditionalTable& stage2) {
    if (!(stage1.current_lattice() == stage2.field_lattice())) {
        throw LatticeError("chain_compose: stage1 output lattice differs from stage2 conditioning lattice");
    }
    const Lattice& z = stage1.field_lattice();
    const Lattice& x = stage1.current_lattice();
    const Lattice& y = stage2.current_lattice();
    std::vector<double> w(z.size() * y.size(), 0.0);
    for (std::size_t f = 0; f < z.size(); ++f) {
        const auto p1 = stage1.column(f);
        double* dst = w.data() + f * y.size();
        for (std::size_t ix = 0; ix < x.size(); ++ix) {
            if (p1[ix] == 0.0) {
                continue;
            }
            const auto p2 = stage2.column(ix);
            for (std::size_t iy = 0; iy < y.size(); ++iy) {
                dst[iy] += p1[ix] * p2[iy];
            }
        }
    }
    return ConditionalTable(y, z, std::move(w), stage1.is_signed() || stage2.is_signed(), 1e-9);
}

std::complex<double> eval_generating_functional(const ConditionalTable& table, std::span<const double> zeta,
                                                std::span<const int> field) {
    const Lattice& cur = table.current_lattice();
    if (zeta.size() != cur.bins()) {
        throw LatticeError("eval_generating_functional: zeta has the wrong number of bins");
    }
    const auto f = table.field_lattice().index_of(field);
    if (!f) {
        throw LatticeError("eval_generating_functional: field configuration off lattice");
    }
    const auto col = table.column(*f);
    std::complex<double> phi{0.0, 0.0};
    for (std::size_t j = 0; j < cur.size(); ++j) {
        const auto c = cur.config(j);
        double phase = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            phase += zeta[k] * c[k];
        }
        phi += col[j] * std::polar(1.0, phase);
    }
    return phi;
}

ConditionalTable joint_field_current(const ConditionalTable& table, const LatticeKernel& kernel) {
    const Lattice& cur = table.current_lattice();
    require_bins(kernel, cur, "joint_field_current");
    const auto shifts = shift_sets(kernel, cur);
    std::vector<std::vector<int>> levels;
    for (const auto& s : shifts) {
        levels.emplace_back(s.begin(), s.end());
    }
    for (const auto& lv : cur.all_levels()) {
        levels.push_back(lv);
    }
    const Lattice joint(std::move(levels));
    const Lattice& field = table.field_lattice();
    std::vector<double> w(field.size() * joint.size(), 0.0);
    for (std::size_t j = 0; j < cur.size(); ++j) {
        const auto c = cur.config(j);
        Configuration full = kernel.apply(c);
        full.insert(full.end(), c.begin(), c.end());
        const std::size_t target = *joint.index_of(full);
        for (std::size_t f = 0; f < field.size(); ++f) {
            w[f * joint.size() + target] = table.weight(f, j);
        }
    }
    return ConditionalTable(joint, field, std::move(w), table.is_signed());
}

ConditionalTable marginalize_leading(const ConditionalTable& table, std::size_t leading_bins) {
    const Lattice& cur = table.current_lattice();
    if (leading_bins > cur.bins()) {
        throw LatticeError("marginalize_leading: more bins than the lattice has");
    }
    const auto& all = cur.all_levels();
    const Lattice kept(std::vector<std::vector<int>>(all.begin() + static_cast<long>(leading_bins), all.end()));
    const Lattice& field = table.field_lattice();
    std::vector<double> w(field.size() * kept.size(), 0.0);
    for (std::size_t j = 0; j < cur.size(); ++j) {
        const auto c = cur.config(j);
        const std::size_t target =
            *kept.index_of(std::span<const int>(c).subspan(leading_bins));
        for (std::size_t f = 0; f < field.size(); ++f) {
            w[f * kept.size() + target] += table.weight(f, j);
        }
    }
    return ConditionalTable(kept, field, std::move(w), table.is_signed(), 1e-9);
}

std::vector<std::vector<double>> mean_current(const ConditionalTable& table) {
    const Lattice& cur = table.current_lattice();
    const Lattice& field = table.field_lattice();
    std::vector<std::vector<double>> means(field.size(), std::vector<double>(cur.bins(), 0.0));
    for (std::size_t j = 0; j < cur.size(); ++j) {
        const auto c = cur.config(j);
        for (std::size_t f = 0; f < field.size(); ++f) {
            const double w = table.weight(f, j);
            for (std::size_t i = 0; i < c.size(); ++i) {
                means[f][i] += w * c[i];
            }
        }
    }
    return means;
}

double max_abs_difference(const ConditionalTable& a, const ConditionalTable& b) {
    if (!(a.current_lattice() == b.current_lattice()) || !(a.field_lattice() == b.field_lattice())) {
        throw LatticeError("max_abs_difference: tables live on different lattices");
    }
    double worst = 0.0;
    const auto wa = a.weights();
    const auto wb = b.weights();
    for (std::size_t i = 0; i < wa.size(); ++i) {
        worst = std::max(worst, std::abs(wa[i] - wb[i]));
    }
    return worst;
}

}  // namespace qedc
