#include "qedcascade/phase_space_random.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace qedc {
namespace {

std::vector<double> random_column(std::size_t n, bool is_signed, RandomStream& rng) {
    std::vector<double> w(n);
    if (is_signed) {
        double s = 0.0;
        for (auto& x : w) {
            x = 1.5 * rng.uniform() - 0.5;
            s += x;
        }
        const double fix = (1.0 - s) / static_cast<double>(n);
        for (auto& x : w) {
            x += fix;
        }
        // Ensure at least one entry is negative so the table is truly signed.
        if (n > 1 && std::all_of(w.begin(), w.end(), [](double x) { return x >= 0.0; })) {
            const double shift = w[0] + 0.25;
            w[0] -= shift;
            w[1] += shift;
        }
    } else {
        double s = 0.0;
        for (auto& x : w) {
            x = 0.05 + rng.uniform();
            s += x;
        }
        for (auto& x : w) {
            x /= s;
        }
    }
    return w;
}

}  // namespace

ConditionalTable random_nonanticipating_table(const Lattice& current, const Lattice& field, bool is_signed,
                                              RandomStream& rng) {
    const std::size_t m = current.bins();
    if (field.bins() != m) {
        throw LatticeError("random_nonanticipating_table: lattices must have the same bin count");
    }
    // Factor q_i keyed by (bin, J_<i, A_<=i), drawn on first use.
    std::map<std::vector<int>, std::vector<double>> factors;
    auto factor = [&](std::size_t i, const Configuration& j, const Configuration& a) -> const std::vector<double>& {
        std::vector<int> key{static_cast<int>(i)};
        key.insert(key.end(), j.begin(), j.begin() + static_cast<std::ptrdiff_t>(i));
        key.insert(key.end(), a.begin(), a.begin() + static_cast<std::ptrdiff_t>(i + 1));
        auto it = factors.find(key);
        if (it == factors.end()) {
            it = factors.emplace(key, random_column(current.levels(i).size(), is_signed, rng)).first;
        }
        return it->second;
    };
    std::vector<double> w(field.size() * current.size());
    for (std::size_t f = 0; f < field.size(); ++f) {
        const auto a = field.config(f);
        for (std::size_t c = 0; c < current.size(); ++c) {
            const auto j = current.config(c);
            double p = 1.0;
            for (std::size_t i = 0; i < m; ++i) {
                const auto levels = current.levels(i);
                const auto pos = static_cast<std::size_t>(std::find(levels.begin(), levels.end(), j[i]) - levels.begin());
                p *= factor(i, j, a)[pos];
            }
            w[f * current.size() + c] = p;
        }
    }
    return ConditionalTable(current, field, std::move(w), is_signed);
}

ConditionalTable random_table(const Lattice& current, const Lattice& field, bool is_signed, RandomStream& rng) {
    std::vector<double> w;
    w.reserve(field.size() * current.size());
    for (std::size_t f = 0; f < field.size(); ++f) {
        const auto col = random_column(current.size(), is_signed, rng);
        w.insert(w.end(), col.begin(), col.end());
    }
    return ConditionalTable(current, field, std::move(w), is_signed);
}

ConditionalTable random_distribution(const Lattice& lattice, bool is_signed, RandomStream& rng) {
    return make_distribution(lattice, random_column(lattice.size(), is_signed, rng), is_signed);
}

LatticeKernel random_causal_kernel(std::size_t bins, int max_abs, std::size_t max_nonzero_per_row, RandomStream& rng) {
    std::vector<int> k(bins * bins, 0);
    const auto span = static_cast<double>(2 * max_abs + 1);
    for (std::size_t i = 1; i < bins; ++i) {
        std::size_t placed = 0;
        for (std::size_t j = 0; j < i && placed < max_nonzero_per_row; ++j) {
            const int v = static_cast<int>(rng.uniform() * span) - max_abs;
            k[i * bins + j] = v;
            placed += v != 0 ? 1 : 0;
        }
    }
    return LatticeKernel(bins, std::move(k));
}

Lattice composable_field_lattice(const LatticeKernel& kernel, const Lattice& current, std::size_t base_levels) {
    const std::size_t m = current.bins();
    std::vector<int> lo(m, 0), hi(m, 0);
    for (std::size_t c = 0; c < current.size(); ++c) {
        const auto shift = kernel.apply(current.config(c));
        for (std::size_t i = 0; i < m; ++i) {
            lo[i] = c == 0 ? shift[i] : std::min(lo[i], shift[i]);
            hi[i] = c == 0 ? shift[i] : std::max(hi[i], shift[i]);
        }
    }
    std::vector<std::vector<int>> levels(m);
    for (std::size_t i = 0; i < m; ++i) {
        const int n = 2 * (hi[i] - lo[i]) + static_cast<int>(base_levels);
        const int start = -(n / 2);
        levels[i].resize(static_cast<std::size_t>(n));
        std::iota(levels[i].begin(), levels[i].end(), start);
    }
    return Lattice(std::move(levels));
}

ComposeFixture random_compose_fixture(const RandomFixtureShape& shape, RandomStream& rng) {
    std::vector<int> levels(shape.current_levels);
    std::iota(levels.begin(), levels.end(), 0);
    const Lattice current = Lattice::uniform(shape.bins, levels);
    const LatticeKernel kernel = shape.kernel        ? *shape.kernel
                                 : shape.zero_kernel ? LatticeKernel::zero(shape.bins)
                                                     : random_causal_kernel(shape.bins, 1, 1, rng);
    const Lattice field = composable_field_lattice(kernel, current, 2);
    ComposeFixture fx{"random instance",
                      kernel,
                      random_nonanticipating_table(current, field, shape.is_signed, rng),
                      random_nonanticipating_table(current, field, shape.is_signed, rng),
                      {},
                      std::nullopt};
    if (shape.with_chain) {
        const Lattice x = Lattice::uniform(shape.bins, levels);
        const Lattice y = Lattice::uniform(shape.bins, {-1, 0, 1});
        const Lattice z = Lattice::uniform(shape.bins, {0, 1});
        fx.chain = ComposeFixture::Chain{random_distribution(x, shape.is_signed, rng),
                                         random_table(y, x, shape.is_signed, rng),
                                         random_table(z, y, shape.is_signed, rng)};
    }
    return fx;
}

}  // namespace qedc
