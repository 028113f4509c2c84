#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace qedc {

// Exact algebra of conditional quasiprobability tables p(J | A) over small
// integer lattices. Currents J and fields A are m-tuples ("configurations"),
// one integer per time bin.

using Configuration = std::vector<int>;

class LatticeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NormalizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxTableEntries = 100'000;

// Product lattice: bin i takes values from a strictly increasing level list.
// A lattice with zero bins has exactly one (empty) configuration and is used
// as the conditioning lattice of unconditional distributions.
class Lattice {
public:
    Lattice() = default;
    explicit Lattice(std::vector<std::vector<int>> levels);
    static Lattice uniform(std::size_t bins, std::vector<int> levels);

    std::size_t bins() const noexcept { return levels_.size(); }
    std::span<const int> levels(std::size_t bin) const { return levels_.at(bin); }
    const std::vector<std::vector<int>>& all_levels() const noexcept { return levels_; }

    // Number of configurations.
    std::size_t size() const noexcept { return size_; }

    std::optional<std::size_t> index_of(std::span<const int> config) const;
    Configuration config(std::size_t index) const;

    bool operator==(const Lattice& other) const { return levels_ == other.levels_; }

private:
    std::vector<std::vector<int>> levels_;
    std::vector<std::size_t> stride_;
    std::size_t size_ = 1;
};

// Per-bin sumset lattice {a + b}: the values J_A + J_B can take.
Lattice sum_lattice(const Lattice& a, const Lattice& b);

// Integer causal kernel: the field shift at bin i is sum_{j<i} K_ij J_j.
class LatticeKernel {
public:
    LatticeKernel(std::size_t bins, std::vector<int> row_major);
    static LatticeKernel zero(std::size_t bins) { return LatticeKernel(bins, std::vector<int>(bins * bins, 0)); }

    std::size_t bins() const noexcept { return bins_; }
    int at(std::size_t row, std::size_t col) const { return entries_.at(row * bins_ + col); }
    bool is_zero() const noexcept;
    Configuration apply(std::span<const int> current) const;

private:
    std::size_t bins_;
    std::vector<int> entries_;
};

class ConditionalTable {
public:
    // weights are laid out field-major: weights[f * current.size() + j].
    // Every column must sum to 1 within `tolerance`; unsigned tables must be
    // nonnegative.
    ConditionalTable(Lattice current, Lattice field, std::vector<double> weights, bool is_signed,
                     double tolerance = 1e-12);

    const Lattice& current_lattice() const noexcept { return current_; }
    const Lattice& field_lattice() const noexcept { return field_; }
    bool is_signed() const noexcept { return signed_; }
    bool is_unconditional() const noexcept { return field_.bins() == 0; }

    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> column(std::size_t field_index) const;
    double weight(std::size_t field_index, std::size_t current_index) const {
        return weights_[field_index * current_.size() + current_index];
    }
    // p(J | A); zero when J is off the current lattice.
    double weight(std::span<const int> field, std::span<const int> current) const;

    double max_normalization_error() const;
    bool has_negative_weights() const;

private:
    Lattice current_;
    Lattice field_;
    std::vector<double> weights_;
    bool signed_;
};

// Unconditional distribution on `lattice`, stored as a table over the
// zero-bin field lattice.
ConditionalTable make_distribution(Lattice lattice, std::vector<double> weights, bool is_signed);

// Largest sub-box F' of `field` with F' + K J inside `field` for every J on
// `current`. Throws LatticeError when some bin has no admissible value.
Lattice dressable_field_lattice(const Lattice& field, const LatticeKernel& kernel, const Lattice& current);

// dressed(J | A_e) = bare(J | A_e + K J), for A_e on `external`
// (default: the bare field lattice).
ConditionalTable dress(const ConditionalTable& bare, const LatticeKernel& kernel,
                       const std::optional<Lattice>& external = std::nullopt);

// p(J | A) = sum_{J_A} pA(J_A | A) pB(J - J_A | A), on the sumset current lattice.
ConditionalTable compose_bare(const ConditionalTable& a, const ConditionalTable& b);

// p(J | A_e) = sum_{J_A} pA(J_A | A_e + K J_B) pB(J_B | A_e + K J_A), J_B = J - J_A.
// Default external lattice: the largest box on which both shifted lookups hit.
ConditionalTable compose_dressed(const ConditionalTable& a, const ConditionalTable& b, const LatticeKernel& kernel,
                                 const std::optional<Lattice>& external = std::nullopt);

// p(y | z) = sum_x p1(x | z) p2(y | x); unconditional stage1 gives p(y).
ConditionalTable chain_compose(const ConditionalTable& stage1, const ConditionalTable& stage2);

// Phi(zeta | A) = sum_J p(J | A) exp(i sum_k zeta_k J_k)
std::complex<double> eval_generating_functional(const ConditionalTable& table, std::span<const double> zeta,
                                                std::span<const int> field);

// Joint table p(A, J | A_e) = p(J | A_e) [A = K J]. The joint current lattice
// is the radiated-field lattice (bins 0..m-1) followed by the current lattice
// (bins m..2m-1).
ConditionalTable joint_field_current(const ConditionalTable& table, const LatticeKernel& kernel);

// Sums the leading `leading_bins` bins out of the current configuration.
ConditionalTable marginalize_leading(const ConditionalTable& table, std::size_t leading_bins);

// Per-bin mean of the current under each conditioning configuration:
// result[f][i] = sum_J J_i p(J | A_f).
std::vector<std::vector<double>> mean_current(const ConditionalTable& table);

double max_abs_difference(const ConditionalTable& a, const ConditionalTable& b);

}  // namespace qedc
