#pragma once

#include <cstddef>
#include <optional>

#include "qedcascade/phase_space.hpp"
#include "qedcascade/phase_space_io.hpp"
#include "qedcascade/rng.hpp"

namespace qedc {

// Random nonanticipating table: p(J | A) = prod_i q_i(J_i | J_<i, A_<=i).
// Dressing such a table with a strictly causal kernel preserves
// normalisation. Signed tables carry some negative weights.
ConditionalTable random_nonanticipating_table(const Lattice& current, const Lattice& field, bool is_signed,
                                              RandomStream& rng);

// Random table with independent columns and no causal structure.
ConditionalTable random_table(const Lattice& current, const Lattice& field, bool is_signed, RandomStream& rng);

ConditionalTable random_distribution(const Lattice& lattice, bool is_signed, RandomStream& rng);

// Strictly lower-triangular kernel with entries in [-max_abs, max_abs] and at
// most `max_nonzero_per_row` nonzero entries per row.
LatticeKernel random_causal_kernel(std::size_t bins, int max_abs, std::size_t max_nonzero_per_row, RandomStream& rng);

// Smallest per-bin symmetric field lattice wide enough that components on
// `current` and their pairwise composite can be dressed and composed:
// bin i gets 2 s_i + base_levels levels, s_i being the span of the radiated
// shift (K J)_i over J on `current`.
Lattice composable_field_lattice(const LatticeKernel& kernel, const Lattice& current, std::size_t base_levels);

struct RandomFixtureShape {
    std::size_t bins = 2;
    std::size_t current_levels = 2;
    bool is_signed = false;
    bool zero_kernel = false;
    bool with_chain = true;
    // Overrides the random kernel.
    std::optional<LatticeKernel> kernel;
};

ComposeFixture random_compose_fixture(const RandomFixtureShape& shape, RandomStream& rng);

}  // namespace qedc
