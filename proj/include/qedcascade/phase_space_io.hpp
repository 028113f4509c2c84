#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qedcascade/phase_space.hpp"

namespace qedc {

// Tables as nested key-value text:
//   {"current_lattice": [[0,1],[0,1]], "field_lattice": [[-1,0,1],[...]],
//    "signed": false, "weights": {"-1,0": {"0,1": 0.25, ...}, ...}}
// Configurations are comma-joined integers; the empty configuration of an
// unconditional distribution is "". Absent current keys carry zero weight.
nlohmann::json lattice_to_json(const Lattice& lattice);
Lattice lattice_from_json(const nlohmann::json& j);
nlohmann::json table_to_json(const ConditionalTable& table);
ConditionalTable table_from_json(const nlohmann::json& j);
LatticeKernel kernel_from_json(const nlohmann::json& j);

std::string config_key(std::span<const int> config);
Configuration parse_config_key(const std::string& key, std::size_t bins);

// A fixture: two component tables on a shared bare field lattice, a causal
// kernel, optional generating-functional probe points and an optional
// three-stage chain (source distribution, amplifier, detector).
struct ComposeFixture {
    std::string description;
    LatticeKernel kernel;
    ConditionalTable component_a;
    ConditionalTable component_b;
    std::vector<std::vector<double>> zeta;
    struct Chain {
        ConditionalTable source;
        ConditionalTable amplifier;
        ConditionalTable detector;
    };
    std::optional<Chain> chain;
};

ComposeFixture fixture_from_json(const nlohmann::json& j);

struct ComposeCheck {
    std::string name;
    double max_deviation;
    bool passed;
};

struct ComposeReport {
    std::vector<ComposeCheck> checks;
    bool kernel_is_zero = false;
    bool dress_is_identity = false;  // meaningful only for zero kernels
    bool any_signed = false;
    bool all_passed() const;
};

// Runs the dressing/composition commutation, the generating-functional
// factorisation, normalisation and (when present) chain associativity.
ComposeReport run_compose_suite(const ComposeFixture& fixture, double tolerance = 1e-12);

}  // namespace qedc
