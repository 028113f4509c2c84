#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qedcascade/cascade.hpp"

namespace qedc::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitRuntime = 1,
    kExitConfig = 2,
    kExitPhysics = 3,
};

// Schema violation in a configuration or fixture file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CheckTolerances {
    double mean_sigma = 3.0;
    double spectrum_rel_tol = 0.05;
    double ks_alpha = 0.01;
};

struct SweepSettings {
    std::optional<double> omega_rad_per_s;
    bool simulate = false;
};

struct ScenarioConfig {
    explicit ScenarioConfig(Scenario s) : scenario(std::move(s)) {}

    Scenario scenario;
    RunOptions options;
    MomentOptions moments;
    std::size_t segment_bins = 256;
    std::optional<std::size_t> transient_bins;
    std::filesystem::path output_dir = "out";
    CheckTolerances checks;
    SweepSettings sweep;
    // Effective configuration after command-line overrides.
    nlohmann::json document;
};

ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);

// SHA-256 of the effective configuration, excluding settings that cannot
// change results (thread count).
std::string config_digest(const ScenarioConfig& config);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trajectories;
    std::optional<std::filesystem::path> out;
    std::optional<unsigned> threads;
    bool allow_unphysical = false;
};

void apply_overrides(ScenarioConfig& config, const Overrides& overrides);

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    double margin = 0.0;  // threshold - value
    std::string detail;
};

// In-memory products of a run: file name -> UTF-8 contents.
struct RunArtifacts {
    std::map<std::string, std::string> files;
    std::vector<CheckResult> checks;
    std::vector<std::string> warnings;
    bool analytic_only = false;
};

// Simulates (or, for moment sources, evaluates analytically) the configured
// scenario and renders every data file. Throws PhysicsViolation / ScenarioError.
RunArtifacts compute_run(const ScenarioConfig& config);

std::string sha256_hex(std::string_view data);

// Shortest round-trip decimal rendering, locale independent.
std::string format_number(double x);
std::string format_number(std::int64_t x);

struct RunArgs {
    std::filesystem::path config;
    Overrides overrides;
    bool check = false;
};

struct ComposeArgs {
    std::filesystem::path fixtures;
};

struct SweepArgs {
    std::filesystem::path config;
    Overrides overrides;
    std::string parameter;
    std::string range;  // start:stop:count
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_compose(const ComposeArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

struct SweepRange {
    double start;
    double stop;
    std::size_t count;
    std::vector<double> values() const;
};

SweepRange parse_range(const std::string& text);

// Parameters accepted by the sweep verb.
const std::vector<std::string>& sweep_parameters();

// One row per value: parameter, omega, analytic spectrum, n0 coefficient and
// optionally the simulated spectrum. Returns the CSV text.
std::string compute_sweep(const ScenarioConfig& config, const std::string& parameter, const SweepRange& range);

}  // namespace qedc::cli
