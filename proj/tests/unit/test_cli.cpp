#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qedcascade/cli.hpp"

using namespace qedc;
using namespace qedc::cli;
using nlohmann::json;

namespace {

const std::filesystem::path kSource = QEDC_SOURCE_DIR;

json small_coherent() {
    return json::parse(R"({
        "grid": {"dt_s": 0.01, "bins": 2048},
        "source": {"type": "coherent", "flux_per_s": 10.0},
        "detector": {"efficiency": 0.8, "charge_c": 1.0},
        "run": {"trajectories": 16, "seed": 5, "segment_bins": 256}
    })");
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("qedc_test_cli_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::filesystem::path write_json(const std::filesystem::path& dir, const std::string& name, const json& j) {
    const auto p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string csv_column_header(const std::string& csv) { return csv.substr(0, csv.find('\n')); }

}  // namespace

TEST_CASE("number formatting is shortest round-trip") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(1e-300) == "1e-300");
    CHECK(format_number(std::int64_t{-42}) == "-42");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("sha256 matches the published test vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("configuration parsing builds the scenario") {
    const ScenarioConfig c = parse_config(small_coherent());
    CHECK(c.scenario.grid.size() == 2048);
    CHECK(std::get<CoherentSource>(c.scenario.source).flux_per_s == 10.0);
    CHECK(c.scenario.n_traj == 16);
    CHECK(c.scenario.seed == 5);
    CHECK(c.moments.stationary);
    CHECK(c.segment_bins == 256);
}

TEST_CASE("configuration errors name the offending key") {
    json j = small_coherent();
    j["detector"]["gain"] = 2;
    try {
        parse_config(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("detector.gain") != std::string::npos);
    }
    j = small_coherent();
    j["source"]["type"] = "squeezed";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_coherent();
    j["run"]["trajectories"] = 1;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_coherent();
    j["grid"]["dt_s"] = -1.0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("relative excess amplitude fixes the zero-frequency spectrum") {
    json j = small_coherent();
    j["source"] = json::parse(R"({"type": "moment", "mean_flux_per_s": 4.0,
        "excess_corr": {"shape": "lorentzian", "rate_per_s": 2.0, "relative_amplitude": -0.5}})");
    const ScenarioConfig c = parse_config(j);
    const auto& m = std::get<MomentSource>(c.scenario.source);
    CHECK(excess_spectrum(m, 0.0, 40.0) == Catch::Approx(-0.5 * 4.0).epsilon(1e-8));
    j["source"]["excess_corr"]["amplitude_per_s2"] = 1.0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("overrides reparse and the digest ignores thread count") {
    ScenarioConfig c = parse_config(small_coherent());
    const std::string d0 = config_digest(c);
    apply_overrides(c, Overrides{std::nullopt, std::nullopt, std::nullopt, 4u, false});
    CHECK(c.options.threads == 4);
    CHECK(config_digest(c) == d0);
    apply_overrides(c, Overrides{99u, 32u, std::nullopt, std::nullopt, false});
    CHECK(c.scenario.seed == 99);
    CHECK(c.scenario.n_traj == 32);
    CHECK(config_digest(c) != d0);
}

TEST_CASE("compute_run renders the documented files and checks") {
    const RunArtifacts a = compute_run(parse_config(small_coherent()));
    for (const char* f : {"mean_current.csv", "correlation.csv", "spectrum.csv", "counts.csv", "summary.json"}) {
        INFO(f);
        CHECK(a.files.count(f) == 1);
    }
    CHECK(csv_column_header(a.files.at("mean_current.csv")) ==
          "time_s,mean_current_A,mean_current_se_A,analytic_mean_current_A");
    CHECK(csv_column_header(a.files.at("spectrum.csv")) ==
          "omega_rad_per_s,spectrum_A2_s,spectrum_se_A2_s,analytic_spectrum_A2_s");
    std::vector<std::string> names;
    for (const auto& c : a.checks) {
        names.push_back(c.name);
    }
    CHECK(names == std::vector<std::string>{"mean_current", "spectrum", "count_distribution"});
    CHECK_FALSE(a.analytic_only);
}

TEST_CASE("compute_run is deterministic across thread counts") {
    ScenarioConfig one = parse_config(small_coherent());
    ScenarioConfig many = parse_config(small_coherent());
    many.options.threads = 3;
    const auto a = compute_run(one);
    const auto b = compute_run(many);
    for (const auto& [name, body] : a.files) {
        INFO(name);
        CHECK(b.files.at(name) == body);
    }
}

TEST_CASE("moment sources produce analytic-only runs") {
    const RunArtifacts a = compute_run(load_config(kSource / "configs" / "boundary_source.json"));
    CHECK(a.analytic_only);
    CHECK(a.files.count("spectrum.csv") == 1);
    CHECK(a.files.count("counts.csv") == 0);
}

TEST_CASE("sweep ranges") {
    const SweepRange r = parse_range("0:2.5:11");
    const auto v = r.values();
    REQUIRE(v.size() == 11);
    CHECK(v[5] == Catch::Approx(1.25));
    CHECK(v.back() == 2.5);
    CHECK(parse_range("3:3:1").values() == std::vector<double>{3.0});
    CHECK_THROWS_AS(parse_range("1:2"), ConfigError);
    CHECK_THROWS_AS(parse_range("1:2:0"), ConfigError);
    CHECK_THROWS_AS(parse_range("a:2:3"), ConfigError);
}

TEST_CASE("sweep crosses zero n0 coefficient at the boundary value") {
    const ScenarioConfig c = load_config(kSource / "configs" / "noise_limit_sweep.json");
    const std::string csv = compute_sweep(c, "n_a", parse_range("0:2.5:11"));
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("omega_rad_per_s,", 0) == 0);
    bool found = false;
    while (std::getline(in, line)) {
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            cols.push_back(cell);
        }
        if (std::stod(cols[1]) == 1.25) {
            found = true;
            CHECK(std::abs(std::stod(cols[3])) < 1e-12);
        }
    }
    CHECK(found);
    CHECK_THROWS_AS(compute_sweep(c, "chi", parse_range("0:1:2")), ConfigError);
}

TEST_CASE("verbs map failures onto exit codes") {
    const auto dir = scratch("exit");
    std::ostringstream out, err;
    json bad = small_coherent();
    bad["extra"] = 1;
    CHECK(cmd_run(RunArgs{write_json(dir, "bad.json", bad), {}, false}, out, err) == kExitConfig);
    CHECK(cmd_run(RunArgs{kSource / "configs" / "amplified_caves_violation.json", {}, false}, out, err) ==
          kExitPhysics);
    CHECK(cmd_validate(kSource / "configs" / "both_violated.json", out, err) == kExitPhysics);
    CHECK(cmd_validate(kSource / "configs" / "amplifier_caves_boundary.json", out, err) == kExitOk);
    CHECK(cmd_run(RunArgs{dir / "missing.json", {}, false}, out, err) != kExitOk);
    CHECK(cmd_compose(ComposeArgs{kSource / "fixtures"}, out, err) == kExitOk);
}

TEST_CASE("run writes a manifest that --check verifies") {
    const auto dir = scratch("manifest");
    json j = small_coherent();
    j["output"] = {{"dir", (dir / "out").string()}};
    const auto cfg = write_json(dir, "cfg.json", j);
    std::ostringstream out, err;
    REQUIRE(cmd_run(RunArgs{cfg, {}, false}, out, err) == kExitOk);
    const json manifest = json::parse(std::ifstream(dir / "out" / "manifest.json"));
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["trajectories"] == 16);
    CHECK(manifest["files"].size() >= 4);
    CHECK(cmd_run(RunArgs{cfg, {}, true}, out, err) == kExitOk);
    std::ofstream(dir / "out" / "counts.csv", std::ios::app) << "tampered\n";
    CHECK(cmd_run(RunArgs{cfg, {}, true}, out, err) == kExitRuntime);
}
