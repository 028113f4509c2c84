// Regenerates the shipped phase-space fixtures: make_fixtures <output dir>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qedcascade/phase_space_random.hpp"

namespace {

using nlohmann::json;

json fixture_to_json(const qedc::ComposeFixture& fx) {
    json kernel = json::array();
    for (std::size_t i = 0; i < fx.kernel.bins(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < fx.kernel.bins(); ++j) {
            row.push_back(fx.kernel.at(i, j));
        }
        kernel.push_back(row);
    }
    json j{{"description", fx.description},
           {"kernel", kernel},
           {"tables", {{"A", qedc::table_to_json(fx.component_a)}, {"B", qedc::table_to_json(fx.component_b)}}}};
    if (fx.chain) {
        j["chain"] = {{"source", qedc::table_to_json(fx.chain->source)},
                      {"amplifier", qedc::table_to_json(fx.chain->amplifier)},
                      {"detector", qedc::table_to_json(fx.chain->detector)}};
    }
    return j;
}

void write(const std::filesystem::path& path, qedc::ComposeFixture fx, const std::string& description) {
    fx.description = description;
    std::ofstream(path) << fixture_to_json(fx).dump(1) << "\n";
    std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <output dir>\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    qedc::RandomStream rng(2026, 0);

    qedc::RandomFixtureShape two_bin{2, 3, false, false, true, qedc::LatticeKernel(2, {0, 0, 1, 0})};
    write(dir / "two_bin_three_level.json", qedc::random_compose_fixture(two_bin, rng),
          "two bins, current levels {0,1,2}, kernel K_10 = 1, nonnegative weights");

    qedc::RandomFixtureShape zero{2, 3, false, true, false, std::nullopt};
    write(dir / "zero_kernel.json", qedc::random_compose_fixture(zero, rng),
          "two bins, current levels {0,1,2}, zero kernel");

    qedc::RandomFixtureShape signed_shape{3, 2, true, false, true, qedc::LatticeKernel(3, {0, 0, 0, -1, 0, 0, 0, 1, 0})};
    write(dir / "signed_three_bin.json", qedc::random_compose_fixture(signed_shape, rng),
          "three bins, current levels {0,1}, kernel K_10 = -1, K_21 = 1, signed quasi-distribution weights");
    return 0;
}
