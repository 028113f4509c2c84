#include "qedcascade/phase_space_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qedc {

using nlohmann::json;

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
    if (!j.is_object()) {
        throw std::invalid_argument(std::string(what) + ": expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
            throw std::invalid_argument(std::string(what) + ": unknown key '" + key + "'");
        }
    }
}

}  // namespace

std::string config_key(std::span<const int> config) {
    std::string s;
    for (std::size_t i = 0; i < config.size(); ++i) {
        if (i > 0) {
            s += ',';
        }
        s += std::to_string(config[i]);
    }
    return s;
}

Configuration parse_config_key(const std::string& key, std::size_t bins) {
    Configuration c;
    if (!key.empty()) {
        const char* p = key.data();
        const char* end = key.data() + key.size();
        while (true) {
            while (p < end && *p == ' ') {
                ++p;
            }
            int v = 0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{}) {
                throw std::invalid_argument("bad configuration key '" + key + "'");
            }
            c.push_back(v);
            p = next;
            while (p < end && *p == ' ') {
                ++p;
            }
            if (p == end) {
                break;
            }
            if (*p != ',') {
                throw std::invalid_argument("bad configuration key '" + key + "'");
            }
            ++p;
        }
    }
    if (c.size() != bins) {
        throw std::invalid_argument("configuration key '" + key + "' has the wrong number of bins");
    }
    return c;
}

json lattice_to_json(const Lattice& lattice) { return json(lattice.all_levels()); }

Lattice lattice_from_json(const json& j) {
    if (!j.is_array()) {
        throw std::invalid_argument("lattice: expected an array of per-bin level lists");
    }
    return Lattice(j.get<std::vector<std::vector<int>>>());
}

json table_to_json(const ConditionalTable& table) {
    json weights = json::object();
    const Lattice& cur = table.current_lattice();
    const Lattice& field = table.field_lattice();
    for (std::size_t f = 0; f < field.size(); ++f) {
        json col = json::object();
        for (std::size_t c = 0; c < cur.size(); ++c) {
            const double w = table.weight(f, c);
            if (w != 0.0) {
                col[config_key(cur.config(c))] = w;
            }
        }
        weights[config_key(field.config(f))] = std::move(col);
    }
    return json{{"current_lattice", lattice_to_json(cur)},
                {"field_lattice", lattice_to_json(field)},
                {"signed", table.is_signed()},
                {"weights", std::move(weights)}};
}

ConditionalTable table_from_json(const json& j) {
    require_keys(j, {"current_lattice", "field_lattice", "signed", "weights"}, "table");
    Lattice cur = lattice_from_json(j.at("current_lattice"));
    Lattice field = j.contains("field_lattice") ? lattice_from_json(j.at("field_lattice")) : Lattice{};
    const bool is_signed = j.value("signed", false);
    std::vector<double> w(cur.size() * field.size(), 0.0);
    std::vector<bool> seen(field.size(), false);
    for (const auto& [fkey, col] : j.at("weights").items()) {
        const auto fidx = field.index_of(parse_config_key(fkey, field.bins()));
        if (!fidx) {
            throw std::invalid_argument("table: field configuration '" + fkey + "' is off lattice");
        }
        seen[*fidx] = true;
        for (const auto& [ckey, value] : col.items()) {
            const auto cidx = cur.index_of(parse_config_key(ckey, cur.bins()));
            if (!cidx) {
                throw std::invalid_argument("table: current configuration '" + ckey + "' is off lattice");
            }
            w[*fidx * cur.size() + *cidx] = value.get<double>();
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw std::invalid_argument("table: every field configuration needs a weight column");
    }
    // Fixture text carries finitely many digits.
    return ConditionalTable(std::move(cur), std::move(field), std::move(w), is_signed, 1e-9);
}

LatticeKernel kernel_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<int>>>();
    std::vector<int> flat;
    for (const auto& r : rows) {
        if (r.size() != rows.size()) {
            throw std::invalid_argument("kernel: expected a square matrix");
        }
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return LatticeKernel(rows.size(), std::move(flat));
}

ComposeFixture fixture_from_json(const json& j) {
    require_keys(j, {"description", "kernel", "tables", "zeta", "chain"}, "fixture");
    const auto& tables = j.at("tables");
    require_keys(tables, {"A", "B"}, "fixture.tables");
    ComposeFixture fx{j.value("description", std::string{}), kernel_from_json(j.at("kernel")),
                      table_from_json(tables.at("A")), table_from_json(tables.at("B")), {}, std::nullopt};
    if (j.contains("zeta")) {
        fx.zeta = j.at("zeta").get<std::vector<std::vector<double>>>();
    }
    if (j.contains("chain")) {
        const auto& c = j.at("chain");
        require_keys(c, {"source", "amplifier", "detector"}, "fixture.chain");
        fx.chain = ComposeFixture::Chain{table_from_json(c.at("source")), table_from_json(c.at("amplifier")),
                                         table_from_json(c.at("detector"))};
    }
    return fx;
}

bool ComposeReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ComposeCheck& c) { return c.passed; });
}

ComposeReport run_compose_suite(const ComposeFixture& fx, double tolerance) {
    ComposeReport report;
    report.kernel_is_zero = fx.kernel.is_zero();
    report.any_signed = fx.component_a.is_signed() || fx.component_b.is_signed();
    auto record = [&](std::string name, double dev) {
        report.checks.push_back({std::move(name), dev, dev < tolerance});
    };

    const Lattice& in = fx.component_a.current_lattice();
    const Lattice bare_field = fx.component_a.field_lattice();

    // Dress the components on the largest box where every later lookup hits.
    const Lattice comp_field = dressable_field_lattice(bare_field, fx.kernel, in);
    const auto dressed_a = dress(fx.component_a, fx.kernel, comp_field);
    const auto dressed_b = dress(fx.component_b, fx.kernel, comp_field);
    const auto composite_dressed = compose_dressed(dressed_a, dressed_b, fx.kernel);
    const auto dressed_composite =
        dress(compose_bare(fx.component_a, fx.component_b), fx.kernel, composite_dressed.field_lattice());
    record("dress(compose_bare) == compose_dressed(dress, dress)",
           max_abs_difference(dressed_composite, composite_dressed));

    record("normalization after dressing", std::max({dressed_a.max_normalization_error(),
                                                     dressed_b.max_normalization_error(),
                                                     composite_dressed.max_normalization_error()}));

    if (report.kernel_is_zero) {
        const double dev = std::max(max_abs_difference(dress(fx.component_a, fx.kernel), fx.component_a),
                                    max_abs_difference(dress(fx.component_b, fx.kernel), fx.component_b));
        report.dress_is_identity = dev == 0.0;
        record("zero kernel: dress is the identity", dev);
    }

    const auto composite = compose_bare(fx.component_a, fx.component_b);
    std::vector<std::vector<double>> probes = fx.zeta;
    if (probes.empty()) {
        probes.push_back(std::vector<double>(in.bins(), 0.0));
        std::vector<double> z(in.bins());
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] = 0.37 + 0.61 * static_cast<double>(i);
        }
        probes.push_back(z);
    }
    double factor_dev = 0.0;
    for (const auto& zeta : probes) {
        for (std::size_t f = 0; f < bare_field.size(); ++f) {
            const auto field = bare_field.config(f);
            const auto lhs = eval_generating_functional(composite, zeta, field);
            const auto rhs = eval_generating_functional(fx.component_a, zeta, field) *
                             eval_generating_functional(fx.component_b, zeta, field);
            factor_dev = std::max(factor_dev, std::abs(lhs - rhs));
        }
    }
    record("generating functional factorises over compose_bare", factor_dev);

    if (fx.chain) {
        const auto& c = *fx.chain;
        report.any_signed = report.any_signed || c.source.is_signed() || c.amplifier.is_signed() ||
                            c.detector.is_signed();
        const auto via_composite_source = chain_compose(chain_compose(c.source, c.amplifier), c.detector);
        const auto via_composite_detector = chain_compose(c.source, chain_compose(c.amplifier, c.detector));
        record("chain associativity (composite source vs composite detector)",
               max_abs_difference(via_composite_source, via_composite_detector));
    }
    return report;
}

}  // namespace qedc
