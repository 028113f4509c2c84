#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qedcascade/analytics.hpp"
#include "qedcascade/cascade.hpp"
#include "qedcascade/cli.hpp"

namespace py = pybind11;
using namespace qedc;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<Complex> to_array(std::span<const Complex> v) {
    py::array_t<Complex> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict limit_report(const AmplifierLimitReport& r) {
    py::dict d;
    d["noise_density"] = r.noise_density;
    d["caves_bound"] = r.caves_bound;
    d["weak_bound"] = r.weak_bound;
    d["caves_margin"] = r.caves_margin;
    d["weak_margin"] = r.weak_margin;
    d["caves_ok"] = r.caves_ok;
    d["weak_ok"] = r.weak_ok;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Photodetection cascade simulator core";
    m.attr("__version__") = QEDC_VERSION;

    py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
    py::register_exception<PhysicsViolation>(m, "PhysicsViolation", PyExc_RuntimeError);
    py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def(
        "split_frequency",
        [](RealArray x, double dt) {
            const TimeGrid grid(0.0, dt, static_cast<std::size_t>(x.size()));
            const FrequencyParts p = split_frequency(RealSignal(grid, std::vector<double>(x.data(), x.data() + x.size())));
            return py::make_tuple(to_array(p.positive.samples()), to_array(p.negative.samples()));
        },
        py::arg("samples"), py::arg("dt") = 1.0, "Positive- and negative-frequency parts of a real signal.");

    m.def(
        "periodogram",
        [](RealArray records, double dt, std::size_t segment_bins) {
            if (records.ndim() != 2) {
                throw std::invalid_argument("periodogram: expected a 2-d array of records");
            }
            PeriodogramAccumulator acc(dt, segment_bins);
            const auto cols = static_cast<std::size_t>(records.shape(1));
            for (py::ssize_t r = 0; r < records.shape(0); ++r) {
                acc.add_record(std::span<const double>(records.data(r, 0), cols));
            }
            const SpectrumSeries s = acc.result();
            return py::make_tuple(s.omega, s.value, *s.ci_halfwidth);
        },
        py::arg("records"), py::arg("dt"), py::arg("segment_bins"),
        "Averaged-segment periodogram: (omega, value, standard error).");

    m.def("caves_bound", &caves_bound, py::arg("transfer"));
    m.def("weak_bound", &weak_bound, py::arg("transfer"));
    m.def(
        "validate_amplifier",
        [](double transfer, double noise_flux, double gamma) {
            return limit_report(validate_amplifier(AmplifierModel{transfer, noise_flux, gamma}));
        },
        py::arg("transfer"), py::arg("noise_flux_per_s"), py::arg("gamma_per_s"));

    m.def(
        "spectrum_n0_coefficient",
        [](double ratio, double transfer, double noise_flux, double gamma, double efficiency) {
            return spectrum_n0_coefficient(ratio, AmplifierModel{transfer, noise_flux, gamma},
                                           DetectorModel{efficiency, 1.0});
        },
        py::arg("ratio"), py::arg("transfer"), py::arg("noise_flux_per_s"), py::arg("gamma_per_s"),
        py::arg("efficiency") = 1.0);

    m.def(
        "photocount_distribution",
        [](const std::string& law, double mean_integrated_flux, double efficiency) {
            DetectorModel det{efficiency, 1.0};
            CountDistribution d;
            if (law == "point") {
                d = photocount_distribution(PointMassIntensity{mean_integrated_flux}, det);
            } else if (law == "exponential") {
                d = photocount_distribution(ExponentialIntensity{mean_integrated_flux}, det);
            } else {
                throw std::invalid_argument("photocount_distribution: law must be 'point' or 'exponential'");
            }
            return d.probability;
        },
        py::arg("law"), py::arg("integrated_flux"), py::arg("efficiency") = 1.0);

    m.def(
        "run_config",
        [](const std::string& text) {
            const cli::ScenarioConfig cfg = cli::parse_config(nlohmann::json::parse(text));
            cli::RunArtifacts art;
            {
                py::gil_scoped_release release;
                art = cli::compute_run(cfg);
            }
            py::list checks;
            for (const auto& c : art.checks) {
                py::dict d;
                d["name"] = c.name;
                d["passed"] = c.passed;
                d["value"] = c.value;
                d["threshold"] = c.threshold;
                checks.append(d);
            }
            py::dict out;
            out["files"] = art.files;
            out["checks"] = checks;
            out["warnings"] = art.warnings;
            out["analytic_only"] = art.analytic_only;
            return out;
        },
        py::arg("config_json"), "Run a scenario configuration (JSON text) and return the rendered outputs.");

    m.def(
        "check_config",
        [](const std::string& text) {
            const cli::ScenarioConfig cfg = cli::parse_config(nlohmann::json::parse(text));
            return check_scenario(cfg.scenario, cfg.options).violations;
        },
        py::arg("config_json"), "Noise-limit violations of a scenario configuration.");
}
