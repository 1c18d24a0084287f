#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "toaloha/analysis.hpp"
#include "toaloha/harness.hpp"
#include "toaloha/validation.hpp"

namespace py = pybind11;
using namespace toaloha;

namespace {

py::object opt_number(double x)
{
    return std::isnan(x) ? py::none() : py::cast(x);
}

py::dict row_dict(const harness::ResultRow& r)
{
    py::dict d;
    d["scenario_id"] = r.scenario_id;
    d["replication"] = r.replication;
    d["seed"] = r.seed;
    d["label"] = r.label;
    d["policy"] = r.policy;
    d["traffic"] = r.traffic;
    d["K"] = r.K;
    d["alpha"] = r.alpha;
    d["q"] = r.q;
    d["lambda"] = opt_number(r.lambda);
    d["n"] = opt_number(r.n);
    d["p"] = opt_number(r.p);
    d["kappa"] = opt_number(r.kappa);
    d["slots"] = r.slots;
    d["throughput"] = r.throughput;
    d["avg_delay"] = opt_number(r.avg_delay);
    d["avg_backlog"] = r.avg_backlog;
    d["mean_monitoring"] = r.mean_monitoring;
    d["service_completion_slot"] = r.service_completion_slot ? py::cast(*r.service_completion_slot) : py::none();
    d["predicted_throughput"] = opt_number(r.predicted_throughput);
    d["predicted_delay"] = opt_number(r.predicted_delay);
    d["error"] = r.error.empty() ? py::none() : py::cast(r.error);
    return d;
}

harness::ExperimentSpec spec_from(const std::string& text, std::optional<std::uint64_t> seed, unsigned threads)
{
    auto spec = harness::parse_spec(text);
    if (seed)
        spec.base_seed = *seed;
    if (threads > 0)
        spec.threads = threads;
    return spec;
}

} // namespace

PYBIND11_MODULE(_toaloha, m)
{
    m.doc() = "Slotted ALOHA with time offsets";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

    py::class_<SlotConfig>(m, "SlotConfig")
        .def_readonly("K", &SlotConfig::K)
        .def_readonly("alpha", &SlotConfig::alpha)
        .def_readonly("T", &SlotConfig::T)
        .def_readonly("Ts", &SlotConfig::Ts)
        .def_readonly("gamma", &SlotConfig::gamma)
        .def("__repr__", [](const SlotConfig& c) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "SlotConfig(K=%d, alpha=%g, Ts=%g)", c.K, c.alpha, c.Ts);
            return std::string(buf);
        });

    m.def("derive_slot_params", &derive_slot_params, py::arg("K"), py::arg("alpha"), py::arg("T") = 1.0);

    m.def(
        "throughput_saturated",
        [](std::int64_t n, double p, int K, double alpha, double q) {
            return analysis::throughput_with_misdetection(analysis::PopulationMode::Finite, n, p, q,
                                                          derive_slot_params(K, alpha));
        },
        py::arg("n"), py::arg("p"), py::arg("K") = 1, py::arg("alpha") = 0.0, py::arg("q") = 0.0);
    m.def(
        "throughput_poisson",
        [](double eta, int K, double alpha, double q) {
            return analysis::throughput_with_misdetection(analysis::PopulationMode::PoissonLimit, 0, eta, q,
                                                          derive_slot_params(K, alpha));
        },
        py::arg("eta"), py::arg("K") = 1, py::arg("alpha") = 0.0, py::arg("q") = 0.0);
    m.def("throughput_upper_bound", &analysis::throughput_upper_bound, py::arg("x"));
    m.def(
        "avg_delay_saturated",
        [](std::int64_t n, double p, int K, double alpha) {
            return analysis::avg_delay_saturated(n, p, derive_slot_params(K, alpha));
        },
        py::arg("n"), py::arg("p"), py::arg("K") = 1, py::arg("alpha") = 0.0);
    m.def(
        "optimal_p",
        [](std::int64_t n, int K, double alpha) { return analysis::optimal_p_for_n(n, derive_slot_params(K, alpha)); },
        py::arg("n"), py::arg("K") = 1, py::arg("alpha") = 0.0);
    m.def(
        "optimal_kappa",
        [](int K) {
            const auto r = analysis::optimal_kappa(K);
            return py::dict(py::arg("K") = r.K, py::arg("kappa") = r.kappa, py::arg("tau_star") = r.tau_star);
        },
        py::arg("K"));
    m.def(
        "optimal_config_for_alpha",
        [](double alpha) {
            const auto r = analysis::optimal_config_for_alpha(alpha);
            return py::dict(py::arg("K") = r.K, py::arg("kappa") = r.kappa,
                            py::arg("tau_star") = r.tau_star_absolute);
        },
        py::arg("alpha"));
    m.def(
        "stability_threshold",
        [](int K, double alpha, std::int64_t m_max) {
            return analysis::stability_threshold(derive_slot_params(K, alpha), m_max);
        },
        py::arg("K"), py::arg("alpha"), py::arg("m_max") = analysis::kStabilitySearchBound,
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "run_spec",
        [](const std::string& text, std::optional<std::uint64_t> seed, unsigned threads) {
            const auto spec = spec_from(text, seed, threads);
            std::vector<harness::ResultRow> rows;
            {
                py::gil_scoped_release release;
                rows = harness::run_experiment(spec);
            }
            py::list out;
            for (const auto& r : rows)
                out.append(row_dict(r));
            return out;
        },
        py::arg("text"), py::arg("seed") = py::none(), py::arg("threads") = 0u,
        "Runs every point of an experiment spec and returns one dict per replication.");
    m.def("csv_header", &harness::csv_header);

    m.def(
        "validate",
        [](const std::string& filter, std::uint64_t seed, unsigned threads) {
            validation::Options opt;
            opt.filter = filter;
            opt.seed = seed;
            opt.threads = threads;
            std::vector<validation::CriterionResult> results;
            {
                py::gil_scoped_release release;
                results = validation::run(opt);
            }
            py::list out;
            for (const auto& r : results)
                out.append(py::dict(py::arg("id") = r.id, py::arg("group") = r.group, py::arg("title") = r.title,
                                    py::arg("passed") = r.passed, py::arg("detail") = r.detail,
                                    py::arg("seconds") = r.seconds));
            return out;
        },
        py::arg("filter") = "", py::arg("seed") = validation::Options{}.seed, py::arg("threads") = 0u);
}
