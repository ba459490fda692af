// Python bindings: thin wrappers over the library's main operations. Reports
// cross the boundary as plain dicts built from their JSON form.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xvabsde/analysis.hpp"
#include "xvabsde/errors.hpp"
#include "xvabsde/json_io.hpp"
#include "xvabsde/lsmc.hpp"
#include "xvabsde/parallel.hpp"
#include "xvabsde/pde.hpp"
#include "xvabsde/version.hpp"
#include "xvabsde/xva.hpp"

namespace py = pybind11;
using namespace xvabsde;

namespace {

py::object json_to_py(const Json& j) {
    switch (j.type()) {
        case Json::value_t::null: return py::none();
        case Json::value_t::boolean: return py::bool_(j.get<bool>());
        case Json::value_t::number_integer: return py::int_(j.get<long long>());
        case Json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
        case Json::value_t::number_float: return py::float_(j.get<double>());
        case Json::value_t::string: return py::str(j.get<std::string>());
        case Json::value_t::array: {
            py::list out;
            for (const Json& item : j) out.append(json_to_py(item));
            return out;
        }
        case Json::value_t::object: {
            py::dict out;
            for (auto it = j.begin(); it != j.end(); ++it) {
                out[py::str(it.key())] = json_to_py(it.value());
            }
            return out;
        }
        default: return py::none();
    }
}

RunConfig config_from_text(const std::string& text) { return parse_run_config(text); }

SweepEngine sweep_engine(const std::string& name) {
    if (name == "pde") return SweepEngine::Pde;
    if (name == "lsmc") return SweepEngine::Lsmc;
    throw ConfigError("unknown sweep engine: " + name);
}

HedgeEngine hedge_engine(const std::string& name) {
    if (name == "auto") return HedgeEngine::Auto;
    if (name == "pde") return HedgeEngine::Pde;
    if (name == "ode") return HedgeEngine::Ode;
    if (name == "lsmc") return HedgeEngine::Lsmc;
    throw ConfigError("unknown hedge engine: " + name);
}

Side side_of(const std::string& name) {
    if (name == "seller" || name == "plus") return Side::Plus;
    if (name == "buyer" || name == "minus") return Side::Minus;
    throw ConfigError("unknown side: " + name);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Defaultable OTC derivative pricing with asymmetric rates";
    m.attr("__version__") = XVABSDE_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

    py::class_<RunConfig>(m, "RunConfig")
        .def_property_readonly("json", [](const RunConfig& c) { return json_to_py(to_json(c)); })
        .def_property("seed",
                      [](const RunConfig& c) { return c.numerics.seed; },
                      [](RunConfig& c, std::uint64_t seed) { c.numerics.seed = seed; })
        .def_property("n_paths",
                      [](const RunConfig& c) { return c.numerics.n_paths; },
                      [](RunConfig& c, int n) { c.numerics.n_paths = n; })
        .def_property("n_steps",
                      [](const RunConfig& c) { return c.numerics.n_steps; },
                      [](RunConfig& c, int n) { c.numerics.n_steps = n; });

    m.def("load_config", &config_from_text, py::arg("text"),
          "Parse a JSON run-configuration document");
    m.def("load_config_file", &load_run_config, py::arg("path"));
    m.def("reference_config", []() {
        RunConfig c;
        c.market = reference_market();
        c.contract.T = 1.0;
        c.contract.payoff = CallPayoff{100.0};
        c.contract.closeout = CloseoutSpec{0.5, 0.5, c.market.alpha};
        return c;
    });

    m.def("set_max_workers", &set_max_workers, py::arg("workers"));

    m.def("validate", [](const RunConfig& c) {
        Json body = to_json(validate_market(c.market));
        return json_to_py(body);
    });

    m.def(
        "price",
        [](const RunConfig& c, const std::string& engine) {
            if (engine == "pde") {
                const PdeSolution sol =
                    solve_pde_system(c.market, c.contract, pde_grid(c.numerics));
                const double spot = c.market.S0[0];
                return json_to_py(Json{{"p_lower", sol.value(PdeField::UMinus, 0.0, spot)},
                                       {"p_upper", sol.value(PdeField::UPlus, 0.0, spot)},
                                       {"se_lower", 0.0},
                                       {"se_upper", 0.0},
                                       {"engine", "pde"}});
            }
            Json body = to_json(price_bounds(c.market, c.contract, c.numerics));
            body["engine"] = "lsmc";
            return json_to_py(body);
        },
        py::arg("config"), py::arg("engine") = "lsmc");

    m.def("xva", [](const RunConfig& c) {
        return json_to_py(to_json(compute_xva(c.market, c.contract, c.numerics)));
    });
    m.def("classical_xva", [](const RunConfig& c) {
        return json_to_py(to_json(compute_classical_xva(c.market, c.contract, c.numerics)));
    });
    m.def("telescoping", [](const RunConfig& c) {
        return json_to_py(to_json(telescoping_check(c.market, c.contract, c.numerics)));
    });
    m.def("girsanov", [](const RunConfig& c) {
        return json_to_py(to_json(girsanov_diagnostic(c.market, c.contract, c.numerics)));
    });

    m.def("check_noarb", [](const RunConfig& c) {
        const std::vector<double> grid = uniform_grid(c.contract.T, c.numerics.n_steps);
        return json_to_py(to_json(check_noarb(c.market, grid)));
    });

    m.def("ordering", [](const RunConfig& c) {
        return json_to_py(to_json(ordering_check(c.market, c.contract, c.numerics)));
    });

    m.def(
        "sweep",
        [](const RunConfig& c, const std::vector<double>& eps, int order,
           const std::string& engine) {
            return json_to_py(to_json(
                epsilon_sweep(c.market, c.contract, eps, order, sweep_engine(engine), c.numerics)));
        },
        py::arg("config"), py::arg("eps"), py::arg("order") = 0, py::arg("engine") = "pde");

    m.def(
        "replicate",
        [](const RunConfig& c, int eval_paths, const std::string& side,
           const std::string& engine) {
            return json_to_py(to_json(replicate(c.market, c.contract, c.numerics, eval_paths,
                                                side_of(side), hedge_engine(engine))));
        },
        py::arg("config"), py::arg("eval_paths") = 1000, py::arg("side") = "seller",
        py::arg("engine") = "auto");
}
