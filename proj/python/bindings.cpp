#include "usc/circuit.hpp"
#include "usc/errors.hpp"
#include "usc/evolution.hpp"
#include "usc/qexport.hpp"
#include "usc/transfer.hpp"
#include "usc/umps.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <random>

namespace py = pybind11;
using namespace usc;

namespace {

// States cross the boundary as the same JSON text the CLI writes into checkpoints.
StateUnitary parse_state(const std::string& text) { return state_unitary_from_json(nlohmann::json::parse(text)); }

Matrix operator_from_name(const std::string& name) {
    if (name == "x") return pauli(1);
    if (name == "y") return pauli(2);
    if (name == "z") return pauli(3);
    if (name == "i") return pauli(0);
    throw ContractViolation("operator must be one of i, x, y, z");
}

py::dict simulate(int n_qubits, int m_u, double J, double g, double h, double dt, int order, double t_max,
                  const std::string& env_mode, int m_e, bool reference, int chi_max, std::uint64_t seed,
                  bool stop_after_threshold) {
    SimulationConfig c;
    c.ham = SpinHamiltonian{J, g, h};
    c.n_qubits = n_qubits;
    c.m_u = m_u;
    c.dt = dt;
    c.order = order;
    c.t_max = t_max;
    c.step.env_mode = env_mode_from_string(env_mode);
    c.step.m_e = m_e;
    c.reference = reference;
    c.reference_options.chi_max = chi_max;
    c.seed = seed;
    c.stop_after_threshold = stop_after_threshold;
    c.validate();

    SimulationResult r;
    {
        py::gil_scoped_release release;
        r = run_simulation(c);
    }
    const size_t n = r.records.size();
    py::array_t<double> t(n), sz(n), sx(n), entropy(n), m_accum(n), step_err(n), ref_err(n), ref_sz(n);
    auto tv = t.mutable_unchecked<1>(), szv = sz.mutable_unchecked<1>(), sxv = sx.mutable_unchecked<1>(),
         sv = entropy.mutable_unchecked<1>(), mv = m_accum.mutable_unchecked<1>(),
         ev = step_err.mutable_unchecked<1>(), rv = ref_err.mutable_unchecked<1>(), rz = ref_sz.mutable_unchecked<1>();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (size_t i = 0; i < n; ++i) {
        const auto& rec = r.records[i];
        const auto k = static_cast<py::ssize_t>(i);
        tv(k) = rec.t;
        szv(k) = rec.sz;
        sxv(k) = rec.sx;
        sv(k) = rec.entropy;
        mv(k) = rec.m_accum;
        ev(k) = rec.infidelity_step;
        rv(k) = rec.infidelity_ref.value_or(nan);
        rz(k) = rec.ref_sz.value_or(nan);
    }
    py::dict out;
    out["t"] = t;
    out["sz"] = sz;
    out["sx"] = sx;
    out["entropy"] = entropy;
    out["m_accum"] = m_accum;
    out["infidelity_step"] = step_err;
    out["infidelity_ref"] = ref_err;
    out["ref_sz"] = ref_sz;
    out["t_star"] = r.t_star ? py::cast(*r.t_star) : py::none();
    out["m_cross"] = r.m_cross ? py::cast(*r.m_cross) : py::none();
    out["failed"] = r.failed;
    out["failure"] = r.failure;
    out["final_state"] = to_json(r.final_state).dump();
    return out;
}

}  // namespace

PYBIND11_MODULE(_usc, m) {
    m.doc() = "Uniform sequential circuits for infinite-chain time evolution";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ContractViolation>(m, "ContractViolation", base.ptr());
    py::register_exception<DegenerateInput>(m, "DegenerateInput", base.ptr());
    py::register_exception<StepFailure>(m, "StepFailure", base.ptr());
    py::register_exception<ExportError>(m, "ExportError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    m.def("simulate", &simulate, py::arg("n_qubits") = 2, py::arg("m_u") = 1, py::arg("J") = 1.0, py::arg("g") = 1.0,
          py::arg("h") = 0.0, py::arg("dt") = 0.025, py::arg("order") = 2, py::arg("t_max") = 1.0,
          py::arg("env_mode") = "exact", py::arg("m_e") = 1, py::arg("reference") = true, py::arg("chi_max") = 64,
          py::arg("seed") = 7, py::arg("stop_after_threshold") = false,
          "Quench from the all-zeros product state. Returns per-step arrays and the final state as JSON.");

    m.def(
        "random_state",
        [](int n_qubits, int layers, const std::string& rep, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return to_json(random_state_unitary(n_qubits, layers, representation_from_string(rep), rng)).dump();
        },
        py::arg("n_qubits"), py::arg("layers") = 1, py::arg("rep") = "right", py::arg("seed") = 0);

    m.def(
        "expectation",
        [](const std::string& state, const std::string& op) {
            return local_expectation_mps(circuit_to_umps(parse_state(state)), operator_from_name(op));
        },
        py::arg("state"), py::arg("op"));

    m.def(
        "entropy", [](const std::string& state) { return entanglement_entropy(circuit_to_umps(parse_state(state))); },
        py::arg("state"));

    m.def(
        "fidelity_density",
        [](const std::string& a, const std::string& b) {
            return fidelity_density(circuit_to_umps(parse_state(a)), circuit_to_umps(parse_state(b))).fidelity;
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "fit_environment",
        [](const Vector& target, int m_e) {
            auto r = fit_layered_environment(target.normalized(), m_e);
            return py::make_tuple(r.err, r.fidelity, to_json(*r.env.circuit).dump());
        },
        py::arg("target"), py::arg("m_e"), "Layered-circuit fit of a normalized vector: (error, fidelity, circuit).");

    m.def(
        "squared_expectation_circuits",
        [](const std::string& state, const std::string& op, int m_e) {
            auto s = prepare_measurement(parse_state(state), m_e);
            return squared_expectation_from_circuits(s, operator_from_name(op));
        },
        py::arg("state"), py::arg("op") = "z", py::arg("m_e") = 1,
        "|<op>|^2 from ideal post-selection probabilities of the finite measurement circuits.");

    m.def(
        "observable_qasm",
        [](const std::string& state, const std::string& op, int m_e) {
            auto s = prepare_measurement(parse_state(state), m_e);
            return export_qasm(build_observable_circuit(s.u_right, s.u_left, operator_from_name(op), s.l_circuit,
                                                        s.r_circuit));
        },
        py::arg("state"), py::arg("op") = "z", py::arg("m_e") = 1);

    m.def(
        "qasm_zero_probability",
        [](const std::string& qasm) { return simulate_statevector(import_qasm(qasm)).probs[0]; }, py::arg("qasm"),
        "Ideal probability of the all-zeros outcome of an OpenQASM 2.0 circuit.");
}
