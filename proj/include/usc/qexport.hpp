#pragma once

#include "usc/circuit.hpp"
#include "usc/transfer.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace usc {

enum class OpKind { Unitary, Controlled, Measure };
enum class OpSource { StateLeft, StateRight, Environment, Observable, Trotter, Ancilla, Imported };

std::string to_string(OpSource s);

/// One instruction of a finite circuit. Unitary ops carry a 2x2 or 4x4 matrix on `qubits`
/// (qubits[0] is the most significant index bit). Controlled ops apply `matrix` to `qubits` when
/// `control` reads 1. Measure ops read `qubits` in order into the outcome bitstring.
struct CircuitOp {
    OpKind kind = OpKind::Unitary;
    Matrix matrix;
    std::vector<int> qubits;
    int control = -1;
    OpSource source = OpSource::Imported;
    int index = 0;        ///< gate index in the source circuit
    bool dagger = false;  ///< op is the conjugate transpose of its source gate
};

struct GateCircuit {
    int n_qubits = 0;
    std::vector<CircuitOp> ops;

    /// Wire ranges, matrix shapes, unitarity to 1e-10 and terminal measurements.
    void validate() const;
    /// Measured qubits in outcome order; all qubits when the circuit has no Measure op.
    std::vector<int> measured() const;
};

/// Ops of W on wires 0..n-2, then `o` on all n wires, then V^dagger on wires 1..n-1, then a
/// measurement of every wire. The all-zeros probability is |<0|V^dagger O W|0>|^2.
GateCircuit build_functional_circuit(const StateUnitary& v, const std::vector<WireOp>& o,
                                     const StateUnitary& w);

/// Prepare |0, r> with r_circ on wires 1..n_env, run the transfer ops, undo l_circ on wires
/// 0..n_env-1 and measure everything: P(0...0) = |<l,0| ops |0,r>|^2.
GateCircuit build_transfer_circuit(const TransferOperator& t, const StateUnitary& l_circ,
                                   const StateUnitary& r_circ);

/// Transfer circuit of <l,0| U_R^dagger op U_L |0,r> on 2N_q - 1 qubits.
GateCircuit build_observable_circuit(const StateUnitary& uR, const StateUnitary& uL, const Matrix& op,
                                     const StateUnitary& l_circ, const StateUnitary& r_circ);

/// Appends an ancilla (the last wire): H, diag(1, e^{i phi}), every unitary of `circ` controlled
/// by the ancilla, H, then measures the ancilla alone. p(0) - p(1) = Re[e^{i phi} <0|A|0>].
GateCircuit hadamard_test(const GateCircuit& circ, double phi);

struct SimulatorOptions {
    int max_qubits = 24;
};

/// Probabilities over the measured qubits; index bit order follows `measured` (first = MSB).
struct OutcomeDistribution {
    std::vector<int> measured;
    std::vector<double> probs;

    double probability(const std::string& bits) const;
    /// p(0) - p(1) of a single measured qubit.
    double parity_difference() const;
};

/// State after all unitary and controlled ops, starting from |0...0>.
Vector final_state(const GateCircuit& circ, const SimulatorOptions& options = {});
/// <0...0| (all unitary ops) |0...0>.
Complex zero_amplitude(const GateCircuit& circ, const SimulatorOptions& options = {});
OutcomeDistribution simulate_statevector(const GateCircuit& circ, const SimulatorOptions& options = {});

struct ShotResult {
    std::map<std::string, long> counts;
    long shots = 0;
    std::uint64_t seed = 0;

    double frequency(const std::string& bits) const;
};

/// Independent draws from `dist` with a seeded mt19937_64.
ShotResult sample_shots(const OutcomeDistribution& dist, long shots, std::uint64_t seed);

nlohmann::json to_json(const ShotResult& r);

/// Seed of replica `replica` derived from a master seed.
std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica);

/// For every uncontrolled unitary op and each of its qubits q, if the next op touching q is also
/// an uncontrolled unitary, a random SU(2) v on q is absorbed as op <- v op and next <- next v^dagger.
/// The circuit unitary is unchanged.
GateCircuit randomize_gauges(const GateCircuit& circ, std::uint64_t seed);

/// OpenQASM 2.0 with qelib1 gates. Every op is compiled into Pauli-rotation factors; each factor
/// exp(i a P(x)Q) becomes basis changes, cx, rz(-2a), cx. Controlled ops use crz and a u1 phase on
/// the control. Throws ExportError naming the op when a matrix is not unitary.
std::string export_qasm(const GateCircuit& circ);

/// Reads the subset of OpenQASM 2.0 written by export_qasm (plus x, y, z, ry, rx, u3, cz, swap).
GateCircuit import_qasm(const std::string& text);

/// Everything needed to measure a local operator on one state with finite circuits: the state in
/// both representations and layered circuits of both environments of their transfer matrix.
struct MeasurementSetup {
    StateUnitary u_left;
    StateUnitary u_right;
    StateUnitary l_circuit;
    StateUnitary r_circuit;
    Complex lambda{0.0};      ///< overlap density between u_left and u_right
    double fit_error_l = 0.0;
    double fit_error_r = 0.0;
};

/// Finds the opposite representation of `theta` with a dt = 0 evolution step (exact for
/// N_q = 2) and fits both exact environments with m_e layers.
MeasurementSetup prepare_measurement(const StateUnitary& theta, int m_e, std::uint64_t seed = 11);

/// |<op>|^2 from ideal probabilities: P(0) of the op circuit divided by P(0) of the identity one,
/// which cancels |lambda <l|r>|^2.
double squared_expectation_from_circuits(const MeasurementSetup& s, const Matrix& op,
                                         const SimulatorOptions& options = {});

}  // namespace usc
