#pragma once

#include "usc/gates.hpp"
#include "usc/linalg.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace usc {

/// Right: the fresh |0> enters the last wire, the physical site leaves on wire 0, and each layer
/// sweeps from the fresh wire to the physical one: pairs (n-2,n-1), ..., (0,1).
/// Left: mirror image (fresh on wire 0, physical on the last wire, pairs (0,1), (1,2), ...).
/// Sweeping the other way would cut the fresh qubit off from the physical wire within a layer and
/// cap the Schmidt rank of a one-layer circuit well below 2^(n-1).
enum class Representation { Left, Right };

Representation flipped(Representation r);
std::string to_string(Representation r);
Representation representation_from_string(const std::string& s);

/// A wire-local operator on a register: `matrix` acts on `wires`, with wires[0] the most
/// significant index bit of the matrix.
struct WireOp {
    Matrix matrix;
    std::vector<int> wires;
};

/// N_q-qubit sequential unitary made of M_U layers of N_q - 1 two-qubit gates.
struct StateUnitary {
    int n_qubits = 2;
    int layers = 1;
    Representation rep = Representation::Right;
    /// gates[layer * (n_qubits - 1) + k] acts on wires (k, k+1).
    std::vector<Matrix> gates;

    static StateUnitary identity(int n_qubits, int layers, Representation rep);
    int gates_per_layer() const { return n_qubits - 1; }
    int gate_count() const { return static_cast<int>(gates.size()); }
    /// Lower wire of the pair gate g acts on.
    int gate_pair(int g) const { return g % gates_per_layer(); }
    /// Indices into `gates` in the order they are applied.
    std::vector<int> application_order() const;
    void validate() const;
};

struct DenseStateUnitary {
    int n_qubits = 2;
    Representation rep = Representation::Right;
    Matrix matrix;
};

/// Ops applying su in time order, with the circuit's wire 0 placed at register wire `offset`.
std::vector<WireOp> state_ops(const StateUnitary& su, int offset = 0);
std::vector<WireOp> state_ops(const DenseStateUnitary& su, int offset = 0);

DenseStateUnitary build_dense(const StateUnitary& su);

Vector apply_to_state(const StateUnitary& su, const Vector& psi);

StateUnitary adjoint(const StateUnitary& su);

/// Independent real parameters: 15 (N_q-1) M_U in the angle form.
int parameter_count(const StateUnitary& su);
/// Real numbers stored by the dense 4x4 gate form: 32 (N_q-1) M_U.
int stored_real_count(const StateUnitary& su);

/// Spatial mirror: turns a Right representation of a state into a Left representation of the
/// mirrored state and vice versa. Pair k maps to N_q-2-k, each gate is conjugated by SWAP.
StateUnitary reflect(const StateUnitary& su);
DenseStateUnitary reflect(const DenseStateUnitary& su);

/// Dense permutation reversing the order of n qubits.
Matrix qubit_reversal(int n_qubits);

/// Apply one op to a state of n_wires qubits (wire 0 = most significant bit).
void apply_op(Vector& psi, int n_wires, const WireOp& op);
void apply_ops(Vector& psi, int n_wires, const std::vector<WireOp>& ops);
/// Dense matrix of a single op on n_wires qubits.
Matrix embed(const WireOp& op, int n_wires);

/// Reversed order, each op conjugate-transposed.
std::vector<WireOp> adjoint_ops(const std::vector<WireOp>& ops);
std::vector<WireOp> shifted(std::vector<WireOp> ops, int offset);

template <class Rng>
StateUnitary random_state_unitary(int n_qubits, int layers, Representation rep, Rng& rng) {
    StateUnitary su = StateUnitary::identity(n_qubits, layers, rep);
    for (auto& g : su.gates) g = random_unitary(4, rng);
    return su;
}

/// Versioned JSON document: n_qubits, layers, representation and the gates as 32 reals each
/// (row-major, re/im interleaved) printed with 17 significant digits.
nlohmann::json to_json(const StateUnitary& su);
StateUnitary state_unitary_from_json(const nlohmann::json& j);

}  // namespace usc
