#pragma once

#include "usc/circuit.hpp"
#include "usc/linalg.hpp"

#include <optional>
#include <vector>

namespace usc {

/// Where a transfer-register op came from.
enum class OpRole { StateLeft, StateRight, Trotter, Observable };

struct OpTag {
    OpRole role = OpRole::StateLeft;
    int index = 0;       ///< gate index in the source circuit (or sweep index for Trotter ops)
    bool dagger = false; ///< op is the conjugate transpose of the source gate
};

enum class TransferKind { PlainMixed, TrotterMixed };

/// Mixed transfer matrix of one site, as a sequence of ops on n_env + 1 wires. The input
/// environment occupies wires 1..n_env (wire 0 is prepared in |0>); the output environment is
/// read from wires 0..n_env-1 after projecting the last wire onto <0|.
struct TransferOperator {
    TransferKind kind = TransferKind::PlainMixed;
    int n_qubits = 2;  ///< N_q of the state unitaries
    int n_env = 2;     ///< environment qubits: 2N_q - 2 (+ Trotter order)
    int physical_wire = 1;  ///< wire carrying the ket physical index into the bra circuit
    std::vector<WireOp> ops;
    std::vector<OpTag> tags;

    int n_wires() const { return n_env + 1; }
    Eigen::Index dim() const { return Eigen::Index(1) << n_env; }
};

/// T = <0_last| U_R^dagger U_L |0_first> on 2N_q - 2 qubits. uL must be a Left and uR a Right
/// representation with equal N_q.
TransferOperator build_transfer(const StateUnitary& uL, const StateUnitary& uR);
TransferOperator build_transfer(const DenseStateUnitary& uL, const DenseStateUnitary& uR);

/// Transfer matrix of <psi_R(uR)| u(dt) |psi_L(uL)> where u(dt) is a sequential Trotter
/// product. sweeps[0] is the bond gate of a descending sweep (applied first); for order 2,
/// sweeps[1] is the bond gate of the following ascending sweep. Each sweep adds one
/// environment qubit.
TransferOperator build_trotter_transfer(const StateUnitary& uL, const StateUnitary& uR,
                                        const std::vector<Matrix>& sweeps, int order);

/// Same transfer with `op` inserted on the physical wire (plain transfers only).
TransferOperator with_observable(const TransferOperator& t, const Matrix& op);

Vector transfer_apply(const TransferOperator& t, const Vector& v);
Vector transfer_apply_adjoint(const TransferOperator& t, const Vector& v);
Matrix transfer_dense(const TransferOperator& t);

/// Register state |0> (x) r and projector bra l (x) |0>: <l|T|r> = <bra| ops |ket>.
Vector transfer_ket(const TransferOperator& t, const Vector& r);
Vector transfer_bra(const TransferOperator& t, const Vector& l);

/// Matrix on the reversed-leg pair used for the ascending sweep:
/// out[(x, y), (z, w)] = b[(y, w), (x, z)].
Matrix reversed_leg_gate(const Matrix& b);

enum class EnvForm { Exact, Layered };
enum class EnvSide { Left, Right };

/// Fixed point of a transfer matrix. In layered form `vector` equals circuit |0...0>.
struct EnvironmentState {
    EnvForm form = EnvForm::Exact;
    EnvSide side = EnvSide::Right;
    Vector vector;
    std::optional<StateUnitary> circuit;
};

/// Sequential environment circuit on n qubits: m_e layers of ascending nearest-neighbour gates.
StateUnitary identity_environment_circuit(int n_qubits, int m_e);
EnvironmentState layered_environment(const StateUnitary& circuit, EnvSide side);

struct Environments {
    Complex lambda{0.0};
    EnvironmentState l;
    EnvironmentState r;
    Complex overlap{0.0};          ///< <l|r>
    bool degenerate = false;       ///< leading magnitude not separated
    bool ill_conditioned = false;  ///< |<l|r>| < 1e-8
    double residual_r = 0.0;
    double residual_l = 0.0;
};

/// Leading eigenpairs of T and T^dagger. Seeds default to |0...0>.
Environments exact_environments(const TransferOperator& t, const Vector* seed_r = nullptr,
                                const Vector* seed_l = nullptr,
                                const EigensolverOptions& options = {});

struct PowerMethodResult {
    EnvironmentState env;
    Complex lambda{0.0};
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;  ///< |lambda|^2 per iteration
};

/// Modified power method: one projected gradient-ascent step on the primed parameters per
/// iteration (followed by reunitarization), then the primed parameters become current.
/// side Right iterates T, side Left iterates T^dagger.
PowerMethodResult power_method_environment(const TransferOperator& t, const EnvironmentState& init,
                                           double eta, int max_iters, double tol = 1e-12);

/// lambda = <0| E^dagger(primed) X E(current) |0> with X = T (Right) or T^dagger (Left), and
/// dlambda = sum_k Tr[dU_k^dagger W_k] over the primed gates U_k.
struct PowerStepGradient {
    Complex lambda{0.0};
    std::vector<Matrix> w;
};
PowerStepGradient power_step_gradient(const TransferOperator& t, const StateUnitary& current,
                                      const StateUnitary& primed, EnvSide side);

struct FitOptions {
    double sweep_tol = 1e-11;  ///< stop when the fitted state moves less than this (2-norm) in a sweep
    int max_sweeps = 2000;
    bool warm_only = false;    ///< with an initial circuit, skip the staircase seed
};

struct FitResult {
    EnvironmentState env;
    double err = 0.0;       ///< || |target> - e^{i phi} |fit> || with the best phase phi
    double fidelity = 0.0;  ///< |<target|fit>|
    int sweeps = 0;
};

/// Polar-decomposition sweeps over the gates of a layered circuit to maximize |<target|fit>|.
/// `init` (if given) warm-starts the gates; otherwise identity gates.
FitResult fit_layered_environment(const Vector& target, int m_e,
                                  const StateUnitary* init = nullptr, const FitOptions& options = {});

/// Fits with M_E = 1..max_m_e. Each fit also tries the previous result padded with an identity
/// layer as a warm start, so the error never increases with M_E.
std::vector<FitResult> fit_layered_environment_scan(const Vector& target, int max_m_e,
                                                    const FitOptions& options = {});

/// ||T v||^2.
double post_selection_probability(const TransferOperator& t, const Vector& v);

/// <l,0| U_R^dagger op U_L |0,r> / (lambda <l|r>) with environments of the plain transfer.
Complex expectation_local(const TransferOperator& t, const Matrix& op, const Environments& env);
Complex expectation_local(const StateUnitary& uR, const StateUnitary& uL, const Matrix& op,
                          const Environments& env);

/// <l| T_A T^{delta-1} T_B |r> / (lambda^{delta+1} <l|r>), delta >= 1.
Complex correlation(const TransferOperator& t, const Matrix& op_a, const Matrix& op_b, int delta,
                    const Environments& env);

}  // namespace usc
