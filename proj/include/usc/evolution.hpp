#pragma once

#include "usc/circuit.hpp"
#include "usc/transfer.hpp"
#include "usc/umps.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace usc {

/// Gates of one sequential Trotter step. gates[0] is the bond gate of the descending sweep that
/// acts first; for order 2, gates[1] is the bond gate of the ascending sweep that follows.
struct TrotterStep {
    double dt = 0.0;
    int order = 2;
    Matrix bond_hamiltonian;
    std::vector<Matrix> gates;
};

/// h = J XX + g Z(x)I + h X(x)I (on-site terms on the left site), u = exp(-i dt' h) with
/// dt' = dt (order 1) or dt/2 per sweep (order 2). dt = 0 gives identity gates.
TrotterStep build_trotter_step(const SpinHamiltonian& ham, double dt, int order);

/// The same step seen in the spatially mirrored frame: every gate becomes SWAP u SWAP.
TrotterStep mirrored(const TrotterStep& step);

struct AdamOptions {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moments per complex parameter matrix; real and imaginary parts are separate parameters.
struct AdamState {
    AdamOptions options;
    std::vector<Matrix> m;
    std::vector<Matrix> v;  ///< v(i,j) holds (second moment of Re, second moment of Im)
    long step = 0;
};

/// Bias-corrected ADAM ascent step on every matrix, followed by reunitarization when
/// `reunitarize_after` is set.
void adam_update(AdamState& state, std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                 bool reunitarize_after = true);

/// lambda = <l|T|r> / <l|r> and, per gate k of the right-representation circuit uR (which enters
/// T conjugate-transposed), W_k with dlambda = Tr[dU_k^dagger W_k]. The ascent direction of
/// |lambda|^2 in the entries of U_k is 2 conj(lambda) W_k.
struct LambdaGradient {
    Complex lambda{0.0};
    std::vector<Matrix> w;
};
LambdaGradient gradient_lambda(const TransferOperator& t, const Environments& env, int n_gates);

enum class EnvMode { Exact, Layered };
enum class Optimizer { Adam, Lbfgs };

std::string to_string(EnvMode m);
std::string to_string(Optimizer o);
EnvMode env_mode_from_string(const std::string& s);
Optimizer optimizer_from_string(const std::string& s);

struct StepOptions {
    EnvMode env_mode = EnvMode::Exact;
    int m_e = 1;                 ///< layers of each environment circuit in layered mode
    Optimizer optimizer = Optimizer::Lbfgs;
    AdamOptions adam;
    int lbfgs_memory = 20;
    double tol = 1e-12;          ///< stop when |lambda|^2 changes by less than this
    int max_iters = 5000;
    int exact_refresh = 10;      ///< ADAM iterations between environment refreshes
    double floor = 0.9;          ///< |lambda|^2 below this at the end is a step failure
    FitOptions fit;
    int inner_fit_sweeps = 100;  ///< sweep cap for warm refits after the first one in a step
};

/// Warm-start data carried between steps of the same frame parity.
struct StepWarmStart {
    std::optional<Vector> r;
    std::optional<Vector> l;
    std::optional<StateUnitary> r_circuit;
    std::optional<StateUnitary> l_circuit;
};

struct StepResult {
    StateUnitary theta;          ///< evolved state, representation flipped w.r.t. the input
    Complex lambda{0.0};         ///< leading eigenvalue of the final Trotter transfer
    int iterations = 0;
    bool converged = false;
    double env_fit_error_l = 0.0;  ///< layered mode: final fit errors
    double env_fit_error_r = 0.0;
    double max_env_fit_error = 0.0;
    StepWarmStart warm;
    bool degenerate = false;
    bool ill_conditioned = false;
};

/// One step of the variational evolution: find theta' in the opposite representation that
/// maximizes |lambda|^2 of the Trotter transfer between theta and theta'. A Right-representation
/// input is reflected into the Left frame (with mirrored Trotter gates), evolved, and reflected
/// back. `init` (same representation as the result) defaults to the reflected input.
StepResult evolution_step(const StateUnitary& theta, const TrotterStep& step, const StepOptions& options,
                          const StepWarmStart* warm = nullptr, const StateUnitary* init = nullptr);

/// Trotter transfer of the step prev -> next in the frame evolution_step works in: a Right-
/// representation prev is reflected (together with next and the gates) into the Left frame.
TransferOperator step_transfer(const StateUnitary& prev, const StateUnitary& next, const TrotterStep& step);

/// M(t) = 1 - prod_{i<t} |lambda_i|^2, with M(0) = 0 as the first entry.
std::vector<double> accumulated_error(const std::vector<Complex>& lambdas);

struct EvolutionRecord {
    int step = 0;
    double t = 0.0;
    bool odd = false;            ///< produced by an odd step (result in Left representation)
    Complex lambda{1.0};
    double infidelity_step = 0.0;  ///< 1 - |lambda|^2
    double sz = 0.0;
    double sx = 0.0;
    double entropy = 0.0;
    double m_accum = 0.0;
    std::optional<double> infidelity_ref;  ///< 1 - F against the iTEBD reference
    std::optional<double> ref_sz;
    double max_env_fit_error = 0.0;
    int iterations = 0;
};

struct SimulationConfig {
    SpinHamiltonian ham;
    int n_qubits = 2;
    int m_u = 1;
    double dt = 0.025;
    int order = 2;
    double t_max = 1.0;
    StepOptions step;
    bool reference = true;
    ItebdOptions reference_options;
    double dt_ref = 0.01;
    double fidelity_threshold = 1e-4;
    bool stop_after_threshold = false;  ///< end the run once 1-F exceeds the threshold
    double stop_margin = 0.0;           ///< ... plus this much extra time
    double init_noise = 1e-3;           ///< size of the random kick applied to each step's initial guess
    std::uint64_t seed = 7;
    void validate() const;
};

struct SimulationResult {
    std::vector<EvolutionRecord> records;
    std::optional<double> t_star;  ///< interpolated crossing of 1-F = threshold
    std::optional<double> m_cross; ///< same crossing for M(t)
    bool failed = false;
    std::string failure;
    StateUnitary final_state;
};

/// Called after every step with the record, the new state and the step result.
using StepCallback = std::function<void(const EvolutionRecord&, const StateUnitary&, const StepResult&)>;

/// Evolve from identity circuits (the product state |...0...>) with alternating representation.
/// Step failures end the run with `failed` set and the partial records kept.
SimulationResult run_simulation(const SimulationConfig& config, const StepCallback& callback = {});

/// Linear interpolation of the first upward crossing of `threshold` by values(t).
std::optional<double> threshold_crossing(const std::vector<double>& t, const std::vector<double>& values,
                                         double threshold);

/// Least-squares line y = slope x + intercept; max_relative_residual = max_i |y_i - fit_i| / |y_i|.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_relative_residual = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace usc
