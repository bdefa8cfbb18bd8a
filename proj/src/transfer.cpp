#include "usc/transfer.hpp"

#include "usc/errors.hpp"
#include "usc/network.hpp"

#include <cmath>

namespace usc {

namespace {

void append_state(TransferOperator& t, const StateUnitary& su, int offset, OpRole role, bool dagger) {
    auto ops = state_ops(su, offset);
    auto order = su.application_order();
    if (!dagger) {
        for (size_t i = 0; i < ops.size(); ++i) {
            t.ops.push_back(ops[i]);
            t.tags.push_back({role, order[i], false});
        }
    } else {
        for (size_t i = ops.size(); i-- > 0;) {
            t.ops.push_back({ops[i].matrix.adjoint(), ops[i].wires});
            t.tags.push_back({role, order[i], true});
        }
    }
}

void check_pair(int nl, Representation rl, int nr, Representation rr) {
    if (rl != Representation::Left) throw ContractViolation("transfer: uL must be a Left representation");
    if (rr != Representation::Right) throw ContractViolation("transfer: uR must be a Right representation");
    if (nl != nr) throw DimensionMismatch("transfer: uL and uR have different N_q");
}

}  // namespace

TransferOperator build_transfer(const StateUnitary& uL, const StateUnitary& uR) {
    uL.validate();
    uR.validate();
    check_pair(uL.n_qubits, uL.rep, uR.n_qubits, uR.rep);
    const int nq = uL.n_qubits;
    TransferOperator t;
    t.kind = TransferKind::PlainMixed;
    t.n_qubits = nq;
    t.n_env = 2 * nq - 2;
    t.physical_wire = nq - 1;
    append_state(t, uL, 0, OpRole::StateLeft, false);
    append_state(t, uR, nq - 1, OpRole::StateRight, true);
    return t;
}

TransferOperator build_transfer(const DenseStateUnitary& uL, const DenseStateUnitary& uR) {
    check_pair(uL.n_qubits, uL.rep, uR.n_qubits, uR.rep);
    const int nq = uL.n_qubits;
    TransferOperator t;
    t.kind = TransferKind::PlainMixed;
    t.n_qubits = nq;
    t.n_env = 2 * nq - 2;
    t.physical_wire = nq - 1;
    t.ops.push_back(state_ops(uL, 0).front());
    t.tags.push_back({OpRole::StateLeft, 0, false});
    auto right = state_ops(uR, nq - 1).front();
    t.ops.push_back({right.matrix.adjoint(), right.wires});
    t.tags.push_back({OpRole::StateRight, 0, true});
    return t;
}

Matrix reversed_leg_gate(const Matrix& b) {
    if (b.rows() != 4 || b.cols() != 4) throw DimensionMismatch("reversed_leg_gate needs a 4x4 gate");
    Matrix v(4, 4);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z)
                for (int w = 0; w < 2; ++w) v(2 * x + y, 2 * z + w) = b(2 * y + w, 2 * x + z);
    return v;
}

TransferOperator build_trotter_transfer(const StateUnitary& uL, const StateUnitary& uR,
                                        const std::vector<Matrix>& sweeps, int order) {
    uL.validate();
    uR.validate();
    check_pair(uL.n_qubits, uL.rep, uR.n_qubits, uR.rep);
    if (order != 1 && order != 2) throw ContractViolation("Trotter order must be 1 or 2");
    if (static_cast<int>(sweeps.size()) != order)
        throw ContractViolation("number of Trotter sweep gates does not match the order");
    for (const auto& g : sweeps)
        if (g.rows() != 4 || g.cols() != 4) throw DimensionMismatch("Trotter gate is not 4x4");
    const int nq = uL.n_qubits;
    TransferOperator t;
    t.kind = TransferKind::TrotterMixed;
    t.n_qubits = nq;
    t.n_env = 2 * nq - 2 + order;
    t.physical_wire = nq - 1 + order;
    append_state(t, uL, 0, OpRole::StateLeft, false);
    t.ops.push_back({sweeps[0], {nq - 1, nq}});
    t.tags.push_back({OpRole::Trotter, 0, false});
    if (order == 2) {
        t.ops.push_back({reversed_leg_gate(sweeps[1]), {nq, nq + 1}});
        t.tags.push_back({OpRole::Trotter, 1, false});
    }
    append_state(t, uR, nq - 1 + order, OpRole::StateRight, true);
    return t;
}

TransferOperator with_observable(const TransferOperator& t, const Matrix& op) {
    if (t.kind != TransferKind::PlainMixed)
        throw ContractViolation("observables are inserted into plain mixed transfers only");
    if (op.rows() != 2 || op.cols() != 2) throw DimensionMismatch("observable must be 2x2");
    TransferOperator out = t;
    out.ops.clear();
    out.tags.clear();
    bool inserted = false;
    for (size_t i = 0; i < t.ops.size(); ++i) {
        if (!inserted && t.tags[i].role == OpRole::StateRight) {
            out.ops.push_back({op, {t.physical_wire}});
            out.tags.push_back({OpRole::Observable, 0, false});
            inserted = true;
        }
        out.ops.push_back(t.ops[i]);
        out.tags.push_back(t.tags[i]);
    }
    if (!inserted) {
        out.ops.push_back({op, {t.physical_wire}});
        out.tags.push_back({OpRole::Observable, 0, false});
    }
    return out;
}

Vector transfer_ket(const TransferOperator& t, const Vector& r) {
    if (r.size() != t.dim()) throw DimensionMismatch("environment vector has wrong dimension");
    Vector psi = Vector::Zero(2 * t.dim());
    psi.head(t.dim()) = r;
    return psi;
}

Vector transfer_bra(const TransferOperator& t, const Vector& l) {
    if (l.size() != t.dim()) throw DimensionMismatch("environment vector has wrong dimension");
    Vector psi = Vector::Zero(2 * t.dim());
    for (Eigen::Index i = 0; i < t.dim(); ++i) psi(2 * i) = l(i);
    return psi;
}

Vector transfer_apply(const TransferOperator& t, const Vector& v) {
    Vector psi = transfer_ket(t, v);
    apply_ops(psi, t.n_wires(), t.ops);
    Vector out(t.dim());
    for (Eigen::Index i = 0; i < t.dim(); ++i) out(i) = psi(2 * i);
    return out;
}

Vector transfer_apply_adjoint(const TransferOperator& t, const Vector& v) {
    Vector psi = transfer_bra(t, v);
    for (size_t i = t.ops.size(); i-- > 0;)
        apply_op(psi, t.n_wires(), {t.ops[i].matrix.adjoint(), t.ops[i].wires});
    return psi.head(t.dim());
}

Matrix transfer_dense(const TransferOperator& t) {
    Matrix m(t.dim(), t.dim());
    for (Eigen::Index c = 0; c < t.dim(); ++c) {
        Vector e = Vector::Zero(t.dim());
        e(c) = 1.0;
        m.col(c) = transfer_apply(t, e);
    }
    return m;
}

StateUnitary identity_environment_circuit(int n_qubits, int m_e) {
    // Ascending pairs (0,1), (1,2), ... within each layer, i.e. the Left sweep order.
    return StateUnitary::identity(n_qubits, m_e, Representation::Left);
}

EnvironmentState layered_environment(const StateUnitary& circuit, EnvSide side) {
    EnvironmentState e;
    e.form = EnvForm::Layered;
    e.side = side;
    e.vector = apply_to_state(circuit, zero_state(circuit.n_qubits));
    e.circuit = circuit;
    return e;
}

Environments exact_environments(const TransferOperator& t, const Vector* seed_r,
                                const Vector* seed_l, const EigensolverOptions& options) {
    const Eigen::Index dim = t.dim();
    Vector default_seed = zero_state(t.n_env);
    // A seed orthogonal to the fixed point would stall the Krylov space; mixing in a little of
    // |0...0> keeps every warm start generic.
    auto seed_of = [&](const Vector* s) -> Vector {
        if (!s || s->size() != dim || !(s->norm() > 0.0)) return default_seed;
        Vector v = *s / s->norm();
        v += 1e-3 * default_seed;
        return v / v.norm();
    };
    LinearMap right = [&t](const Vector& v) { return transfer_apply(t, v); };
    LinearMap left = [&t](const Vector& v) { return transfer_apply_adjoint(t, v); };
    Eigenpair er = leading_eigenpair(right, dim, seed_of(seed_r), options);
    Eigenpair el = leading_eigenpair(left, dim, seed_of(seed_l), options);

    Environments env;
    env.lambda = er.value;
    env.r.form = EnvForm::Exact;
    env.r.side = EnvSide::Right;
    env.r.vector = er.vector;
    env.l.form = EnvForm::Exact;
    env.l.side = EnvSide::Left;
    env.l.vector = el.vector;
    env.overlap = el.vector.dot(er.vector);
    env.degenerate = er.degenerate || el.degenerate;
    env.ill_conditioned = std::abs(env.overlap) < 1e-8;
    env.residual_r = er.residual;
    env.residual_l = el.residual;
    return env;
}

PowerStepGradient power_step_gradient(const TransferOperator& t, const StateUnitary& current,
                                      const StateUnitary& primed, EnvSide side) {
    if (current.n_qubits != t.n_env || primed.n_qubits != t.n_env)
        throw DimensionMismatch("environment circuit does not match the transfer environment size");
    const int n = t.n_wires();
    std::vector<WireOp> ops;
    int current_offset = side == EnvSide::Right ? 1 : 0;
    int primed_offset = side == EnvSide::Right ? 0 : 1;
    for (auto& op : state_ops(current, current_offset)) ops.push_back(op);
    if (side == EnvSide::Right) {
        for (const auto& op : t.ops) ops.push_back(op);
    } else {
        for (const auto& op : adjoint_ops(t.ops)) ops.push_back(op);
    }
    const size_t primed_start = ops.size();
    auto primed_ops = state_ops(primed, primed_offset);
    auto order = primed.application_order();
    std::vector<int> gate_of_op;
    for (size_t i = primed_ops.size(); i-- > 0;) {
        ops.push_back({primed_ops[i].matrix.adjoint(), primed_ops[i].wires});
        gate_of_op.push_back(order[i]);
    }
    std::vector<int> which;
    for (size_t i = primed_start; i < ops.size(); ++i) which.push_back(static_cast<int>(i));
    Vector zero = zero_state(n);
    auto envs = op_environments(ops, n, zero, zero, which);

    PowerStepGradient g;
    g.lambda = network_value(ops, n, zero, zero);
    g.w.assign(primed.gates.size(), Matrix::Zero(4, 4));
    for (size_t i = 0; i < envs.size(); ++i) g.w[gate_of_op[i]] += envs[i].transpose();
    return g;
}

PowerMethodResult power_method_environment(const TransferOperator& t, const EnvironmentState& init,
                                           double eta, int max_iters, double tol) {
    if (!init.circuit) throw ContractViolation("power method needs a layered initial environment");
    if (!(eta > 0.0)) throw ContractViolation("power method step size must be positive");
    StateUnitary current = *init.circuit;
    StateUnitary primed = current;
    PowerMethodResult res;
    double previous = -1.0;
    for (int it = 0; it < max_iters; ++it) {
        auto g = power_step_gradient(t, current, primed, init.side);
        double value = std::norm(g.lambda);
        res.history.push_back(value);
        res.lambda = g.lambda;
        res.iterations = it + 1;
        if (previous >= 0.0 && std::abs(value - previous) < tol) {
            res.converged = true;
            break;
        }
        previous = value;
        for (size_t k = 0; k < primed.gates.size(); ++k) {
            Matrix grad = 2.0 * std::conj(g.lambda) * g.w[k];
            Matrix step = tangent_project(grad, primed.gates[k]);
            primed.gates[k] = reunitarize(primed.gates[k] + eta * step);
        }
        current = primed;
    }
    res.env = layered_environment(current, init.side);
    return res;
}

namespace {

// One descending staircase layer that prepares the bond-dimension-2 truncation of psi from
// |0...0>, built from a left-to-right SVD sweep. Gate k acts on wires (k, k+1); it takes the
// fresh wire k and the bond carried on wire k+1 to the final state of wire k+1 and the next bond.
std::vector<Matrix> staircase_layer(const Vector& psi, int n) {
    std::vector<Matrix> gates(static_cast<size_t>(n - 1), Matrix::Identity(4, 4));
    auto complete = [](const Matrix& cols) {
        Matrix w = Matrix::Zero(4, 4);
        w.leftCols(cols.cols()) = cols;
        return polar_optimal_unitary(w, true);
    };
    if (n == 2) {
        gates[0] = complete(psi / psi.norm());
        return gates;
    }
    // rem holds the unprocessed part: rows (bond, next site), columns the remaining sites.
    Eigen::Index rest = Eigen::Index(1) << (n - 2);
    Matrix rem(4, rest);
    for (Eigen::Index top = 0; top < 4; ++top)
        for (Eigen::Index r = 0; r < rest; ++r) rem(top, r) = psi(top * rest + r);
    for (int k = 0; k <= n - 3; ++k) {
        Eigen::JacobiSVD<Matrix> svd(rem, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::Index keep = std::min<Eigen::Index>(2, svd.singularValues().size());
        Matrix iso = Matrix::Zero(4, 2);
        iso.leftCols(keep) = svd.matrixU().leftCols(keep);
        gates[k] = complete(iso);
        Matrix next = Matrix::Zero(2, rem.cols());
        next.topRows(keep) = svd.singularValues().head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
        // Split off the next site: rows (bond, site), columns the rest.
        rest /= 2;
        rem.resize(4, rest);
        for (Eigen::Index b = 0; b < 2; ++b)
            for (Eigen::Index s = 0; s < 2; ++s)
                for (Eigen::Index r = 0; r < rest; ++r) rem(2 * b + s, r) = next(b, s * rest + r);
    }
    Vector last(4);
    for (Eigen::Index i = 0; i < 4; ++i) last(i) = rem(i, 0);
    const double norm = last.norm();
    gates[n - 2] = norm > 0.0 ? complete(last / norm) : Matrix::Identity(4, 4);
    return gates;
}

// Layer-by-layer seed: each new layer prepares the bond-dimension-2 truncation of what the
// layers found so far leave unexplained. The first layer found is applied last.
StateUnitary staircase_seed(const Vector& target, int n, int m_e, Representation rep) {
    if (rep == Representation::Left) {
        // Build the descending seed for the qubit-reversed target and mirror it.
        Vector reversed = qubit_reversal(n) * target;
        return reflect(staircase_seed(reversed, n, m_e, Representation::Right));
    }
    StateUnitary circ = StateUnitary::identity(n, m_e, Representation::Right);
    const int per = circ.gates_per_layer();
    Vector rem = target;
    for (int j = 0; j < m_e; ++j) {
        if (std::abs(rem(0)) > 1.0 - 1e-15) break;
        auto layer = staircase_layer(rem, n);
        const int slot = m_e - 1 - j;
        for (int k = 0; k < per; ++k) circ.gates[slot * per + k] = layer[k];
        StateUnitary one = StateUnitary::identity(n, 1, Representation::Right);
        one.gates = layer;
        apply_ops(rem, n, adjoint_ops(state_ops(one)));
    }
    return circ;
}

FitResult polar_sweeps(const Vector& target, StateUnitary circ, const FitOptions& options) {
    const int n = circ.n_qubits;
    Vector previous = apply_to_state(circ, zero_state(n));
    const auto order = circ.application_order();
    FitResult res;
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        auto ops = state_ops(circ);
        const size_t nops = ops.size();
        // Betas only depend on gates later in the sweep, which are not yet updated.
        std::vector<Vector> betas(nops);
        Vector beta = target;
        for (size_t k = nops; k-- > 0;) {
            betas[k] = beta;
            apply_op(beta, n, {ops[k].matrix.adjoint(), ops[k].wires});
        }
        Vector alpha = zero_state(n);
        for (size_t k = 0; k < nops; ++k) {
            Matrix m = reduced_overlap(betas[k], alpha, n, ops[k].wires);
            Matrix g = polar_optimal_unitary(m.conjugate(), true);
            circ.gates[order[k]] = g;
            apply_op(alpha, n, {g, ops[k].wires});
        }
        res.sweeps = sweep + 1;
        // Norm of the change rather than 1 - |overlap|, which bottoms out at ~1e-8 in the state.
        double change = (alpha - previous).norm();
        previous = alpha;
        if (change < options.sweep_tol) break;
    }
    res.env = layered_environment(circ, EnvSide::Right);
    const Complex ov = res.env.vector.dot(target);
    res.fidelity = std::abs(ov);
    // Direct difference: sqrt(2 - 2F) cannot resolve errors below ~1e-8.
    const Complex phase = res.fidelity > 0.0 ? ov / res.fidelity : Complex(1.0);
    res.err = (target - phase * res.env.vector).norm();
    return res;
}

}  // namespace

FitResult fit_layered_environment(const Vector& target, int m_e, const StateUnitary* init,
                                  const FitOptions& options) {
    int n = 0;
    while ((Eigen::Index(1) << n) < target.size()) ++n;
    if ((Eigen::Index(1) << n) != target.size() || n < 2)
        throw DimensionMismatch("fit target dimension must be 2^n with n >= 2");
    if (std::abs(target.norm() - 1.0) > 1e-8) throw ContractViolation("fit target must be normalized");
    if (m_e < 1) throw ContractViolation("environment circuit needs M_E >= 1");
    if (init && (init->n_qubits != n || init->layers != m_e))
        throw DimensionMismatch("initial environment circuit has wrong size");

    // Identity gates are a saddle of the overlap, so the sweeps start from the staircase seed and,
    // when given, also from the warm start; the better result wins.
    if (init && options.warm_only) return polar_sweeps(target, *init, options);
    FitResult best = polar_sweeps(target, staircase_seed(target, n, m_e, identity_environment_circuit(n, 1).rep), options);
    if (init) {
        FitResult warm = polar_sweeps(target, *init, options);
        if (warm.fidelity > best.fidelity) best = warm;
    }
    return best;
}

std::vector<FitResult> fit_layered_environment_scan(const Vector& target, int max_m_e, const FitOptions& options) {
    if (max_m_e < 1) throw ContractViolation("environment circuit needs M_E >= 1");
    std::vector<FitResult> out;
    for (int m = 1; m <= max_m_e; ++m) {
        if (out.empty()) {
            out.push_back(fit_layered_environment(target, m, nullptr, options));
            continue;
        }
        StateUnitary padded = *out.back().env.circuit;
        padded.layers = m;
        padded.gates.resize(static_cast<size_t>(m * padded.gates_per_layer()), Matrix::Identity(4, 4));
        FitResult r = fit_layered_environment(target, m, &padded, options);
        if (r.err > out.back().err) {
            // Polar sweeps never lower the overlap, so this only happens through rounding.
            r = out.back();
            r.env.circuit = padded;
        }
        out.push_back(std::move(r));
    }
    return out;
}

double post_selection_probability(const TransferOperator& t, const Vector& v) {
    return transfer_apply(t, v).squaredNorm();
}

Complex expectation_local(const TransferOperator& t, const Matrix& op, const Environments& env) {
    if (std::abs(env.lambda) <= 1e-6)
        throw StatesTooDifferent("mixed-representation estimate needs |lambda| > 1e-6");
    if (std::abs(env.overlap) == 0.0) throw ConditioningError("<l|r> vanishes");
    auto to = with_observable(t, op);
    Complex num = env.l.vector.dot(transfer_apply(to, env.r.vector));
    return num / (env.lambda * env.overlap);
}

Complex expectation_local(const StateUnitary& uR, const StateUnitary& uL, const Matrix& op,
                          const Environments& env) {
    return expectation_local(build_transfer(uL, uR), op, env);
}

Complex correlation(const TransferOperator& t, const Matrix& op_a, const Matrix& op_b, int delta,
                    const Environments& env) {
    if (delta < 1) throw ContractViolation("correlation needs delta >= 1");
    if (std::abs(env.lambda) <= 1e-6)
        throw StatesTooDifferent("mixed-representation estimate needs |lambda| > 1e-6");
    if (std::abs(env.overlap) == 0.0) throw ConditioningError("<l|r> vanishes");
    auto ta = with_observable(t, op_a);
    auto tb = with_observable(t, op_b);
    Vector v = transfer_apply(tb, env.r.vector);
    for (int i = 1; i < delta; ++i) v = transfer_apply(t, v);
    v = transfer_apply(ta, v);
    return env.l.vector.dot(v) / (std::pow(env.lambda, delta + 1) * env.overlap);
}

}  // namespace usc
