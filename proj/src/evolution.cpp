#include "usc/evolution.hpp"

#include "usc/errors.hpp"
#include "usc/gates.hpp"
#include "usc/network.hpp"

#include <cmath>
#include <random>

namespace usc {

TrotterStep build_trotter_step(const SpinHamiltonian& ham, double dt, int order) {
    ham.validate();
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw ContractViolation("Trotter step needs dt >= 0");
    if (order != 1 && order != 2) throw ContractViolation("Trotter order must be 1 or 2");
    const Matrix id = Matrix::Identity(2, 2);
    TrotterStep s;
    s.dt = dt;
    s.order = order;
    s.bond_hamiltonian =
        ham.J * kron(pauli(1), pauli(1)) + ham.g * kron(pauli(3), id) + ham.h * kron(pauli(1), id);
    const double sweep_dt = order == 1 ? dt : dt / 2.0;
    Matrix u = expm_hermitian(s.bond_hamiltonian, Complex(0.0, -sweep_dt));
    s.gates.assign(order, u);
    return s;
}

TrotterStep mirrored(const TrotterStep& step) {
    TrotterStep m = step;
    const Matrix sw = swap_gate();
    m.bond_hamiltonian = sw * step.bond_hamiltonian * sw;
    for (auto& g : m.gates) g = sw * g * sw;
    return m;
}

void adam_update(AdamState& state, std::vector<Matrix>& params, const std::vector<Matrix>& grads,
                 bool reunitarize_after) {
    if (params.size() != grads.size()) throw DimensionMismatch("adam_update: parameter/gradient count mismatch");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
            state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
        }
    }
    if (state.m.size() != params.size()) throw DimensionMismatch("adam_update: state shaped for other parameters");
    const auto& o = state.options;
    ++state.step;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
    for (size_t k = 0; k < params.size(); ++k) {
        const Matrix& g = grads[k];
        if (g.rows() != params[k].rows() || g.cols() != params[k].cols())
            throw DimensionMismatch("adam_update: gradient shape mismatch");
        Matrix& m = state.m[k];
        Matrix& v = state.v[k];
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
                const double gr = g(i, j).real(), gi = g(i, j).imag();
                m(i, j) = o.beta1 * m(i, j) + (1.0 - o.beta1) * g(i, j);
                v(i, j) = Complex(o.beta2 * v(i, j).real() + (1.0 - o.beta2) * gr * gr,
                                  o.beta2 * v(i, j).imag() + (1.0 - o.beta2) * gi * gi);
                const double step_re = o.lr * (m(i, j).real() / c1) / (std::sqrt(v(i, j).real() / c2) + o.eps);
                const double step_im = o.lr * (m(i, j).imag() / c1) / (std::sqrt(v(i, j).imag() / c2) + o.eps);
                params[k](i, j) += Complex(step_re, step_im);
            }
        if (reunitarize_after) params[k] = reunitarize(params[k]);
    }
}

LambdaGradient gradient_lambda(const TransferOperator& t, const Environments& env, int n_gates) {
    const Complex overlap = env.l.vector.dot(env.r.vector);
    if (std::abs(overlap) < 1e-8) throw ConditioningError("gradient_lambda: |<l|r>| < 1e-8");
    Vector ket = transfer_ket(t, env.r.vector);
    Vector bra = transfer_bra(t, env.l.vector);
    std::vector<int> which;
    for (size_t i = 0; i < t.ops.size(); ++i)
        if (t.tags[i].role == OpRole::StateRight) which.push_back(static_cast<int>(i));
    LambdaGradient g;
    g.w.assign(static_cast<size_t>(n_gates), Matrix::Zero(4, 4));
    g.lambda = network_value(t.ops, t.n_wires(), ket, bra) / overlap;
    if (which.empty()) return g;
    auto envs = op_environments(t.ops, t.n_wires(), ket, bra, which);
    for (size_t i = 0; i < which.size(); ++i) {
        const int gate = t.tags[which[i]].index;
        if (gate < 0 || gate >= n_gates) throw ContractViolation("gradient_lambda: gate index out of range");
        g.w[gate] += envs[i].transpose() / overlap;
    }
    return g;
}

std::string to_string(EnvMode m) { return m == EnvMode::Exact ? "exact" : "layered"; }
std::string to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "lbfgs"; }

EnvMode env_mode_from_string(const std::string& s) {
    if (s == "exact") return EnvMode::Exact;
    if (s == "layered") return EnvMode::Layered;
    throw ConfigError("unknown environment mode '" + s + "' (expected exact or layered)");
}

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "adam") return Optimizer::Adam;
    if (s == "lbfgs") return Optimizer::Lbfgs;
    throw ConfigError("unknown optimizer '" + s + "' (expected adam or lbfgs)");
}

namespace {

struct StepContext {
    const StateUnitary& left;
    const TrotterStep& step;
    const StepOptions& options;
    StepWarmStart warm;
    double fit_l = 0.0, fit_r = 0.0, fit_max = 0.0;
    bool degenerate = false, ill_conditioned = false;
    bool refreshed = false;

    TransferOperator transfer(const StateUnitary& right) const {
        return build_trotter_transfer(left, right, step.gates, step.order);
    }

    Environments refresh(const TransferOperator& t) {
        const Vector* sr = warm.r ? &*warm.r : nullptr;
        const Vector* sl = warm.l ? &*warm.l : nullptr;
        Environments env = exact_environments(t, sr, sl);
        warm.r = env.r.vector;
        warm.l = env.l.vector;
        degenerate = env.degenerate;
        ill_conditioned = env.ill_conditioned;
        if (options.env_mode == EnvMode::Layered) {
            const StateUnitary* ir = warm.r_circuit ? &*warm.r_circuit : nullptr;
            const StateUnitary* il = warm.l_circuit ? &*warm.l_circuit : nullptr;
            // Later refreshes inside one step move the target only slightly; warm sweeps suffice.
            FitOptions fit = options.fit;
            fit.warm_only = ir && il && refreshed;
            if (fit.warm_only) fit.max_sweeps = std::min(fit.max_sweeps, options.inner_fit_sweeps);
            FitResult fr = fit_layered_environment(env.r.vector, options.m_e, ir, fit);
            FitResult fl = fit_layered_environment(env.l.vector, options.m_e, il, fit);
            refreshed = true;
            warm.r_circuit = *fr.env.circuit;
            warm.l_circuit = *fl.env.circuit;
            fit_r = fr.err;
            fit_l = fl.err;
            fit_max = std::max({fit_max, fr.err, fl.err});
            env.r = fr.env;
            env.r.side = EnvSide::Right;
            env.l = fl.env;
            env.l.side = EnvSide::Left;
            env.overlap = env.l.vector.dot(env.r.vector);
        }
        return env;
    }
};


/// Riemannian gradient of |lambda|^2 in the body frame: U_k -> U_k exp(A_k), A_k anti-Hermitian.
std::vector<Matrix> body_gradient(const StateUnitary& u, const LambdaGradient& g) {
    std::vector<Matrix> out(u.gates.size());
    for (size_t k = 0; k < u.gates.size(); ++k) {
        Matrix x = u.gates[k].adjoint() * (2.0 * std::conj(g.lambda) * g.w[k]);
        out[k] = 0.5 * (x - x.adjoint());
    }
    return out;
}

double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.size(); ++k) s += (a[k].adjoint() * b[k]).trace().real();
    return s;
}

StateUnitary retract(const StateUnitary& u, const std::vector<Matrix>& d, double alpha) {
    StateUnitary out = u;
    for (size_t k = 0; k < d.size(); ++k) {
        // exp(alpha D) with D anti-Hermitian: D = i H.
        Matrix h = Complex(0.0, -1.0) * d[k];
        h = (0.5 * (h + h.adjoint())).eval();
        out.gates[k] = u.gates[k] * expm_hermitian(h, Complex(0.0, alpha));
    }
    return out;
}

struct LbfgsOutcome {
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory BFGS ascent on a product of unitary groups with Armijo backtracking. Vectors
/// live in the Lie algebra at the identity, so no transport between tangent spaces is needed.
template <class Eval>
LbfgsOutcome lbfgs_maximize(StateUnitary& cur, LambdaGradient& g, const StepOptions& options, Eval&& eval) {
    LbfgsOutcome out;
    std::vector<std::vector<Matrix>> s_hist, y_hist;
    std::vector<double> rho_hist;
    double f = std::norm(g.lambda);
    std::vector<Matrix> grad = body_gradient(cur, g);
    const int memory = std::max(1, options.lbfgs_memory);
    for (int it = 0; it < options.max_iters; ++it) {
        out.iterations = it + 1;
        // Two-loop recursion for -f; it is linear in q, so seeding with the ascent gradient
        // yields the ascent direction directly.
        std::vector<Matrix> q = grad;
        std::vector<double> alphas(s_hist.size());
        for (size_t i = s_hist.size(); i-- > 0;) {
            alphas[i] = rho_hist[i] * inner(s_hist[i], q);
            for (size_t k = 0; k < q.size(); ++k) q[k] -= alphas[i] * y_hist[i][k];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) gamma = inner(s_hist.back(), s_hist.back()) * rho_hist.back();
        for (auto& m : q) m *= gamma;
        for (size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * inner(y_hist[i], q);
            for (size_t k = 0; k < q.size(); ++k) q[k] += (alphas[i] - beta) * s_hist[i][k];
        }
        double slope = inner(grad, q);
        if (!(slope > 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            q = grad;
            slope = inner(grad, grad);
        }
        if (slope <= 0.0) {
            out.converged = true;
            break;
        }
        double alpha = 1.0;
        if (s_hist.empty()) alpha = std::min(1.0, 0.1 / std::sqrt(slope));
        bool accepted = false;
        StateUnitary trial;
        LambdaGradient tg;
        double tf = f;
        for (int bt = 0; bt < 40; ++bt) {
            trial = retract(cur, q, alpha);
            tg = eval(trial);
            tf = std::norm(tg.lambda);
            if (tf >= f + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (s_hist.empty()) {
                // No ascent even along the gradient: stationary to working precision.
                out.converged = true;
                break;
            }
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        }
        std::vector<Matrix> new_grad = body_gradient(trial, tg);
        std::vector<Matrix> step(q.size()), dy(q.size());
        for (size_t k = 0; k < q.size(); ++k) {
            step[k] = alpha * q[k];
            dy[k] = -(new_grad[k] - grad[k]);
        }
        const double sy = inner(step, dy);
        if (sy > 1e-300) {
            s_hist.push_back(step);
            y_hist.push_back(dy);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        const double change = tf - f;
        cur = trial;
        g = tg;
        grad = new_grad;
        f = tf;
        if (std::abs(change) < options.tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace

StepResult evolution_step(const StateUnitary& theta, const TrotterStep& step, const StepOptions& options,
                          const StepWarmStart* warm, const StateUnitary* init) {
    theta.validate();
    if (options.max_iters < 1) throw ContractViolation("evolution step needs max_iters >= 1");
    if (options.env_mode == EnvMode::Layered && options.m_e < 1) throw ContractViolation("layered mode needs M_E >= 1");
    const bool mirror = theta.rep == Representation::Right;
    const StateUnitary left = mirror ? reflect(theta) : theta;
    const TrotterStep frame_step = mirror ? mirrored(step) : step;

    StateUnitary cur = init ? (mirror ? reflect(*init) : *init) : reflect(left);
    if (cur.rep != Representation::Right || cur.n_qubits != theta.n_qubits || cur.gates.size() != theta.gates.size())
        throw ContractViolation("evolution step: initial guess does not match the state layout");

    StepContext ctx{left, frame_step, options, warm ? *warm : StepWarmStart{}};
    const int n_gates = cur.gate_count();
    StepResult res;

    auto objective = [&](const StateUnitary& right, Environments& env) {
        auto t = ctx.transfer(right);
        env = ctx.refresh(t);
        return gradient_lambda(t, env, n_gates);
    };

    Environments env;
    LambdaGradient g = objective(cur, env);
    double prev = std::norm(g.lambda);
    if (options.optimizer == Optimizer::Lbfgs) {
        LbfgsOutcome o = lbfgs_maximize(cur, g, options, [&](const StateUnitary& right) {
            Environments e;
            return objective(right, e);
        });
        res.iterations = o.iterations;
        res.converged = o.converged;
    } else {
        AdamState adam{options.adam, {}, {}, 0};
        const int refresh = std::max(1, options.exact_refresh);
        for (int it = 0; it < options.max_iters; ++it) {
            std::vector<Matrix> grads(static_cast<size_t>(n_gates));
            for (int k = 0; k < n_gates; ++k)
                grads[k] = tangent_project(2.0 * std::conj(g.lambda) * g.w[k], cur.gates[k]);
            adam_update(adam, cur.gates, grads);
            res.iterations = it + 1;
            if (options.env_mode == EnvMode::Layered || (it + 1) % refresh == 0)
                g = objective(cur, env);
            else
                g = gradient_lambda(ctx.transfer(cur), env, n_gates);
            const double value = std::norm(g.lambda);
            if (std::abs(value - prev) < options.tol) {
                // Confirm against freshly computed environments before accepting.
                g = objective(cur, env);
                if (std::abs(std::norm(g.lambda) - value) < options.tol) {
                    res.converged = true;
                    break;
                }
            }
            prev = std::norm(g.lambda);
        }
    }

    // Report the exact leading eigenvalue of the final transfer in both modes.
    auto t_final = ctx.transfer(cur);
    const Vector* sr = ctx.warm.r ? &*ctx.warm.r : nullptr;
    const Vector* sl = ctx.warm.l ? &*ctx.warm.l : nullptr;
    Environments final_env = exact_environments(t_final, sr, sl);
    res.lambda = final_env.lambda;
    if (!(std::norm(res.lambda) >= options.floor))
        throw StepFailure("evolution step stalled at |lambda|^2 = " + std::to_string(std::norm(res.lambda)) +
                              "; try a smaller dt",
                          std::norm(res.lambda));
    res.theta = mirror ? reflect(cur) : cur;
    res.env_fit_error_l = ctx.fit_l;
    res.env_fit_error_r = ctx.fit_r;
    res.max_env_fit_error = ctx.fit_max;
    res.warm = ctx.warm;
    res.degenerate = ctx.degenerate || final_env.degenerate;
    res.ill_conditioned = ctx.ill_conditioned || final_env.ill_conditioned;
    return res;
}

TransferOperator step_transfer(const StateUnitary& prev, const StateUnitary& next, const TrotterStep& step) {
    if (prev.rep == next.rep) throw ContractViolation("step transfer: states need opposite representations");
    if (prev.rep == Representation::Right) {
        const TrotterStep m = mirrored(step);
        return build_trotter_transfer(reflect(prev), reflect(next), m.gates, m.order);
    }
    return build_trotter_transfer(prev, next, step.gates, step.order);
}

std::vector<double> accumulated_error(const std::vector<Complex>& lambdas) {
    std::vector<double> m = {0.0};
    double prod = 1.0;
    for (const auto& l : lambdas) {
        prod *= std::norm(l);
        m.push_back(std::max(m.back(), 1.0 - prod));
    }
    return m;
}

std::optional<double> threshold_crossing(const std::vector<double>& t, const std::vector<double>& values,
                                         double threshold) {
    if (t.size() != values.size()) throw DimensionMismatch("threshold_crossing: length mismatch");
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i] <= threshold) continue;
        if (i == 0) return t[0];
        const double f = (threshold - values[i - 1]) / (values[i] - values[i - 1]);
        return t[i - 1] + f * (t[i] - t[i - 1]);
    }
    return std::nullopt;
}

void SimulationConfig::validate() const {
    ham.validate();
    if (n_qubits < 2) throw ConfigError("ansatz.n_qubits must be >= 2");
    if (m_u < 1) throw ConfigError("ansatz.m_u must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("trotter.dt must be positive");
    if (order != 1 && order != 2) throw ConfigError("trotter.order must be 1 or 2");
    if (!(t_max >= 0.0)) throw ConfigError("t_max must be non-negative");
    if (step.env_mode == EnvMode::Layered && step.m_e < 1) throw ConfigError("env.m_e must be >= 1");
    if (!(step.tol > 0.0)) throw ConfigError("thresholds.inner must be positive");
    if (!(step.fit.sweep_tol > 0.0)) throw ConfigError("thresholds.env_sweep must be positive");
    if (!(fidelity_threshold > 0.0)) throw ConfigError("thresholds.fidelity must be positive");
    if (reference && !(dt_ref > 0.0)) throw ConfigError("reference.dt_ref must be positive");
    if (reference && reference_options.chi_max < 1) throw ConfigError("reference.chi_max must be >= 1");
}

namespace {

/// Multiply every gate by exp(i eps H) with H a random Hermitian matrix. Starting each step slightly
/// off the reflected state keeps the optimizer from sitting on the saddle where wires that are still
/// unentangled (e.g. from the product initial state) receive exactly zero gradient.
StateUnitary perturbed(StateUnitary su, double eps, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& g : su.gates) {
        Matrix h(g.rows(), g.cols());
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = Complex(n(rng), n(rng));
        h = (0.5 * (h + h.adjoint())).eval();
        g = g * expm_hermitian(h, Complex(0.0, eps));
    }
    return su;
}

void fill_observables(EvolutionRecord& rec, const StateUnitary& theta, const UniformMps* reference) {
    UniformMps mps = circuit_to_umps(theta);
    rec.sz = local_expectation_mps(mps, pauli(3)).real();
    rec.sx = local_expectation_mps(mps, pauli(1)).real();
    rec.entropy = entropy_of_spectrum(mps.schmidt[0]);
    if (reference) {
        rec.infidelity_ref = std::max(0.0, 1.0 - fidelity_density(mps, *reference).fidelity);
        rec.ref_sz = local_expectation_mps(*reference, pauli(3)).real();
    }
}

}  // namespace

SimulationResult run_simulation(const SimulationConfig& config, const StepCallback& callback) {
    config.validate();
    SimulationResult out;
    StateUnitary theta = StateUnitary::identity(config.n_qubits, config.m_u, Representation::Left);
    const TrotterStep step = build_trotter_step(config.ham, config.dt, config.order);

    std::optional<UniformMps> ref;
    int substeps = 1;
    if (config.reference) {
        Vector up(2);
        up << 1.0, 0.0;
        ref = to_two_site_cell(product_state_mps(up));
        substeps = std::max(1, static_cast<int>(std::ceil(config.dt / config.dt_ref - 1e-9)));
    }

    EvolutionRecord rec0;
    fill_observables(rec0, theta, ref ? &*ref : nullptr);
    out.records.push_back(rec0);

    const int n_steps = static_cast<int>(std::lround(config.t_max / config.dt));
    std::mt19937_64 rng(config.seed);
    StepWarmStart warm[2];
    double prod = 1.0;
    std::optional<double> crossed_at;
    for (int n = 1; n <= n_steps; ++n) {
        const int parity = (n - 1) % 2;
        StepResult res;
        try {
            StateUnitary init = reflect(theta);
            if (config.init_noise > 0.0) init = perturbed(init, config.init_noise, rng);
            res = evolution_step(theta, step, config.step, &warm[parity], &init);
        } catch (const StepFailure& e) {
            out.failed = true;
            out.failure = e.what();
            break;
        }
        warm[parity] = res.warm;
        theta = res.theta;
        if (ref) ref = itebd_evolve(*ref, config.ham, config.dt / substeps, substeps, config.reference_options).mps;

        EvolutionRecord rec;
        rec.step = n;
        rec.t = n * config.dt;
        rec.odd = parity == 1;
        rec.lambda = res.lambda;
        rec.infidelity_step = 1.0 - std::norm(res.lambda);
        prod *= std::norm(res.lambda);
        rec.m_accum = std::max(out.records.back().m_accum, 1.0 - prod);
        rec.max_env_fit_error = res.max_env_fit_error;
        rec.iterations = res.iterations;
        fill_observables(rec, theta, ref ? &*ref : nullptr);
        out.records.push_back(rec);
        if (callback) callback(rec, theta, res);

        if (config.stop_after_threshold && rec.infidelity_ref && *rec.infidelity_ref > config.fidelity_threshold) {
            if (!crossed_at) crossed_at = rec.t;
            if (rec.t >= *crossed_at + config.stop_margin - 1e-12) break;
        }
    }

    std::vector<double> ts, fs, ms;
    for (const auto& r : out.records) {
        ts.push_back(r.t);
        ms.push_back(r.m_accum);
        fs.push_back(r.infidelity_ref.value_or(0.0));
    }
    if (config.reference) out.t_star = threshold_crossing(ts, fs, config.fidelity_threshold);
    out.m_cross = threshold_crossing(ts, ms, config.fidelity_threshold);
    out.final_state = theta;
    return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionMismatch("fit_line: x and y differ in length");
    if (x.size() < 2) throw ContractViolation("fit_line needs at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (std::abs(den) <= 1e-300) throw DegenerateInput("fit_line: all x values coincide");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    for (size_t i = 0; i < x.size(); ++i) {
        const double r = std::abs(y[i] - (f.slope * x[i] + f.intercept));
        f.max_relative_residual = std::max(f.max_relative_residual, y[i] != 0.0 ? r / std::abs(y[i]) : r);
    }
    return f;
}

}  // namespace usc
