#include "usc/errors.hpp"
#include "usc/evolution.hpp"
#include "usc/gates.hpp"

#include "helpers.hpp"
#include "mps_oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace usc;
using namespace usc::test;

namespace {

Matrix bond_oracle(double J, double g, double h) {
    Matrix x(2, 2), z(2, 2), id = Matrix::Identity(2, 2);
    x << 0, 1, 1, 0;
    z << 1, 0, 0, -1;
    return J * kron(x, x) + g * kron(z, id) + h * kron(x, id);
}

// Open chain of L sites with the bond terms of pairs (j, j+1), j = 0..L-2.
Matrix open_chain_hamiltonian(const Matrix& bond, int L) {
    const Eigen::Index dim = Eigen::Index(1) << L;
    Matrix hm = Matrix::Zero(dim, dim);
    for (int j = 0; j + 1 < L; ++j) hm += embed({bond, {j, j + 1}}, L);
    return hm;
}

Vector sequential_step(Vector psi, const TrotterStep& step, int L) {
    for (int j = L - 2; j >= 0; --j) apply_op(psi, L, {step.gates[0], {j, j + 1}});
    if (step.order == 2)
        for (int j = 0; j + 1 < L; ++j) apply_op(psi, L, {step.gates[1], {j, j + 1}});
    return psi;
}

double step_error(const SpinHamiltonian& ham, double dt, int order, int L, const Vector& psi) {
    auto step = build_trotter_step(ham, dt, order);
    Matrix hm = open_chain_hamiltonian(bond_oracle(ham.J, ham.g, ham.h), L);
    Vector exact = taylor_expm(Complex(0.0, -dt) * hm) * psi;
    return (sequential_step(psi, step, L) - exact).norm();
}

Complex trotter_lambda(const StateUnitary& left, const StateUnitary& right, const TrotterStep& step) {
    return exact_environments(build_trotter_transfer(left, right, step.gates, step.order)).lambda;
}

// State with its second layer set to identity: a one-layer state written with two layers.
StateUnitary padded_one_layer(int nq, std::mt19937_64& rng) {
    auto base = random_state_unitary(nq, 1, Representation::Left, rng);
    auto su = StateUnitary::identity(nq, 2, Representation::Left);
    for (int k = 0; k < nq - 1; ++k) su.gates[k] = base.gates[k];
    return su;
}

double state_fidelity(const StateUnitary& a, const StateUnitary& b) {
    return fidelity_density(circuit_to_umps(a), circuit_to_umps(b)).fidelity;
}

}  // namespace

TEST(TrotterStep, GatesAreExponentialsOfTheBondHamiltonian) {
    SpinHamiltonian ham{0.7, -0.4, 0.25};
    Matrix hb = bond_oracle(ham.J, ham.g, ham.h);
    auto s1 = build_trotter_step(ham, 0.1, 1);
    ASSERT_EQ(s1.gates.size(), 1u);
    EXPECT_LT((s1.bond_hamiltonian - hb).norm(), 1e-15);
    EXPECT_LT((s1.gates[0] - taylor_expm(Complex(0.0, -0.1) * hb)).norm(), 1e-13);
    auto s2 = build_trotter_step(ham, 0.1, 2);
    ASSERT_EQ(s2.gates.size(), 2u);
    for (const auto& g : s2.gates) EXPECT_LT((g - taylor_expm(Complex(0.0, -0.05) * hb)).norm(), 1e-13);
}

TEST(TrotterStep, ZeroTimeGivesIdentityAndBadInputsThrow) {
    auto s = build_trotter_step(SpinHamiltonian{}, 0.0, 2);
    for (const auto& g : s.gates) EXPECT_LT((g - Matrix::Identity(4, 4)).norm(), 1e-15);
    EXPECT_THROW(build_trotter_step(SpinHamiltonian{}, -0.1, 2), ContractViolation);
    EXPECT_THROW(build_trotter_step(SpinHamiltonian{}, 0.1, 3), ContractViolation);
}

TEST(TrotterStep, MirroredStepConjugatesBySwap) {
    auto s = build_trotter_step(SpinHamiltonian{1.0, 0.3, 0.2}, 0.05, 2);
    auto m = mirrored(s);
    Matrix sw = swap_gate();
    for (size_t k = 0; k < s.gates.size(); ++k) EXPECT_LT((m.gates[k] - sw * s.gates[k] * sw).norm(), 1e-15);
    auto back = mirrored(m);
    EXPECT_LT((back.gates[0] - s.gates[0]).norm(), 1e-15);
}

TEST(TrotterStep, LocalErrorScalesWithOrderOnDenseChain) {
    // One sequential step against exp(-i dt H) on an open chain: the local error is O(dt^2) for
    // the single sweep and O(dt^3) for the symmetric pair of sweeps.
    std::mt19937_64 rng(401);
    SpinHamiltonian ham{1.0, 0.8, 0.3};
    const int L = 6;
    Vector psi = random_vector(Eigen::Index(1) << L, rng);
    const double dt = 0.02;
    double r1 = step_error(ham, dt, 1, L, psi) / step_error(ham, dt / 2, 1, L, psi);
    double r2 = step_error(ham, dt, 2, L, psi) / step_error(ham, dt / 2, 2, L, psi);
    EXPECT_NEAR(r1, 4.0, 0.4);
    EXPECT_NEAR(r2, 8.0, 0.8);
}

TEST(TrotterStep, FieldOnlyStepIsExact) {
    // Commuting on-site terms: the sweep is a product of single-site rotations.
    SpinHamiltonian ham{0.0, 0.6, -0.4};
    std::mt19937_64 rng(402);
    const int L = 5;
    Vector psi = random_vector(Eigen::Index(1) << L, rng);
    Matrix hm = open_chain_hamiltonian(bond_oracle(0.0, ham.g, ham.h), L);
    for (int order : {1, 2}) {
        Vector exact = taylor_expm(Complex(0.0, -0.3) * hm) * psi;
        EXPECT_LT((sequential_step(psi, build_trotter_step(ham, 0.3, order), L) - exact).norm(), 1e-12);
    }
}

TEST(TangentProjection, OutputIsTangentAndProjectionIsIdempotent) {
    std::mt19937_64 rng(403);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix u = random_unitary(4, rng);
        Matrix d = random_gaussian(4, 4, rng);
        Matrix p = tangent_project(d, u);
        Matrix a = u.adjoint() * p;
        EXPECT_LT((a + a.adjoint()).norm(), 1e-12);
        EXPECT_LT((tangent_project(p, u) - p).norm(), 1e-12);
    }
}

TEST(Adam, MatchesScalarReference) {
    std::mt19937_64 rng(404);
    AdamOptions opts{0.01, 0.9, 0.999, 1e-8};
    AdamState state{opts, {}, {}, 0};
    std::vector<Matrix> params = {random_gaussian(2, 3, rng)};
    std::vector<Matrix> ref = params;
    std::vector<double> m(12, 0.0), v(12, 0.0);
    for (int t = 1; t <= 4; ++t) {
        std::vector<Matrix> grads = {random_gaussian(2, 3, rng)};
        adam_update(state, params, grads, false);
        // Independent loop over the 12 real parameters.
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j)
                for (int part = 0; part < 2; ++part) {
                    const int idx = (i * 3 + j) * 2 + part;
                    const double g = part == 0 ? grads[0](i, j).real() : grads[0](i, j).imag();
                    m[idx] = 0.9 * m[idx] + 0.1 * g;
                    v[idx] = 0.999 * v[idx] + 0.001 * g * g;
                    const double mh = m[idx] / (1.0 - std::pow(0.9, t));
                    const double vh = v[idx] / (1.0 - std::pow(0.999, t));
                    const double step = 0.01 * mh / (std::sqrt(vh) + 1e-8);
                    ref[0](i, j) += part == 0 ? Complex(step, 0.0) : Complex(0.0, step);
                }
        EXPECT_LT((params[0] - ref[0]).norm(), 1e-13) << "t=" << t;
    }
    EXPECT_EQ(state.step, 4);
}

TEST(Adam, ReunitarizesAndRejectsShapeMismatch) {
    std::mt19937_64 rng(405);
    AdamState state{AdamOptions{}, {}, {}, 0};
    std::vector<Matrix> params = {random_unitary(4, rng)};
    adam_update(state, params, {random_gaussian(4, 4, rng)});
    EXPECT_LT((params[0].adjoint() * params[0] - Matrix::Identity(4, 4)).norm(), 1e-12);
    EXPECT_THROW(adam_update(state, params, {}), DimensionMismatch);
    EXPECT_THROW(adam_update(state, params, {Matrix::Zero(2, 2)}), DimensionMismatch);
}

TEST(LambdaGradient, MatchesCentralFiniteDifferences) {
    std::mt19937_64 rng(406);
    for (int nq : {2, 3}) {
        auto left = random_state_unitary(nq, 1, Representation::Left, rng);
        auto step = build_trotter_step(SpinHamiltonian{1.0, 0.7, 0.2}, 0.05, 2);
        // A right state close to the reflected one keeps the leading eigenvalue well separated.
        auto right = reflect(left);
        for (auto& g : right.gates) g = g * taylor_expm(Complex(0.0, 0.05) * random_hermitian(4, rng));
        auto t = build_trotter_transfer(left, right, step.gates, step.order);
        auto env = exact_environments(t);
        auto grad = gradient_lambda(t, env, right.gate_count());
        ASSERT_LT(std::abs(grad.lambda - env.lambda), 1e-10);
        const double eps = 1e-5;
        for (int k = 0; k < right.gate_count(); ++k) {
            Matrix d = random_gaussian(4, 4, rng);
            auto plus = right, minus = right;
            plus.gates[k] += eps * d;
            minus.gates[k] -= eps * d;
            Complex fd = (trotter_lambda(left, plus, step) - trotter_lambda(left, minus, step)) / (2.0 * eps);
            Complex an = (d.adjoint() * grad.w[k]).trace();
            EXPECT_LT(std::abs(fd - an), 1e-6 * std::max(1.0, std::abs(an))) << "nq=" << nq << " k=" << k;
        }
    }
}

TEST(AccumulatedError, HandComputedValues) {
    auto m = accumulated_error({std::sqrt(0.9), Complex(0.0, std::sqrt(0.8)), 1.0});
    ASSERT_EQ(m.size(), 4u);
    EXPECT_DOUBLE_EQ(m[0], 0.0);
    EXPECT_NEAR(m[1], 0.1, 1e-15);
    EXPECT_NEAR(m[2], 0.28, 1e-15);
    EXPECT_NEAR(m[3], 0.28, 1e-15);
}

TEST(AccumulatedError, IsMonotoneProperty) {
    std::mt19937_64 rng(407);
    std::uniform_real_distribution<double> u(0.95, 1.0), ph(0.0, 6.28);
    std::vector<Complex> ls;
    for (int i = 0; i < 200; ++i) ls.push_back(std::polar(u(rng), ph(rng)));
    auto m = accumulated_error(ls);
    for (size_t i = 1; i < m.size(); ++i) {
        EXPECT_GE(m[i], m[i - 1]);
        EXPECT_LE(m[i], 1.0);
    }
}

TEST(ThresholdCrossing, InterpolatesFirstUpwardCrossing) {
    std::vector<double> t = {0.0, 1.0, 2.0, 3.0};
    auto c = threshold_crossing(t, {0.0, 0.5, 1.5, 0.2}, 1.0);
    ASSERT_TRUE(c.has_value());
    EXPECT_NEAR(*c, 1.5, 1e-15);
    EXPECT_FALSE(threshold_crossing(t, {0.0, 0.1, 0.2, 0.3}, 1.0).has_value());
    EXPECT_THROW(threshold_crossing(t, {0.0}, 1.0), DimensionMismatch);
}

TEST(EvolutionStep, IdentityStepRecoversOppositeRepresentation) {
    std::mt19937_64 rng(408);
    auto step = build_trotter_step(SpinHamiltonian{}, 0.0, 2);
    StepOptions opts;
    // N_q = 2: every state is a dense circuit, so the conversion is exact.
    auto theta = random_state_unitary(2, 1, Representation::Left, rng);
    auto init = random_state_unitary(2, 1, Representation::Right, rng);
    auto res = evolution_step(theta, step, opts, nullptr, &init);
    EXPECT_EQ(res.theta.rep, Representation::Right);
    EXPECT_GE(std::norm(res.lambda), 1.0 - 1e-10);
    EXPECT_GE(state_fidelity(res.theta, theta), 1.0 - 1e-10);
    // N_q = 3: a one-layer state has an exact two-layer Right form.
    auto theta3 = padded_one_layer(3, rng);
    auto init3 = random_state_unitary(3, 2, Representation::Right, rng);
    opts.tol = 1e-15;
    auto res3 = evolution_step(theta3, step, opts, nullptr, &init3);
    EXPECT_GE(std::norm(res3.lambda), 1.0 - 1e-10);
}

TEST(EvolutionStep, RightInputIsTheMirrorOfTheLeftComputation) {
    std::mt19937_64 rng(409);
    auto step = build_trotter_step(SpinHamiltonian{1.0, 1.0, 0.0}, 0.05, 2);
    auto theta = random_state_unitary(2, 1, Representation::Left, rng);
    StepOptions opts;
    auto a = evolution_step(theta, step, opts);
    auto b = evolution_step(reflect(theta), mirrored(step), opts);
    EXPECT_EQ(b.theta.rep, Representation::Left);
    EXPECT_NEAR(std::abs(a.lambda), std::abs(b.lambda), 1e-12);
    auto rb = reflect(b.theta);
    for (int k = 0; k < a.theta.gate_count(); ++k) EXPECT_LT((rb.gates[k] - a.theta.gates[k]).norm(), 1e-9);
}

TEST(EvolutionStep, AdamAlsoImprovesOverlap) {
    std::mt19937_64 rng(410);
    auto step = build_trotter_step(SpinHamiltonian{}, 0.0, 2);
    auto theta = random_state_unitary(2, 1, Representation::Left, rng);
    auto init = random_state_unitary(2, 1, Representation::Right, rng);
    StepOptions opts;
    opts.optimizer = Optimizer::Adam;
    opts.max_iters = 300;
    opts.floor = 0.0;
    double before = std::norm(trotter_lambda(theta, init, step));
    auto res = evolution_step(theta, step, opts, nullptr, &init);
    EXPECT_GT(std::norm(res.lambda), before);
    EXPECT_EQ(res.iterations, 300);
}

TEST(EvolutionStep, StallBelowFloorIsAStepFailure) {
    std::mt19937_64 rng(411);
    auto step = build_trotter_step(SpinHamiltonian{}, 0.0, 2);
    StepOptions opts;
    opts.floor = 1.5;
    EXPECT_THROW(evolution_step(random_state_unitary(2, 1, Representation::Left, rng), step, opts), StepFailure);
    opts.floor = 0.9;
    opts.max_iters = 0;
    EXPECT_THROW(evolution_step(random_state_unitary(2, 1, Representation::Left, rng), step, opts),
                 ContractViolation);
}

TEST(EvolutionStep, OptionStringsRoundTrip) {
    for (auto m : {EnvMode::Exact, EnvMode::Layered}) EXPECT_EQ(env_mode_from_string(to_string(m)), m);
    for (auto o : {Optimizer::Adam, Optimizer::Lbfgs}) EXPECT_EQ(optimizer_from_string(to_string(o)), o);
    EXPECT_THROW(env_mode_from_string("dense"), ConfigError);
    EXPECT_THROW(optimizer_from_string("sgd"), ConfigError);
}

TEST(Simulation, FieldOnlyQuenchFollowsExactPrecession) {
    // H = h sum X: <sigma^z(t)> = cos(2 h t) from |0>, with no Trotter error and a product state.
    SimulationConfig c;
    c.ham = {0.0, 0.0, 0.5};
    c.n_qubits = 2;
    c.dt = 0.05;
    c.t_max = 0.5;
    c.reference = false;
    auto res = run_simulation(c);
    ASSERT_FALSE(res.failed);
    ASSERT_EQ(res.records.size(), 11u);
    for (const auto& r : res.records) {
        EXPECT_NEAR(r.sz, std::cos(2.0 * 0.5 * r.t), 1e-7) << "t=" << r.t;
        EXPECT_LT(r.entropy, 1e-6);
        EXPECT_LT(r.infidelity_step, 1e-10);
    }
}

TEST(Simulation, EarlyStepsAgreeWithReferenceAndRecordsAreConsistent) {
    SimulationConfig c;
    c.ham = {1.0, 1.0, 0.0};
    c.n_qubits = 2;
    c.dt = 0.025;
    c.t_max = 0.1;
    auto res = run_simulation(c);
    ASSERT_FALSE(res.failed);
    ASSERT_EQ(res.records.size(), 5u);
    EXPECT_EQ(res.records[0].t, 0.0);
    EXPECT_NEAR(res.records[0].sz, 1.0, 1e-14);
    for (size_t i = 1; i < res.records.size(); ++i) {
        const auto& r = res.records[i];
        EXPECT_EQ(r.odd, i % 2 == 0);
        ASSERT_TRUE(r.infidelity_ref.has_value());
        EXPECT_LT(*r.infidelity_ref, 1e-9);
        EXPECT_NEAR(r.sz, *r.ref_sz, 1e-4);  // Trotter error of the ansatz step, O(dt^2) per unit time
        EXPECT_GE(r.m_accum, res.records[i - 1].m_accum);
    }
    EXPECT_EQ(res.final_state.rep, Representation::Left);
}

TEST(Simulation, CallbackSeesEveryStepAndConfigIsValidated) {
    SimulationConfig c;
    c.n_qubits = 2;
    c.t_max = 0.05;
    c.reference = false;
    int calls = 0;
    run_simulation(c, [&](const EvolutionRecord& r, const StateUnitary& s, const StepResult&) {
        ++calls;
        EXPECT_EQ(s.rep, r.odd ? Representation::Left : Representation::Right);
    });
    EXPECT_EQ(calls, 2);
    SimulationConfig bad = c;
    bad.dt = 0.0;
    EXPECT_THROW(run_simulation(bad), ConfigError);
    bad = c;
    bad.n_qubits = 1;
    EXPECT_THROW(run_simulation(bad), ConfigError);
    bad = c;
    bad.order = 4;
    EXPECT_THROW(run_simulation(bad), ConfigError);
}

TEST(StepTransfer, ReproducesTheStepOverlapInBothFrames) {
    std::mt19937_64 rng(412);
    auto step = build_trotter_step(SpinHamiltonian{1.0, 1.0, 0.0}, 0.05, 2);
    auto theta = random_state_unitary(2, 1, Representation::Left, rng);
    StepOptions opts;
    auto a = evolution_step(theta, step, opts);
    EXPECT_LT(std::abs(exact_environments(step_transfer(theta, a.theta, step)).lambda - a.lambda), 1e-10);
    auto b = evolution_step(a.theta, step, opts);
    EXPECT_LT(std::abs(exact_environments(step_transfer(a.theta, b.theta, step)).lambda - b.lambda), 1e-10);
    EXPECT_THROW(step_transfer(theta, theta, step), ContractViolation);
}

TEST(FitLine, ExactLineAndResiduals) {
    auto f = fit_line({2.0, 3.0, 4.0}, {0.5, 1.2, 1.9});
    EXPECT_NEAR(f.slope, 0.7, 1e-14);
    EXPECT_NEAR(f.intercept, -0.9, 1e-14);
    EXPECT_LT(f.max_relative_residual, 1e-13);
    // Residuals of (0,0), (1,2), (2,2): fit y = x + 1/3, |r| = 1/3, 2/3, 1/3.
    auto g = fit_line({0.0, 1.0, 2.0}, {0.0, 2.0, 2.0});
    EXPECT_NEAR(g.slope, 1.0, 1e-14);
    EXPECT_NEAR(g.intercept, 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(g.max_relative_residual, 1.0 / 3.0, 1e-14);
    EXPECT_THROW(fit_line({1.0, 1.0}, {1.0, 2.0}), DegenerateInput);
    EXPECT_THROW(fit_line({1.0}, {1.0}), ContractViolation);
}
