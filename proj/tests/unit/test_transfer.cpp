#include "usc/errors.hpp"
#include "usc/network.hpp"
#include "usc/transfer.hpp"

#include "helpers.hpp"
#include "mps_oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace usc;
using namespace usc::test;

namespace {

// Gates exp(-i eps H) with random Hermitian H: weakly entangling states keep overlaps sizeable.
StateUnitary near_identity_circuit(int nq, int layers, Representation rep, double eps, std::mt19937_64& rng) {
    auto su = StateUnitary::identity(nq, layers, rep);
    for (auto& g : su.gates) g = taylor_expm(Complex(0.0, -eps) * random_hermitian(4, rng));
    return su;
}

Matrix two_site_gate(double dt, std::mt19937_64& rng) {
    return taylor_expm(Complex(0.0, -dt) * random_hermitian(4, rng));
}

// Dense operator of a two-qubit gate on sites (j, j+1) of an L-site chain.
void apply_pair(Vector& psi, int L, int j, const Matrix& g) { apply_op(psi, L, {g, {j, j + 1}}); }

// <psi_B| U |psi_A> on an open chain of L sites. Order 1: descending sweep of `a`
// (highest pair first). Order 2: then an ascending sweep of `b`.
Complex chain_overlap(const Tensor& ta, const Tensor& tb, const Vector& la, const Vector& ra,
                      const Vector& lb, const Vector& rb, int L, const Matrix& a, const Matrix* b) {
    Vector ket = chain_state(std::vector<Tensor>(L, ta), la, ra);
    Vector bra = chain_state(std::vector<Tensor>(L, tb), lb, rb);
    for (int j = L - 2; j >= 0; --j) apply_pair(ket, L, j, a);
    if (b)
        for (int j = 0; j <= L - 2; ++j) apply_pair(ket, L, j, *b);
    return bra.dot(ket);
}

}  // namespace

TEST(Transfer, PlainEqualsDenseMixedTransfer) {
    std::mt19937_64 rng(201);
    for (int nq : {2, 3}) {
        auto uL = random_state_unitary(nq, 2, Representation::Left, rng);
        auto uR = random_state_unitary(nq, 2, Representation::Right, rng);
        auto t = build_transfer(uL, uR);
        EXPECT_EQ(t.n_env, 2 * nq - 2);
        Tensor a = left_tensor(build_dense(uL).matrix), b = right_tensor(build_dense(uR).matrix);
        EXPECT_LT((transfer_dense(t) - dense_mixed_transfer(a, b)).norm(), 1e-12) << nq;
        auto td = build_transfer(build_dense(uL), build_dense(uR));
        EXPECT_LT((transfer_dense(td) - transfer_dense(t)).norm(), 1e-12) << nq;
    }
}

TEST(Transfer, AdjointApplication) {
    std::mt19937_64 rng(202);
    auto t = build_transfer(random_state_unitary(3, 1, Representation::Left, rng),
                            random_state_unitary(3, 1, Representation::Right, rng));
    Vector x = random_vector(t.dim(), rng), y = random_vector(t.dim(), rng);
    Complex lhs = y.dot(transfer_apply(t, x));
    Complex rhs = transfer_apply_adjoint(t, y).dot(x);
    EXPECT_LT(std::abs(lhs - rhs), 1e-13);
}

TEST(Transfer, RejectsMismatchedRepresentations) {
    std::mt19937_64 rng(203);
    auto l = random_state_unitary(2, 1, Representation::Left, rng);
    auto r = random_state_unitary(2, 1, Representation::Right, rng);
    auto r3 = random_state_unitary(3, 1, Representation::Right, rng);
    EXPECT_THROW(build_transfer(r, r), ContractViolation);
    EXPECT_THROW(build_transfer(l, l), ContractViolation);
    EXPECT_THROW(build_transfer(l, r3), DimensionMismatch);
}

TEST(Transfer, ObservableInsertionMatchesDense) {
    std::mt19937_64 rng(204);
    auto uL = random_state_unitary(2, 2, Representation::Left, rng);
    auto uR = random_state_unitary(2, 2, Representation::Right, rng);
    Tensor a = left_tensor(build_dense(uL).matrix), b = right_tensor(build_dense(uR).matrix);
    auto t = build_transfer(uL, uR);
    for (int p = 1; p <= 3; ++p) {
        Matrix op = pauli(p);
        EXPECT_LT((transfer_dense(with_observable(t, op)) - dense_mixed_transfer(a, b, &op)).norm(), 1e-12);
    }
}

TEST(Transfer, ReversedLegGateIndexMap) {
    std::mt19937_64 rng(205);
    Matrix b = random_gaussian(4, 4, rng);
    Matrix v = reversed_leg_gate(b);
    // out[(x, y), (z, w)] = b[(y, w), (x, z)]
    EXPECT_EQ(v(0b01, 0b00), b(0b10, 0b00));
    EXPECT_EQ(v(0b10, 0b01), b(0b01, 0b10));
    EXPECT_EQ(v(0b11, 0b10), b(0b10, 0b11));
    EXPECT_EQ(v(0b00, 0b11), b(0b01, 0b01));
}

class TrotterTransfer : public ::testing::TestWithParam<int> {};

// Finite-chain overlaps obey xi_L = l^dagger T^(L - k) r beyond the boundary, so the
// characteristic polynomial of the transfer matrix annihilates any d + 1 consecutive values.
double recurrence_residual(const Matrix& transfer, const std::vector<Complex>& xi) {
    Eigen::ComplexEigenSolver<Matrix> es(transfer, false);
    const Eigen::Index d = transfer.rows();
    Vector poly = Vector::Zero(d + 1);  // poly(j) multiplies x^j
    poly(0) = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
        Vector next = Vector::Zero(d + 1);
        for (Eigen::Index j = 0; j < d; ++j) {
            next(j + 1) += poly(j);
            next(j) -= es.eigenvalues()(k) * poly(j);
        }
        poly = next;
    }
    Complex sum = 0.0;
    double scale = 0.0;
    for (Eigen::Index j = 0; j <= d; ++j) {
        sum += poly(j) * xi[j];
        scale += std::abs(poly(j) * xi[j]);
    }
    return std::abs(sum) / scale;
}

TEST_P(TrotterTransfer, SpectrumMatchesFiniteChainRecurrence) {
    const int order = GetParam();
    std::mt19937_64 rng(206 + order);
    const int nq = 2;
    auto uL = near_identity_circuit(nq, 1, Representation::Left, 0.4, rng);
    auto uR = near_identity_circuit(nq, 1, Representation::Right, 0.4, rng);
    Matrix a = two_site_gate(0.1, rng), b = two_site_gate(0.1, rng);
    std::vector<Matrix> sweeps = {a};
    if (order == 2) sweeps.push_back(b);
    auto t = build_trotter_transfer(uL, uR, sweeps, order);
    EXPECT_EQ(t.n_env, 2 * nq - 2 + order);
    Matrix td = transfer_dense(t);

    Tensor ta = left_tensor(build_dense(uL).matrix), tb = right_tensor(build_dense(uR).matrix);
    Vector la = random_vector(2, rng), ra = random_vector(2, rng);
    Vector lb = random_vector(2, rng), rb = random_vector(2, rng);
    const Matrix* bp = order == 2 ? &b : nullptr;
    const int d = static_cast<int>(td.rows());
    std::vector<Complex> xi, wrong;
    Matrix a_wrong = a.transpose();
    for (int L = 3; L <= 3 + d; ++L) {
        xi.push_back(chain_overlap(ta, tb, la, ra, lb, rb, L, a, bp));
        wrong.push_back(chain_overlap(ta, tb, la, ra, lb, rb, L, a_wrong, bp));
    }
    EXPECT_LT(recurrence_residual(td, xi), 1e-9);
    // A different gate breaks the recurrence, so the check has teeth.
    EXPECT_GT(recurrence_residual(td, wrong), 1e-4);
}

TEST_P(TrotterTransfer, IdentityGatesReduceToPlainTransfer) {
    const int order = GetParam();
    std::mt19937_64 rng(210 + order);
    auto uL = random_state_unitary(2, 2, Representation::Left, rng);
    auto uR = random_state_unitary(2, 2, Representation::Right, rng);
    std::vector<Matrix> sweeps(order, Matrix::Identity(4, 4));
    auto lt = dense_leading(transfer_dense(build_trotter_transfer(uL, uR, sweeps, order)));
    auto lp = dense_leading(transfer_dense(build_transfer(uL, uR)));
    EXPECT_LT(std::abs(lt.value - lp.value), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Orders, TrotterTransfer, ::testing::Values(1, 2));

TEST(TrotterTransfer, RejectsWrongSweepCount) {
    std::mt19937_64 rng(213);
    auto uL = random_state_unitary(2, 1, Representation::Left, rng);
    auto uR = random_state_unitary(2, 1, Representation::Right, rng);
    EXPECT_THROW(build_trotter_transfer(uL, uR, {Matrix::Identity(4, 4)}, 2), ContractViolation);
    EXPECT_THROW(build_trotter_transfer(uL, uR, {}, 3), ContractViolation);
}

TEST(ExactEnvironments, MatchDenseEigenproblem) {
    std::mt19937_64 rng(214);
    auto t = build_transfer(near_identity_circuit(3, 2, Representation::Left, 0.5, rng),
                            near_identity_circuit(3, 2, Representation::Right, 0.5, rng));
    Matrix td = transfer_dense(t);
    auto ref = dense_leading(td);
    auto env = exact_environments(t);
    EXPECT_LT(std::abs(env.lambda - ref.value), 1e-10);
    EXPECT_LT((td * env.r.vector - env.lambda * env.r.vector).norm(), 1e-9);
    EXPECT_LT((td.adjoint() * env.l.vector - std::conj(env.lambda) * env.l.vector).norm(), 1e-9);
    EXPECT_FALSE(env.ill_conditioned);
    EXPECT_NEAR(std::abs(env.l.vector.dot(env.r.vector)), std::abs(env.overlap), 1e-14);
}

TEST(ExactEnvironments, SelfTransferOfRightCircuitFixedPointIsOne) {
    // Same state on both sides: leading eigenvalue has modulus one.
    std::mt19937_64 rng(215);
    auto uR = random_state_unitary(3, 2, Representation::Right, rng);
    Tensor b = right_tensor(build_dense(uR).matrix);
    EXPECT_NEAR(std::abs(dense_leading(dense_mixed_transfer(b, b)).value), 1.0, 1e-12);
}

TEST(Expectation, MixedEstimatorMatchesDenseOracle) {
    std::mt19937_64 rng(216);
    auto uL = near_identity_circuit(2, 2, Representation::Left, 0.4, rng);
    auto uR = near_identity_circuit(2, 2, Representation::Right, 0.4, rng);
    Tensor a = left_tensor(build_dense(uL).matrix), b = right_tensor(build_dense(uR).matrix);
    auto t = build_transfer(uL, uR);
    auto env = exact_environments(t);
    auto ref = dense_leading(dense_mixed_transfer(a, b));
    Complex norm = ref.value * ref.left.dot(ref.right);
    Matrix z = pauli(3), x = pauli(1);
    Complex ez = ref.left.dot(dense_mixed_transfer(a, b, &z) * ref.right) / norm;
    EXPECT_LT(std::abs(expectation_local(uR, uL, z, env) - ez), 1e-9);

    Matrix ex = dense_mixed_transfer(a, b, &x), e = dense_mixed_transfer(a, b);
    Vector v = dense_mixed_transfer(a, b, &z) * ref.right;
    v = e * v;
    v = ex * v;
    Complex cref = ref.left.dot(v) / (std::pow(ref.value, 3) * ref.left.dot(ref.right));
    EXPECT_LT(std::abs(correlation(t, x, z, 2, env) - cref), 1e-9);
}

TEST(Expectation, TooDifferentStatesAreRejected) {
    Environments env;
    env.lambda = 1e-8;
    env.overlap = 1.0;
    std::mt19937_64 rng(217);
    auto t = build_transfer(random_state_unitary(2, 1, Representation::Left, rng),
                            random_state_unitary(2, 1, Representation::Right, rng));
    EXPECT_THROW(expectation_local(t, pauli(3), env), StatesTooDifferent);
}

TEST(PostSelection, IsNormOfTransferImage) {
    std::mt19937_64 rng(218);
    auto t = build_transfer(random_state_unitary(2, 1, Representation::Left, rng),
                            random_state_unitary(2, 1, Representation::Right, rng));
    Vector v = random_vector(t.dim(), rng);
    EXPECT_NEAR(post_selection_probability(t, v), (transfer_dense(t) * v).squaredNorm(), 1e-13);
    EXPECT_LE(post_selection_probability(t, v), 1.0 + 1e-12);
}

TEST(LayeredEnvironment, FitRecoversRepresentableTarget) {
    std::mt19937_64 rng(219);
    auto truth = near_identity_circuit(4, 2, identity_environment_circuit(4, 1).rep, 0.6, rng);
    Vector target = apply_to_state(truth, zero_state(4));
    FitOptions opts;
    opts.sweep_tol = 1e-14;
    auto fit = fit_layered_environment(target, 2, nullptr, opts);
    EXPECT_LT(fit.err, 1e-8);
    EXPECT_NEAR(fit.fidelity, std::abs(target.dot(fit.env.vector)), 1e-14);
    ASSERT_TRUE(fit.env.circuit.has_value());
    EXPECT_LT((apply_to_state(*fit.env.circuit, zero_state(4)) - fit.env.vector).norm(), 1e-13);
}

TEST(LayeredEnvironment, OneLayerFitIsExactForGenericStaircaseStates) {
    // Identity gates are a saddle of the overlap; the seeded fit must still recover any
    // one-layer state, whatever its gates.
    std::mt19937_64 rng(221);
    for (int n : {2, 3, 5, 6}) {
        auto truth = random_state_unitary(n, 1, identity_environment_circuit(n, 1).rep, rng);
        Vector target = apply_to_state(truth, zero_state(n));
        auto fit = fit_layered_environment(target, 1);
        EXPECT_LT(fit.err, 1e-7) << "n=" << n;
    }
}

TEST(LayeredEnvironment, FitFidelityIsMonotoneInSweeps) {
    std::mt19937_64 rng(220);
    Vector target = random_vector(16, rng);
    double prev = 0.0;
    for (int sweeps : {1, 2, 4, 8, 16}) {
        FitOptions o;
        o.max_sweeps = sweeps;
        o.sweep_tol = 0.0;
        double f = fit_layered_environment(target, 2, nullptr, o).fidelity;
        EXPECT_GE(f, prev - 1e-12);
        prev = f;
    }
}

TEST(PowerMethod, GradientMatchesFiniteDifference) {
    std::mt19937_64 rng(221);
    auto t = build_transfer(random_state_unitary(2, 1, Representation::Left, rng),
                            random_state_unitary(2, 1, Representation::Right, rng));
    auto cur = random_state_unitary(2, 1, Representation::Right, rng);
    auto pri = random_state_unitary(2, 1, Representation::Right, rng);
    for (EnvSide side : {EnvSide::Right, EnvSide::Left}) {
        auto g = power_step_gradient(t, cur, pri, side);
        Matrix d = random_gaussian(4, 4, rng);
        const double h = 1e-6;
        auto moved = pri;
        moved.gates[0] += h * d;
        auto gp = power_step_gradient(t, cur, moved, side);
        Complex fd = (gp.lambda - g.lambda) / h;
        Complex predicted = (d.adjoint() * g.w[0]).trace();
        EXPECT_LT(std::abs(fd - predicted), 1e-5);
    }
}

TEST(PowerMethod, ConvergesToExactEigenvalueWhenRepresentable) {
    std::mt19937_64 rng(222);
    auto t = build_transfer(near_identity_circuit(2, 2, Representation::Left, 0.3, rng),
                            near_identity_circuit(2, 2, Representation::Right, 0.3, rng));
    auto exact = exact_environments(t);
    auto init = layered_environment(identity_environment_circuit(2, 1), EnvSide::Right);
    auto res = power_method_environment(t, init, 0.5, 3000, 1e-14);
    EXPECT_NEAR(std::norm(res.lambda), std::norm(exact.lambda), 1e-8);
    double overlap = std::abs(res.env.vector.dot(exact.r.vector)) / exact.r.vector.norm();
    EXPECT_GT(overlap, 1.0 - 1e-6);
    auto init_l = layered_environment(identity_environment_circuit(2, 1), EnvSide::Left);
    auto res_l = power_method_environment(t, init_l, 0.5, 3000, 1e-14);
    EXPECT_NEAR(std::norm(res_l.lambda), std::norm(exact.lambda), 1e-8);
}

TEST(LayeredEnvironment, ScanErrorsNeverIncreaseAndReachGenericStates) {
    std::mt19937_64 rng(311);
    for (int trial = 0; trial < 3; ++trial) {
        Vector target = random_vector(16, rng);
        auto scan = fit_layered_environment_scan(target, 3);
        ASSERT_EQ(scan.size(), 3u);
        for (size_t m = 0; m < scan.size(); ++m) EXPECT_EQ(scan[m].env.circuit->layers, static_cast<int>(m) + 1);
        EXPECT_GT(scan[0].err, 1e-3);
        for (size_t m = 1; m < scan.size(); ++m) EXPECT_LE(scan[m].err, scan[m - 1].err);
        // Two ascending layers already span generic four-qubit states.
        EXPECT_LT(scan[1].err, 1e-8);
    }
    EXPECT_THROW(fit_layered_environment_scan(random_vector(4, rng), 0), ContractViolation);
}
