#include "usc/errors.hpp"
#include "usc/qexport.hpp"
#include "usc/umps.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace usc;
using namespace usc::test;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Dense unitary of the non-measurement ops, built by Kronecker products and explicit
// permutations rather than through the simulator.
Matrix op_dense(const CircuitOp& op, int n) {
    std::vector<int> wires = op.qubits;
    Matrix m = op.matrix;
    if (op.kind == OpKind::Controlled) {
        wires.insert(wires.begin(), op.control);
        const Eigen::Index d = m.rows();
        Matrix c = Matrix::Identity(2 * d, 2 * d);
        c.bottomRightCorner(d, d) = m;
        m = c;
    }
    const int k = static_cast<int>(wires.size());
    const Eigen::Index dim = Eigen::Index(1) << n;
    Matrix out = Matrix::Zero(dim, dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
        Eigen::Index sub = 0;
        for (int j = 0; j < k; ++j) sub = (sub << 1) | ((col >> (n - 1 - wires[j])) & 1);
        for (Eigen::Index r = 0; r < (Eigen::Index(1) << k); ++r) {
            Eigen::Index row = col;
            for (int j = 0; j < k; ++j) {
                const Eigen::Index bit = Eigen::Index(1) << (n - 1 - wires[j]);
                row = ((r >> (k - 1 - j)) & 1) ? (row | bit) : (row & ~bit);
            }
            out(row, col) += m(r, sub);
        }
    }
    return out;
}

Matrix circuit_dense(const GateCircuit& c) {
    Matrix u = Matrix::Identity(Eigen::Index(1) << c.n_qubits, Eigen::Index(1) << c.n_qubits);
    for (const auto& op : c.ops)
        if (op.kind != OpKind::Measure) u = op_dense(op, c.n_qubits) * u;
    return u;
}

double phase_free_distance(const Matrix& a, const Matrix& b) {
    const Complex ov = (b.adjoint() * a).trace();
    const Complex ph = std::abs(ov) > 0 ? ov / std::abs(ov) : Complex(1.0);
    return (a - ph * b).norm();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    EXPECT_EQ(a.size(), b.size());
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

GateCircuit random_circuit(int n, int n_ops, std::mt19937_64& rng) {
    GateCircuit c;
    c.n_qubits = n;
    std::uniform_int_distribution<int> wire(0, n - 1), kind(0, 2);
    for (int i = 0; i < n_ops; ++i) {
        CircuitOp op;
        int a = wire(rng), b = wire(rng);
        while (b == a) b = wire(rng);
        if (kind(rng) == 0) {
            op.qubits = {a};
            op.matrix = random_unitary(2, rng);
        } else {
            op.qubits = {a, b};
            op.matrix = random_unitary(4, rng);
        }
        c.ops.push_back(op);
    }
    return c;
}

struct FunctionalInstance {
    StateUnitary v, w;
    std::vector<WireOp> o;
};

FunctionalInstance random_functional(int n_env, std::mt19937_64& rng) {
    FunctionalInstance f{random_state_unitary(n_env, 2, Representation::Left, rng),
                         random_state_unitary(n_env, 2, Representation::Left, rng),
                         {}};
    for (int k = 0; k < n_env; ++k) f.o.push_back({random_unitary(4, rng), {k, k + 1}});
    return f;
}

// <0| (I (x) V^dagger) O (W (x) I) |0> from dense matrices.
Complex functional_oracle(const FunctionalInstance& f) {
    const int n = f.w.n_qubits + 1;
    Matrix id2 = Matrix::Identity(2, 2);
    Matrix total = kron(build_dense(f.w).matrix, id2);
    for (const auto& op : f.o) {
        CircuitOp c;
        c.matrix = op.matrix;
        c.qubits = op.wires;
        total = op_dense(c, n) * total;
    }
    total = kron(id2, build_dense(f.v).matrix.adjoint()) * total;
    return total(0, 0);
}

}  // namespace

TEST(FunctionalCircuit, IdentityAndOrthogonalCases) {
    auto id = StateUnitary::identity(3, 1, Representation::Left);
    auto c = build_functional_circuit(id, {}, id);
    EXPECT_EQ(c.n_qubits, 4);
    EXPECT_NEAR(simulate_statevector(c).probs[0], 1.0, 1e-15);
    auto cx = build_functional_circuit(id, {{pauli(1), {2}}}, id);
    EXPECT_NEAR(simulate_statevector(cx).probs[0], 0.0, 1e-15);
    EXPECT_THROW(build_functional_circuit(StateUnitary::identity(2, 1, Representation::Left), {}, id),
                 DimensionMismatch);
    EXPECT_THROW(build_functional_circuit(id, {{pauli(1), {4}}}, id), DimensionMismatch);
}

TEST(FunctionalCircuit, ZeroProbabilityMatchesDenseContraction) {
    std::mt19937_64 rng(501);
    for (int trial = 0; trial < 10; ++trial) {
        auto f = random_functional(3, rng);
        auto c = build_functional_circuit(f.v, f.o, f.w);
        const Complex z = functional_oracle(f);
        EXPECT_NEAR(simulate_statevector(c).probs[0], std::norm(z), 1e-12);
        EXPECT_LT(std::abs(zero_amplitude(c) - z), 1e-12);
    }
}

TEST(ObservableCircuit, ProductStateCases) {
    auto uL = StateUnitary::identity(2, 1, Representation::Left);
    auto uR = StateUnitary::identity(2, 1, Representation::Right);
    auto env = StateUnitary::identity(2, 1, Representation::Left);
    auto cz = build_observable_circuit(uR, uL, pauli(3), env, env);
    EXPECT_EQ(cz.n_qubits, 3);
    EXPECT_NEAR(simulate_statevector(cz).probs[0], 1.0, 1e-14);
    EXPECT_NEAR(simulate_statevector(build_observable_circuit(uR, uL, pauli(1), env, env)).probs[0], 0.0, 1e-14);
    EXPECT_THROW(build_observable_circuit(uR, uL, pauli(3), StateUnitary::identity(3, 1, Representation::Left), env),
                 DimensionMismatch);
}

TEST(ObservableCircuit, ZeroProbabilityEqualsTransferEstimate) {
    std::mt19937_64 rng(502);
    for (int trial = 0; trial < 5; ++trial) {
        auto uL = random_state_unitary(2, 1, Representation::Left, rng);
        auto uR = random_state_unitary(2, 1, Representation::Right, rng);
        auto t = build_transfer(uL, uR);
        auto env = exact_environments(t);
        auto fl = fit_layered_environment(env.l.vector.normalized(), 1);
        auto fr = fit_layered_environment(env.r.vector.normalized(), 1);
        ASSERT_LT(std::max(fl.err, fr.err), 1e-12);
        for (int p = 1; p <= 3; ++p) {
            auto c = build_observable_circuit(uR, uL, pauli(p), *fl.env.circuit, *fr.env.circuit);
            const Complex overlap = env.l.vector.normalized().dot(env.r.vector.normalized());
            const double expected = std::norm(expectation_local(t, pauli(p), env) * env.lambda * overlap);
            EXPECT_NEAR(simulate_statevector(c).probs[0], expected, 1e-10) << "trial " << trial << " p " << p;
        }
    }
}

TEST(HadamardTest, TrivialCases) {
    auto id = StateUnitary::identity(2, 1, Representation::Left);
    auto c = build_functional_circuit(id, {}, id);
    EXPECT_NEAR(simulate_statevector(hadamard_test(c, 0.0)).parity_difference(), 1.0, 1e-14);
    EXPECT_NEAR(simulate_statevector(hadamard_test(c, kPi / 2)).parity_difference(), 0.0, 1e-14);
    auto h = hadamard_test(c, 0.0);
    EXPECT_EQ(h.n_qubits, 4);
    EXPECT_EQ(h.measured(), std::vector<int>{3});
    EXPECT_THROW(hadamard_test(h, 0.0), ContractViolation);
}

TEST(HadamardTest, ReconstructsComplexOverlapProperty) {
    std::mt19937_64 rng(503);
    std::uniform_real_distribution<double> ph(0.0, 2 * kPi);
    for (int trial = 0; trial < 50; ++trial) {
        auto f = random_functional(trial % 2 == 0 ? 2 : 3, rng);
        auto c = build_functional_circuit(f.v, f.o, f.w);
        const Complex z = functional_oracle(f);
        const double re = simulate_statevector(hadamard_test(c, 0.0)).parity_difference();
        const double im = -simulate_statevector(hadamard_test(c, kPi / 2)).parity_difference();
        EXPECT_LT(std::abs(Complex(re, im) - z), 1e-12);
        const double phi = ph(rng);
        EXPECT_NEAR(simulate_statevector(hadamard_test(c, phi)).parity_difference(),
                    (std::exp(Complex(0.0, phi)) * z).real(), 1e-12);
    }
}

TEST(Simulator, TrivialDistributions) {
    GateCircuit empty;
    empty.n_qubits = 1;
    auto d = simulate_statevector(empty);
    EXPECT_EQ(d.probs, (std::vector<double>{1.0, 0.0}));
    GateCircuit h = empty;
    Matrix hm(2, 2);
    hm << 1, 1, 1, -1;
    h.ops.push_back({OpKind::Unitary, hm / std::sqrt(2.0), {0}});
    auto dh = simulate_statevector(h);
    EXPECT_NEAR(dh.probability("0"), 0.5, 1e-15);
    EXPECT_NEAR(dh.probability("1"), 0.5, 1e-15);
}

TEST(Simulator, ProbabilitiesSumToOneAndMarginalizeProperty) {
    std::mt19937_64 rng(504);
    for (int trial = 0; trial < 20; ++trial) {
        auto c = random_circuit(5, 12, rng);
        c.ops.push_back({OpKind::Measure, {}, {3, 0}});
        auto d = simulate_statevector(c);
        ASSERT_EQ(d.probs.size(), 4u);
        double sum = 0.0;
        for (double p : d.probs) sum += p;
        EXPECT_NEAR(sum, 1.0, 1e-12);
        // Marginal from the dense final state, bit order (q3, q0).
        Vector psi = circuit_dense(c).col(0);
        double p10 = 0.0;
        for (Eigen::Index b = 0; b < psi.size(); ++b)
            if (((b >> 1) & 1) == 1 && ((b >> 4) & 1) == 0) p10 += std::norm(psi(b));
        EXPECT_NEAR(d.probability("10"), p10, 1e-12);
    }
}

TEST(Simulator, RejectsInvalidCircuits) {
    GateCircuit c;
    c.n_qubits = 5;
    SimulatorOptions small{4};
    EXPECT_THROW(simulate_statevector(c, small), ContractViolation);
    c.ops.push_back({OpKind::Unitary, 2.0 * Matrix::Identity(2, 2), {0}});
    EXPECT_THROW(simulate_statevector(c), ContractViolation);
    c.ops = {{OpKind::Measure, {}, {1}}, {OpKind::Unitary, pauli(1), {1}}};
    EXPECT_THROW(c.validate(), ContractViolation);
    c.ops = {{OpKind::Unitary, pauli(1), {7}}};
    EXPECT_THROW(c.validate(), DimensionMismatch);
}

TEST(Shots, DeterministicAndReproducible) {
    OutcomeDistribution d{{0, 1}, {1.0, 0.0, 0.0, 0.0}};
    auto r = sample_shots(d, 1000, 3);
    EXPECT_EQ(r.counts.size(), 1u);
    EXPECT_EQ(r.counts.at("00"), 1000);
    OutcomeDistribution u{{0, 1}, {0.1, 0.2, 0.3, 0.4}};
    auto a = sample_shots(u, 5000, 42), b = sample_shots(u, 5000, 42);
    EXPECT_EQ(a.counts, b.counts);
    long total = 0;
    for (const auto& [k, v] : a.counts) total += v;
    EXPECT_EQ(total, 5000);
    EXPECT_THROW(sample_shots(u, 0, 1), ContractViolation);
}

TEST(Shots, BinomialBoundForFairCoin) {
    OutcomeDistribution d{{0}, {0.5, 0.5}};
    const double bound = 3.0 * std::sqrt(0.25 / 1e5);
    int inside = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        inside += std::abs(sample_shots(d, 100000, seed).frequency("0") - 0.5) <= bound;
    EXPECT_GE(inside, 19);
}

TEST(Gauges, NoSharedQubitsMeansNoChange) {
    GateCircuit c;
    c.n_qubits = 4;
    std::mt19937_64 rng(505);
    c.ops.push_back({OpKind::Unitary, random_unitary(4, rng), {0, 1}});
    c.ops.push_back({OpKind::Unitary, random_unitary(4, rng), {2, 3}});
    auto g = randomize_gauges(c, 9);
    for (size_t i = 0; i < c.ops.size(); ++i) EXPECT_EQ(g.ops[i].matrix, c.ops[i].matrix);
}

TEST(Gauges, ConsecutiveGatesKeepTheirProduct) {
    GateCircuit c;
    c.n_qubits = 2;
    std::mt19937_64 rng(506);
    c.ops.push_back({OpKind::Unitary, random_unitary(4, rng), {0, 1}});
    c.ops.push_back({OpKind::Unitary, random_unitary(4, rng), {0, 1}});
    auto g = randomize_gauges(c, 10);
    EXPECT_GT((g.ops[0].matrix - c.ops[0].matrix).norm(), 1e-3);
    EXPECT_LT((g.ops[1].matrix * g.ops[0].matrix - c.ops[1].matrix * c.ops[0].matrix).norm(), 1e-12);
}

TEST(Gauges, DistributionsAreInvariantProperty) {
    std::mt19937_64 rng(507);
    auto uL = random_state_unitary(3, 1, Representation::Left, rng);
    auto uR = random_state_unitary(3, 1, Representation::Right, rng);
    auto env = random_state_unitary(4, 1, Representation::Left, rng);
    auto c = build_observable_circuit(uR, uL, pauli(3), env, env);
    auto base = simulate_statevector(c);
    Matrix u = circuit_dense(c);
    for (std::uint64_t r = 0; r < 20; ++r) {
        auto g = randomize_gauges(c, replica_seed(77, r));
        EXPECT_LT(max_abs_diff(simulate_statevector(g).probs, base.probs), 1e-12);
        EXPECT_LT((circuit_dense(g) - u).norm(), 1e-12);
    }
    EXPECT_NE(replica_seed(77, 0), replica_seed(77, 1));
}

TEST(Qasm, IdentityCircuitHasNoGates) {
    GateCircuit c;
    c.n_qubits = 3;
    c.ops.push_back({OpKind::Unitary, Matrix::Identity(4, 4), {0, 1}});
    EXPECT_EQ(export_qasm(c), "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\n");
}

TEST(Qasm, ZzRotationUsesTheCxRzCxTemplate) {
    const double alpha = 0.37;
    GateCircuit c;
    c.n_qubits = 2;
    c.ops.push_back({OpKind::Unitary, expm_hermitian(pauli_product(3, 3), Complex(0.0, alpha)), {0, 1}});
    const std::string text = export_qasm(c);
    EXPECT_NE(text.find("cx q[0],q[1];\nrz(-0.73999999999999999) q[1];\ncx q[0],q[1];\n"), std::string::npos) << text;
    EXPECT_LT(phase_free_distance(circuit_dense(import_qasm(text)), c.ops[0].matrix), 1e-12);
}

TEST(Qasm, EveryPauliRotationRoundTripsProperty) {
    std::mt19937_64 rng(508);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    for (int k = 0; k < 15; ++k) {
        auto [a, b] = pauli_pair(k);
        for (bool ctrl : {false, true}) {
            GateCircuit c;
            c.n_qubits = 3;
            Matrix m = expm_hermitian(pauli_product(a, b), Complex(0.0, ang(rng)));
            CircuitOp op{ctrl ? OpKind::Controlled : OpKind::Unitary, m, {2, 0}, ctrl ? 1 : -1};
            c.ops.push_back(op);
            Matrix back = circuit_dense(import_qasm(export_qasm(c)));
            if (ctrl)
                EXPECT_LT((back - circuit_dense(c)).norm(), 1e-12) << pauli_label(k);
            else
                EXPECT_LT(phase_free_distance(back, circuit_dense(c)), 1e-12) << pauli_label(k);
        }
    }
}

TEST(Qasm, RandomCircuitsRoundTripProperty) {
    std::mt19937_64 rng(509);
    for (int trial = 0; trial < 10; ++trial) {
        auto c = random_circuit(4, 10, rng);
        auto back = import_qasm(export_qasm(c));
        EXPECT_LT(phase_free_distance(circuit_dense(back), circuit_dense(c)), 1e-9);
        auto h = hadamard_test(c, 0.3);
        auto hb = import_qasm(export_qasm(h));
        EXPECT_LT(max_abs_diff(simulate_statevector(hb).probs, simulate_statevector(h).probs), 1e-9);
        EXPECT_LT(phase_free_distance(circuit_dense(hb), circuit_dense(h)), 1e-9);
    }
}

TEST(Qasm, ObservableCircuitRoundTrip) {
    std::mt19937_64 rng(510);
    auto uL = random_state_unitary(2, 1, Representation::Left, rng);
    auto uR = random_state_unitary(2, 1, Representation::Right, rng);
    auto l = random_state_unitary(2, 1, Representation::Left, rng);
    auto r = random_state_unitary(2, 1, Representation::Left, rng);
    auto c = build_observable_circuit(uR, uL, pauli(3), l, r);
    auto back = import_qasm(export_qasm(c));
    EXPECT_EQ(back.measured(), c.measured());
    EXPECT_LT(max_abs_diff(simulate_statevector(back).probs, simulate_statevector(c).probs), 1e-9);
}

TEST(Qasm, ErrorsNameTheOp) {
    GateCircuit c;
    c.n_qubits = 2;
    c.ops.push_back({OpKind::Unitary, pauli(1), {0}});
    c.ops.push_back({OpKind::Unitary, 1.1 * Matrix::Identity(4, 4), {0, 1}});
    try {
        export_qasm(c);
        FAIL() << "expected ExportError";
    } catch (const ExportError& e) {
        EXPECT_NE(std::string(e.what()).find("op 1"), std::string::npos);
    }
    EXPECT_THROW(import_qasm("qreg q[1];\nh q[0];\n"), ExportError);
    EXPECT_THROW(import_qasm("OPENQASM 2.0;\nqreg q[1];\nfoo q[0];\n"), ExportError);
    EXPECT_THROW(import_qasm("OPENQASM 2.0;\nqreg q[1];\nh q[3];\n"), ExportError);
}

TEST(Qasm, ImporterReadsStandardGates) {
    auto c = import_qasm("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncreg c[2];\n"
                         "x q[0]; u3(pi/2, 0, pi) q[1];\ncz q[0],q[1];\nmeasure q[1] -> c[0];\nmeasure q[0] -> c[1];\n");
    auto d = simulate_statevector(c);
    EXPECT_EQ(d.measured, (std::vector<int>{1, 0}));
    EXPECT_NEAR(d.probability("01"), 0.5, 1e-14);
    EXPECT_NEAR(d.probability("11"), 0.5, 1e-14);
}

TEST(MeasurementSetup, CircuitsReproduceSquaredMagnetization) {
    std::mt19937_64 rng(511);
    auto theta = random_state_unitary(2, 1, Representation::Left, rng);
    auto s = prepare_measurement(theta, 1);
    EXPECT_GE(std::norm(s.lambda), 1.0 - 1e-10);
    EXPECT_LT(std::max(s.fit_error_l, s.fit_error_r), 1e-10);
    const double sz = local_expectation_mps(circuit_to_umps(theta), pauli(3)).real();
    EXPECT_NEAR(squared_expectation_from_circuits(s, pauli(3)), sz * sz, 1e-9);
    auto s0 = prepare_measurement(StateUnitary::identity(2, 1, Representation::Right), 1);
    EXPECT_NEAR(squared_expectation_from_circuits(s0, pauli(3)), 1.0, 1e-12);
}
