#pragma once

#include "usc/linalg.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace usc {

/// Fifteen angles of a two-qubit gate, one per ordered Pauli pair (a,b) != (I,I).
/// Index k corresponds to pauli_pair(k), lexicographic: IX, IY, IZ, XI, XX, ..., ZZ.
using GateParams = std::array<double, 15>;

/// Pauli indices (a, b) of parameter k (0..14).
std::pair<int, int> pauli_pair(int k);

/// "XY"-style label of parameter k.
std::string pauli_label(int k);

/// sigma^a (x) sigma^b.
Matrix pauli_product(int a, int b);

/// exp(i angle sigma^a (x) sigma^b).
Matrix pauli_rotation(int a, int b, double angle);

/// F_1 F_2 ... F_15 with F_k = exp(i params[k] sigma^a (x) sigma^b), F_1 leftmost.
Matrix gate_from_params(const GateParams& params);

/// One factor exp(i angle sigma^a (x) sigma^b). (a, b) may contain identity on one side.
struct PauliFactor {
    int a = 0;
    int b = 0;
    double angle = 0.0;
};

/// U = exp(i global_phase) * factors[0] * factors[1] * ... (factors[0] leftmost).
struct PauliDecomposition {
    double global_phase = 0.0;
    std::vector<PauliFactor> factors;
};

/// Decompose an arbitrary 4x4 unitary into exactly 15 Pauli-rotation factors:
/// (local ZYZ on both qubits) * exp(i(cx XX + cy YY + cz ZZ)) * (local ZYZ on both qubits).
/// Throws ContractViolation if u is not unitary to 1e-10.
PauliDecomposition decompose_two_qubit(const Matrix& u);

Matrix compose(const PauliDecomposition& d);

/// Single-qubit unitary as exp(i phase) Rz(alpha) Ry(beta) Rz(gamma), Rz(t) = exp(-i t Z / 2).
struct ZyzAngles {
    double phase = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

ZyzAngles zyz_decompose(const Matrix& u);
Matrix zyz_compose(const ZyzAngles& a);

/// Split a 4x4 matrix that is (up to numerical error) a tensor product into a (x) b.
/// Both factors are scaled to unit determinant magnitude when k is unitary.
std::pair<Matrix, Matrix> split_tensor_product(const Matrix& k);

Matrix swap_gate();

/// Random Haar unitary of dimension n (QR of a complex Gaussian matrix with phase fix).
template <class Rng>
Matrix random_unitary(Eigen::Index n, Rng& rng);

}  // namespace usc

#include "usc/detail/random_unitary.hpp"
