#include "usc/network.hpp"

#include "usc/errors.hpp"

#include <algorithm>

namespace usc {

Vector zero_state(int n_wires) {
    Vector v = Vector::Zero(Eigen::Index(1) << n_wires);
    v(0) = 1.0;
    return v;
}

Complex network_value(const std::vector<WireOp>& ops, int n_wires, const Vector& ket,
                      const Vector& bra) {
    Vector psi = ket;
    apply_ops(psi, n_wires, ops);
    if (bra.size() != psi.size()) throw DimensionMismatch("network_value: bra has wrong dimension");
    return bra.dot(psi);
}

Matrix reduced_overlap(const Vector& beta, const Vector& alpha, int n_wires,
                       const std::vector<int>& wires) {
    const int k = static_cast<int>(wires.size());
    const Eigen::Index dim = Eigen::Index(1) << n_wires;
    const Eigen::Index block = Eigen::Index(1) << k;
    Eigen::Index mask = 0;
    std::vector<Eigen::Index> offsets(block, 0);
    for (int j = 0; j < k; ++j) {
        Eigen::Index bit = Eigen::Index(1) << (n_wires - 1 - wires[j]);
        mask |= bit;
        for (Eigen::Index m = 0; m < block; ++m)
            if (m & (Eigen::Index(1) << (k - 1 - j))) offsets[m] |= bit;
    }
    Matrix out = Matrix::Zero(block, block);
    for (Eigen::Index base = 0; base < dim; ++base) {
        if (base & mask) continue;
        for (Eigen::Index a = 0; a < block; ++a) {
            Complex cb = std::conj(beta(base + offsets[a]));
            if (cb == 0.0) continue;
            for (Eigen::Index b = 0; b < block; ++b) out(a, b) += cb * alpha(base + offsets[b]);
        }
    }
    return out;
}

std::vector<Matrix> op_environments(const std::vector<WireOp>& ops, int n_wires, const Vector& ket,
                                    const Vector& bra, const std::vector<int>& which) {
    const int n = static_cast<int>(ops.size());
    for (int k : which)
        if (k < 0 || k >= n) throw ContractViolation("op_environments: op index out of range");
    if (which.empty()) return {};
    const int first = *std::min_element(which.begin(), which.end());

    // Backward pass: betas[k] for every k >= first.
    std::vector<Vector> betas(static_cast<size_t>(n));
    Vector beta = bra;
    for (int k = n - 1; k >= first; --k) {
        betas[k] = beta;
        apply_op(beta, n_wires, {ops[k].matrix.adjoint(), ops[k].wires});
    }

    std::vector<Matrix> result(which.size());
    Vector alpha = ket;
    for (int k = 0; k < n; ++k) {
        for (size_t i = 0; i < which.size(); ++i)
            if (which[i] == k) result[i] = reduced_overlap(betas[k], alpha, n_wires, ops[k].wires);
        if (k < n - 1) apply_op(alpha, n_wires, ops[k]);
        if (k >= *std::max_element(which.begin(), which.end())) break;
    }
    return result;
}

}  // namespace usc
