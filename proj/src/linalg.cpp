#include "usc/linalg.hpp"

#include "usc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace usc {

Matrix pauli(int index) {
    Matrix p = Matrix::Zero(2, 2);
    switch (index) {
        case 0: p(0, 0) = 1.0; p(1, 1) = 1.0; break;
        case 1: p(0, 1) = 1.0; p(1, 0) = 1.0; break;
        case 2: p(0, 1) = -kI; p(1, 0) = kI; break;
        case 3: p(0, 0) = 1.0; p(1, 1) = -1.0; break;
        default: throw ContractViolation("pauli index must be in 0..3");
    }
    return p;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double unitarity_residual(const Matrix& u) {
    Matrix d = u.adjoint() * u - Matrix::Identity(u.cols(), u.cols());
    return Eigen::JacobiSVD<Matrix>(d).singularValues()(0);
}

bool is_finite(const Matrix& m) { return m.allFinite(); }

namespace {

struct PolarParts {
    Matrix u;
    double smallest_singular;
};

PolarParts polar_parts(const Matrix& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("unitary projection needs a square matrix");
    if (!m.allFinite()) throw ContractViolation("matrix has non-finite entries");
    if (m.rows() <= 16) {
        Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        return {svd.matrixU() * svd.matrixV().adjoint(), svd.singularValues().minCoeff()};
    }
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return {svd.matrixU() * svd.matrixV().adjoint(), svd.singularValues().minCoeff()};
}

}  // namespace

Matrix reunitarize(const Matrix& m) {
    auto parts = polar_parts(m);
    if (parts.smallest_singular <= 1e-12)
        throw DegenerateInput("reunitarize: smallest singular value " +
                              std::to_string(parts.smallest_singular) + " <= 1e-12");
    return parts.u;
}

Matrix polar_optimal_unitary(const Matrix& w, bool allow_rank_deficient) {
    if (!allow_rank_deficient) return reunitarize(w);
    return polar_parts(w).u;
}

Matrix tangent_project(const Matrix& d, const Matrix& u) {
    if (d.rows() != u.rows() || d.cols() != u.cols()) throw DimensionMismatch("tangent_project: shape mismatch");
    return d - 0.5 * u * (u.adjoint() * d + d.adjoint() * u);
}

Matrix expm_hermitian(const Matrix& h, Complex scale) {
    if (h.rows() != h.cols()) throw DimensionMismatch("expm_hermitian needs a square matrix");
    if ((h - h.adjoint()).norm() > 1e-10)
        throw ContractViolation("expm_hermitian: input is not Hermitian");
    Matrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    const Matrix& q = eig.eigenvectors();
    Vector e(q.cols());
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = std::exp(scale * eig.eigenvalues()(i));
    return q * e.asDiagonal() * q.adjoint();
}

void fix_global_phase(Vector& v) {
    if (v.size() == 0) return;
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    double mag = std::abs(v(imax));
    if (mag == 0.0) return;
    v *= std::conj(v(imax)) / mag;
    v(imax) = Complex(std::abs(v(imax)), 0.0);
}

Eigenpair leading_eigenpair(const LinearMap& apply, Eigen::Index dim, const Vector& seed,
                            const EigensolverOptions& options) {
    if (dim < 1) throw ContractViolation("leading_eigenpair: dimension must be positive");
    if (seed.size() != dim) throw DimensionMismatch("leading_eigenpair: seed has wrong dimension");
    double seed_norm = seed.norm();
    if (!(seed_norm > 0.0)) throw ContractViolation("leading_eigenpair: seed has zero norm");

    const int m = static_cast<int>(std::min<Eigen::Index>(dim, options.krylov_dim));
    Eigenpair result;
    Vector start = seed / seed_norm;
    double best_residual = std::numeric_limits<double>::infinity();

    for (int cycle = 0; cycle <= options.max_restarts; ++cycle) {
        Matrix basis(dim, m + 1);
        Matrix hess = Matrix::Zero(m + 1, m);
        basis.col(0) = start;
        int size = m;
        bool invariant = false;
        double scale = 0.0;
        for (int j = 0; j < m; ++j) {
            Vector w = apply(basis.col(j));
            ++result.applications;
            scale = std::max(scale, w.norm());
            // Gram-Schmidt, repeated once for stability.
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= j; ++i) {
                    Complex c = basis.col(i).dot(w);
                    hess(i, j) += c;
                    w -= c * basis.col(i);
                }
            }
            double h = w.norm();
            hess(j + 1, j) = h;
            if (h <= 1e-14 * std::max(scale, 1.0)) {
                size = j + 1;
                invariant = true;
                break;
            }
            basis.col(j + 1) = w / h;
        }

        Eigen::ComplexEigenSolver<Matrix> ritz(hess.topLeftCorner(size, size));
        const Vector& theta = ritz.eigenvalues();
        Eigen::Index lead = 0;
        theta.cwiseAbs().maxCoeff(&lead);
        Complex second{0.0};
        for (Eigen::Index k = 0; k < theta.size(); ++k)
            if (k != lead && std::abs(theta(k)) > std::abs(second)) second = theta(k);

        Vector y = ritz.eigenvectors().col(lead);
        Vector x = basis.leftCols(size) * y;
        x.normalize();
        Complex value = theta(lead);

        Vector ax = apply(x);
        ++result.applications;
        // Rayleigh quotient refinement is exact for the converged vector and never worse.
        value = x.dot(ax);
        double residual = (ax - value * x).norm();
        best_residual = std::min(best_residual, residual);

        // An invariant or complete Krylov space makes the Ritz pair exact up to rounding.
        const double floor = 1e-13 * scale;
        if (residual <= options.tol * std::abs(value) || residual <= floor || invariant ||
            size == dim) {
            fix_global_phase(x);
            result.value = value;
            result.vector = x;
            result.residual = residual;
            result.second_value = second;
            result.degenerate = (std::abs(value) - std::abs(second)) < options.tol;
            result.restarts = cycle;
            return result;
        }
        start = x;
    }
    throw IterationLimit("leading_eigenpair: no convergence within restart budget", best_residual);
}

}  // namespace usc
