#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>

namespace usc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Pauli matrices, index 0..3 = I, X, Y, Z.
Matrix pauli(int index);

/// Kronecker product a (x) b, with a acting on the more significant qubits.
Matrix kron(const Matrix& a, const Matrix& b);

/// ||U^dagger U - I|| in the spectral norm.
double unitarity_residual(const Matrix& u);

bool is_finite(const Matrix& m);

/// Nearest unitary V^dagger W from the SVD m = V^dagger D W (singular values replaced by one).
/// Throws DegenerateInput when the smallest singular value is <= 1e-12.
Matrix reunitarize(const Matrix& m);

/// Unitary U maximizing Re Tr[U W^dagger]. Same map as reunitarize.
/// With allow_rank_deficient the rank check is skipped; the maximizer is then not unique
/// and one of them is returned.
Matrix polar_optimal_unitary(const Matrix& w, bool allow_rank_deficient = false);

/// Projection of d onto the tangent space of the unitary group at u:
/// d - (1/2) u (u^dagger d + d^dagger u). The result p satisfies u^dagger p anti-Hermitian.
Matrix tangent_project(const Matrix& d, const Matrix& u);

/// exp(scale * h) for Hermitian h, via h = Q diag(e) Q^dagger.
Matrix expm_hermitian(const Matrix& h, Complex scale);

/// Multiply v by a phase so that its largest-magnitude entry is real and positive.
void fix_global_phase(Vector& v);

using LinearMap = std::function<Vector(const Vector&)>;

struct EigensolverOptions {
    int krylov_dim = 30;
    int max_restarts = 200;
    double tol = 1e-10;
};

struct Eigenpair {
    Complex value;
    Vector vector;             ///< unit norm, phase fixed by fix_global_phase
    double residual = 0.0;     ///< ||A v - value v||
    bool degenerate = false;   ///< leading magnitude not separated by more than tol
    Complex second_value{0.0}; ///< best estimate of the runner-up Ritz value
    int restarts = 0;
    int applications = 0;
};

/// Eigenvalue of largest magnitude of a general linear map, by restarted Arnoldi iteration.
///
/// The Krylov space has dimension min(dim, krylov_dim). After each cycle the leading Ritz
/// vector seeds the next one. Converged when ||A v - lambda v|| <= tol * |lambda| (or the
/// Krylov space became invariant). Throws IterationLimit after max_restarts cycles.
Eigenpair leading_eigenpair(const LinearMap& apply, Eigen::Index dim, const Vector& seed,
                            const EigensolverOptions& options = {});

}  // namespace usc
