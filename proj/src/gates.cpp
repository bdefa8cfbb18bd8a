#include "usc/gates.hpp"

#include "usc/errors.hpp"

#include <cmath>

namespace usc {

std::pair<int, int> pauli_pair(int k) {
    if (k < 0 || k > 14) throw ContractViolation("pauli_pair: index must be in 0..14");
    return {(k + 1) / 4, (k + 1) % 4};
}

std::string pauli_label(int k) {
    static const char names[] = {'I', 'X', 'Y', 'Z'};
    auto [a, b] = pauli_pair(k);
    return {names[a], names[b]};
}

Matrix pauli_product(int a, int b) { return kron(pauli(a), pauli(b)); }

Matrix pauli_rotation(int a, int b, double angle) {
    // P^2 = I, so exp(i t P) = cos t + i sin t P.
    Matrix p = pauli_product(a, b);
    return std::cos(angle) * Matrix::Identity(4, 4) + kI * std::sin(angle) * p;
}

Matrix gate_from_params(const GateParams& params) {
    Matrix u = Matrix::Identity(4, 4);
    for (int k = 0; k < 15; ++k) {
        if (!std::isfinite(params[k])) throw ContractViolation("gate_from_params: non-finite angle");
        auto [a, b] = pauli_pair(k);
        u = u * pauli_rotation(a, b, params[k]);
    }
    return u;
}

Matrix compose(const PauliDecomposition& d) {
    Matrix u = Matrix::Identity(4, 4);
    for (const auto& f : d.factors) u = u * pauli_rotation(f.a, f.b, f.angle);
    return std::exp(kI * d.global_phase) * u;
}

Matrix swap_gate() {
    Matrix s = Matrix::Zero(4, 4);
    s(0, 0) = 1.0;
    s(1, 2) = 1.0;
    s(2, 1) = 1.0;
    s(3, 3) = 1.0;
    return s;
}

ZyzAngles zyz_decompose(const Matrix& u) {
    if (u.rows() != 2 || u.cols() != 2) throw DimensionMismatch("zyz_decompose needs a 2x2 matrix");
    ZyzAngles out;
    Complex det = u.determinant();
    out.phase = std::arg(det) / 2.0;
    Matrix v = u * std::exp(-kI * out.phase);
    Complex a = v(0, 0);
    Complex b = v(1, 0);
    out.beta = 2.0 * std::atan2(std::abs(b), std::abs(a));
    double sum = std::abs(a) > 1e-14 ? -2.0 * std::arg(a) : 0.0;
    double diff = std::abs(b) > 1e-14 ? 2.0 * std::arg(b) : 0.0;
    if (std::abs(a) <= 1e-14) {
        // Only alpha - gamma is fixed; v(1,0) = e^{i(alpha-gamma)/2}.
        out.alpha = diff / 2.0;
        out.gamma = -diff / 2.0;
    } else if (std::abs(b) <= 1e-14) {
        out.alpha = sum / 2.0;
        out.gamma = sum / 2.0;
    } else {
        out.alpha = (sum + diff) / 2.0;
        out.gamma = (sum - diff) / 2.0;
    }
    return out;
}

Matrix zyz_compose(const ZyzAngles& z) {
    auto rz = [](double t) {
        Matrix m = Matrix::Zero(2, 2);
        m(0, 0) = std::exp(-kI * t / 2.0);
        m(1, 1) = std::exp(kI * t / 2.0);
        return m;
    };
    Matrix ry(2, 2);
    ry << std::cos(z.beta / 2.0), -std::sin(z.beta / 2.0), std::sin(z.beta / 2.0),
        std::cos(z.beta / 2.0);
    return std::exp(kI * z.phase) * rz(z.alpha) * ry * rz(z.gamma);
}

std::pair<Matrix, Matrix> split_tensor_product(const Matrix& k) {
    if (k.rows() != 4 || k.cols() != 4) throw DimensionMismatch("split_tensor_product needs 4x4");
    Matrix r(4, 4);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) r(2 * a + c, 2 * b + d) = k(2 * a + b, 2 * c + d);
    Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    double s = svd.singularValues()(0);
    Vector av = std::sqrt(s) * svd.matrixU().col(0);
    Vector bv = std::sqrt(s) * svd.matrixV().col(0).conjugate();
    Matrix a(2, 2), b(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            a(i, j) = av(2 * i + j);
            b(i, j) = bv(2 * i + j);
        }
    double da = std::sqrt(std::abs(a.determinant()));
    if (da > 0.0) {
        a /= da;
        b *= da;
    }
    return {a, b};
}

namespace {

Matrix magic_basis() {
    const double s = 1.0 / std::sqrt(2.0);
    Matrix q(4, 4);
    q << Complex(s, 0), Complex(0, s), 0, 0,
         0, 0, Complex(0, s), Complex(s, 0),
         0, 0, Complex(0, s), Complex(-s, 0),
         Complex(s, 0), Complex(0, -s), 0, 0;
    return q;
}

void push_local(std::vector<PauliFactor>& out, const ZyzAngles& z, bool first_qubit) {
    auto add = [&](int p, double rot) {
        // Rz(t) = exp(i (-t/2) Z)
        if (first_qubit)
            out.push_back({p, 0, -rot / 2.0});
        else
            out.push_back({0, p, -rot / 2.0});
    };
    add(3, z.alpha);
    add(2, z.beta);
    add(3, z.gamma);
}

}  // namespace

PauliDecomposition decompose_two_qubit(const Matrix& u) {
    if (u.rows() != 4 || u.cols() != 4) throw DimensionMismatch("decompose_two_qubit needs 4x4");
    if (!u.allFinite() || unitarity_residual(u) > 1e-10)
        throw ContractViolation("decompose_two_qubit: input is not unitary");

    const Matrix q = magic_basis();
    double phase = std::arg(u.determinant()) / 4.0;
    Matrix us = u * std::exp(-kI * phase);
    Matrix m = q.adjoint() * us * q;
    Matrix m2 = m.transpose() * m;
    Eigen::MatrixXd re = m2.real();
    Eigen::MatrixXd im = m2.imag();

    Eigen::MatrixXd p;
    Vector d;
    bool found = false;
    const double mix[] = {0.6180339887498949, 1.4142135623730951, 0.3183098861837907, 2.718281828459045};
    for (double c : mix) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(re + c * im);
        p = eig.eigenvectors();
        if (p.determinant() < 0.0) p.col(0) *= -1.0;
        Matrix pc = p.cast<Complex>();
        Matrix dm = pc.transpose() * m2 * pc;
        Matrix off = dm;
        off.diagonal().setZero();
        if (off.norm() < 1e-9) {
            d = dm.diagonal();
            found = true;
            break;
        }
    }
    if (!found) throw ContractViolation("decompose_two_qubit: diagonalization failed");

    Eigen::Vector4d theta;
    for (int k = 0; k < 4; ++k) theta(k) = std::arg(d(k)) / 2.0;
    Complex det_delta = 1.0;
    for (int k = 0; k < 4; ++k) det_delta *= std::exp(kI * theta(k));
    if (det_delta.real() < 0.0) theta(0) += M_PI;

    Matrix pc = p.cast<Complex>();
    Matrix delta_inv = Matrix::Zero(4, 4);
    for (int k = 0; k < 4; ++k) delta_inv(k, k) = std::exp(-kI * theta(k));
    Matrix k1 = m * pc * delta_inv;
    Matrix left = q * k1 * q.adjoint();
    Matrix right = q * pc.transpose() * q.adjoint();

    // Diagonals of XX, YY, ZZ in the magic basis are +-1 vectors orthogonal to (1,1,1,1).
    double cxyz[3];
    for (int j = 0; j < 3; ++j) {
        Matrix pm = q.adjoint() * pauli_product(j + 1, j + 1) * q;
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += pm(k, k).real() * theta(k);
        cxyz[j] = acc / 4.0;
    }

    auto [a1, b1] = split_tensor_product(left);
    auto [a2, b2] = split_tensor_product(right);
    ZyzAngles za1 = zyz_decompose(a1), zb1 = zyz_decompose(b1);
    ZyzAngles za2 = zyz_decompose(a2), zb2 = zyz_decompose(b2);

    PauliDecomposition out;
    out.factors.reserve(15);
    push_local(out.factors, za1, true);
    push_local(out.factors, zb1, false);
    for (int j = 0; j < 3; ++j) out.factors.push_back({j + 1, j + 1, cxyz[j]});
    push_local(out.factors, za2, true);
    push_local(out.factors, zb2, false);

    // Remaining phase is fixed by comparison, which also absorbs the tensor-split scalars.
    out.global_phase = 0.0;
    Matrix bare = compose(out);
    Complex ratio = (bare.adjoint() * u).trace() / 4.0;
    out.global_phase = std::arg(ratio);
    if ((compose(out) - u).norm() > 1e-8)
        throw ContractViolation("decompose_two_qubit: reconstruction failed");
    return out;
}

}  // namespace usc
