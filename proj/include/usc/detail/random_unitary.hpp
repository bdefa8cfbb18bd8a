#pragma once

#include <random>

namespace usc {

template <class Rng>
Matrix random_unitary(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) z(i, j) = Complex(normal(rng), normal(rng));
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) {
        Complex d = r(j, j);
        double mag = std::abs(d);
        if (mag > 0.0) q.col(j) *= d / mag;
    }
    return q;
}

}  // namespace usc
