#pragma once

#include "usc/linalg.hpp"

#include <random>

namespace usc::test {

inline Matrix random_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(n(rng), n(rng));
    return m;
}

inline Vector random_vector(Eigen::Index dim, std::mt19937_64& rng) {
    Vector v = random_gaussian(dim, 1, rng).col(0);
    return v / v.norm();
}

inline Matrix random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
    Matrix a = random_gaussian(n, n, rng);
    return 0.5 * (a + a.adjoint());
}

/// exp(a) by Taylor series with scaling and squaring; an oracle independent of eigensolvers.
inline Matrix taylor_expm(const Matrix& a) {
    int squarings = 0;
    double norm = a.norm();
    while (norm > 0.5) {
        norm /= 2.0;
        ++squarings;
    }
    Matrix scaled = a / std::pow(2.0, squarings);
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    Matrix sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * scaled / double(k);
        sum += term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

}  // namespace usc::test
