#pragma once

#include "gibbon/types.hpp"

namespace gibbon {

enum class KernelFamily {
    kMatern52,
    kSquaredExponential,
};

// Stationary ARD kernel. Points are columns (d x n); lengthscales are per
// input dimension and strictly positive.
struct Kernel {
    KernelFamily family = KernelFamily::kMatern52;
    double variance = 1.0;
    Vector lengthscales;

    static Kernel matern52(double variance, Vector lengthscales) {
        return Kernel{KernelFamily::kMatern52, variance, std::move(lengthscales)};
    }
    static Kernel squared_exponential(double variance, Vector lengthscales) {
        return Kernel{KernelFamily::kSquaredExponential, variance, std::move(lengthscales)};
    }
};

void validate(const Kernel& k);

// k(a, b); evaluates to exactly `variance` at zero distance.
double kernel_eval(const Kernel& k, const Vector& a, const Vector& b);

// One point against every column of `a`, entry i = k(a.col(i), b). Batched
// form of kernel_eval for prediction paths; agrees with it to rounding.
Vector kernel_row(const Kernel& k, const Matrix& a, const Vector& b);

// Cross-covariance matrix, entry (i, j) = k(A.col(i), B.col(j)).
Matrix kernel_matrix(const Kernel& k, const Matrix& a, const Matrix& b);

// Symmetric covariance of one point set; diagonal is exact.
Matrix kernel_matrix(const Kernel& k, const Matrix& a);

}  // namespace gibbon
