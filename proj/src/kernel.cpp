#include "gibbon/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace gibbon {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;

// Scaled distance r = sqrt(sum ((a_i - b_i) / l_i)^2).
inline double scaled_distance(const Kernel& k, const Vector& a, const Vector& b) {
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        const double d = (a[i] - b[i]) / k.lengthscales[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double profile(const Kernel& k, double r) {
    switch (k.family) {
        case KernelFamily::kMatern52: {
            const double t = kSqrt5 * r;
            return (1.0 + t + t * t / 3.0) * std::exp(-t);
        }
        case KernelFamily::kSquaredExponential:
            return std::exp(-0.5 * r * r);
    }
    return 0.0;
}

}  // namespace

void validate(const Kernel& k) {
    if (k.variance <= 0.0 || !std::isfinite(k.variance)) {
        throw std::invalid_argument("kernel: variance must be positive and finite");
    }
    if (k.lengthscales.size() == 0) {
        throw std::invalid_argument("kernel: lengthscales are empty");
    }
    for (int i = 0; i < k.lengthscales.size(); ++i) {
        if (k.lengthscales[i] <= 0.0 || !std::isfinite(k.lengthscales[i])) {
            throw std::invalid_argument("kernel: lengthscales must be positive and finite");
        }
    }
}

double kernel_eval(const Kernel& k, const Vector& a, const Vector& b) {
    return k.variance * profile(k, scaled_distance(k, a, b));
}

Vector kernel_row(const Kernel& k, const Matrix& a, const Vector& b) {
    const Eigen::ArrayXd inv_l = k.lengthscales.array().inverse();
    const Eigen::ArrayXd r2 =
        ((a.colwise() - b).array().colwise() * inv_l).square().colwise().sum().transpose();
    switch (k.family) {
        case KernelFamily::kMatern52: {
            const Eigen::ArrayXd t = kSqrt5 * r2.sqrt();
            return k.variance * ((1.0 + t + t.square() / 3.0) * (-t).exp());
        }
        case KernelFamily::kSquaredExponential:
            return k.variance * (-0.5 * r2).exp();
    }
    return Vector::Zero(a.cols());
}

Matrix kernel_matrix(const Kernel& k, const Matrix& a, const Matrix& b) {
    Matrix out(a.cols(), b.cols());
    for (int j = 0; j < b.cols(); ++j) {
        for (int i = 0; i < a.cols(); ++i) {
            out(i, j) = kernel_eval(k, a.col(i), b.col(j));
        }
    }
    return out;
}

Matrix kernel_matrix(const Kernel& k, const Matrix& a) {
    const int n = static_cast<int>(a.cols());
    Matrix out(n, n);
    for (int j = 0; j < n; ++j) {
        out(j, j) = k.variance;
        for (int i = j + 1; i < n; ++i) {
            const double v = kernel_eval(k, a.col(i), a.col(j));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

}  // namespace gibbon
