#include "gibbon/stats.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <stdexcept>

namespace gibbon {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
// Below this point erfc's tail error (~z^2 ulp) amplified by the z + h(z)
// cancellation costs digits; the inverse Mills series is exact to rounding.
constexpr double kTailSwitch = -18.0;

// Phi(z)/phi(z) * (-z) = sum_k (-1)^k (2k-1)!! u^k with u = 1/z^2, truncated
// where the terms reach rounding level for |z| >= 18.
inline double mills_series(double u) {
    return 1.0 +
           u * (-1.0 +
                u * (3.0 +
                     u * (-15.0 +
                          u * (105.0 +
                               u * (-945.0 +
                                    u * (10395.0 + u * (-135135.0 + u * 2027025.0)))))));
}

// (1 - S(u)) / u with the sign folded in: coefficients (2k+1)!!.
inline double mills_series_tail(double u) {
    return 1.0 +
           u * (-3.0 +
                u * (15.0 +
                     u * (-105.0 +
                          u * (945.0 + u * (-10395.0 + u * (135135.0 - u * 2027025.0))))));
}

}  // namespace

double norm_pdf(double z) {
    return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double norm_cdf(double z) {
    return 0.5 * std::erfc(-z / kSqrt2);
}

double norm_logcdf(double z) {
    if (z >= kTailSwitch) {
        return std::log(norm_cdf(z));
    }
    const double u = 1.0 / (z * z);
    return -0.5 * z * z - 0.5 * kLog2Pi - std::log(-z) + std::log(mills_series(u));
}

double hazard(double z) {
    if (std::isinf(z)) return z > 0 ? 0.0 : kInf;
    if (z >= kTailSwitch) {
        return norm_pdf(z) / norm_cdf(z);
    }
    const double u = 1.0 / (z * z);
    return -z / mills_series(u);
}

double truncation_factor(double z) {
    constexpr double kLo = 1e-300;
    constexpr double kHi = 1.0 - 1e-16;
    double v;
    if (std::isinf(z)) {
        v = z > 0 ? 0.0 : 1.0;
    } else if (z >= kTailSwitch) {
        const double h = hazard(z);
        v = h * (z + h);
    } else {
        // Algebraic rearrangement of h(z+h) that avoids the z + h cancellation:
        // with S = mills_series(u), v = -z^2 (S - 1) / S^2 = T(u) / S(u)^2.
        const double u = 1.0 / (z * z);
        const double s = mills_series(u);
        v = mills_series_tail(u) / (s * s);
    }
    if (v < kLo) return kLo;
    if (v > kHi) return kHi;
    return v;
}

const Quadrature& gauss_legendre(int order) {
    static std::map<int, Quadrature> cache;
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    Quadrature q;
    q.nodes.resize(order);
    q.weights.resize(order);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton on P_n, starting from the Chebyshev estimate of the root.
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        q.nodes[i] = -x;
        q.nodes[order - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        q.weights[i] = w;
        q.weights[order - 1 - i] = w;
    }
    return cache.emplace(order, std::move(q)).first->second;
}

double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
    const int n = static_cast<int>(x.size());
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("mvn_logpdf: covariance not positive definite");
    }
    const Vector d = x - mean;
    const Vector w = llt.matrixL().solve(d);
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
    return -0.5 * w.squaredNorm() - logdet - 0.5 * n * kLog2Pi;
}

namespace {

// P(xi_1 <= a1, L21 xi_1 + L22 xi_2 <= u2, ...) for iid standard normal xi,
// by conditioning on xi_1 and integrating with Gauss-Legendre. Integration is
// cut at -8.5 sigma; the mass beyond is ~1e-17.
double sequential_cdf(const Matrix& chol, const Vector& upper, int from) {
    const int b = static_cast<int>(upper.size());
    const double a = upper[from] / chol(from, from);
    if (from == b - 1) return norm_cdf(a);

    const double lo = -8.5;
    const double hi = std::min(a, 8.5);
    if (hi <= lo) return 0.0;

    const Quadrature& q = gauss_legendre(80);
    const double mid = 0.5 * (hi + lo);
    const double len = 0.5 * (hi - lo);
    double total = 0.0;
    Vector rest(b);
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double t = mid + len * q.nodes[i];
        for (int j = from + 1; j < b; ++j) rest[j] = upper[j] - chol(j, from) * t;
        total += q.weights[i] * norm_pdf(t) * sequential_cdf(chol, rest, from + 1);
    }
    double result = len * total;
    if (a > 8.5) result += norm_cdf(a) - norm_cdf(8.5);
    return result;
}

}  // namespace

double mvn_cdf(const Vector& upper, const Vector& mean, const Matrix& cov) {
    const int b = static_cast<int>(upper.size());
    if (b < 1 || b > 3) {
        throw std::invalid_argument("mvn_cdf: dimension must be 1..3");
    }
    if (b == 1) {
        return norm_cdf((upper[0] - mean[0]) / std::sqrt(cov(0, 0)));
    }
    Matrix c = cov;
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success) {
        c.diagonal().array() += 1e-12 * cov.diagonal().mean();
        llt.compute(c);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("mvn_cdf: covariance not positive definite");
        }
    }
    const Matrix chol = llt.matrixL();
    return sequential_cdf(chol, upper - mean, 0);
}

double digamma(double x) {
    if (x <= 0.0) throw std::invalid_argument("digamma: x must be positive");
    double result = 0.0;
    while (x < 16.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 -
                      inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
    return result;
}

double logdet_psd(const Matrix& a, double floor) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    double logdet = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        logdet += std::log(std::max(es.eigenvalues()[i], floor));
    }
    return logdet;
}

}  // namespace gibbon
