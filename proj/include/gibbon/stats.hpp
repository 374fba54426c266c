#pragma once

#include "gibbon/types.hpp"

#include <vector>

namespace gibbon {

inline constexpr double kPi = 3.1415926535897932384626433832795;
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

double norm_pdf(double z);
double norm_cdf(double z);

// log Phi(z), stable into the deep lower tail (asymptotic series below -30).
double norm_logcdf(double z);

// Hazard rate phi(z)/Phi(z) of the standard normal, finite for all z that fit
// in a double. Lower tail uses the inverse Mills series so the 0/0 region is
// never touched.
double hazard(double z);

// h(z) * (z + h(z)): the factor by which upper truncation at z shrinks a
// Gaussian variance. Monotone decreasing, limits 1 (z -> -inf) and 0
// (z -> +inf); clamped to [1e-300, 1 - 1e-16] so downstream logs stay finite.
double truncation_factor(double z);

struct Quadrature {
    std::vector<double> nodes;    // on (-1, 1)
    std::vector<double> weights;
};

// Gauss-Legendre rule, cached per order.
const Quadrature& gauss_legendre(int order);

// Multivariate normal density at x.
double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

// P(X <= upper) for X ~ N(mean, cov), dimensions 1..3. Higher dimensions are
// not needed anywhere and are rejected.
double mvn_cdf(const Vector& upper, const Vector& mean, const Matrix& cov);

double digamma(double x);

// Log-determinant of a symmetric PSD matrix with eigenvalues clamped from
// below at floor (guards correlation matrices that are singular to rounding).
double logdet_psd(const Matrix& a, double floor);

}  // namespace gibbon
