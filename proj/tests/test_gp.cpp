#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gibbon/gp.hpp"
#include "gibbon/rng.hpp"
#include "gibbon/stats.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace gibbon;

namespace {

Dataset random_dataset(int d, int n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data;
    data.X.resize(d, n);
    data.y.resize(n);
    data.level = IntVector::Zero(n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) data.X(i, j) = rng.uniform(-1.0, 1.0);
        data.y[j] = rng.normal();
    }
    return data;
}

Kernel test_kernel(int d) {
    return Kernel::matern52(1.3, Vector::Constant(d, 0.7));
}

}  // namespace

TEST_CASE("kernel evaluates to exactly the signal variance at zero distance") {
    const Kernel k = test_kernel(3);
    Vector x(3);
    x << 0.2, -0.4, 1.1;
    CHECK(kernel_eval(k, x, x) == 1.3);

    const Kernel se = Kernel::squared_exponential(0.8, Vector::Constant(3, 0.5));
    CHECK(kernel_eval(se, x, x) == 0.8);
}

TEST_CASE("matern-5/2 profile matches the closed form at a hand point") {
    Vector a(2), b(2);
    a << 0.0, 0.0;
    b << 0.3, -0.4;  // scaled distance 0.5 / 0.5 = 1 with lengthscale 0.5
    const Kernel k = Kernel::matern52(2.0, Vector::Constant(2, 0.5));
    const double t = std::sqrt(5.0);
    const double expected = 2.0 * (1.0 + t + t * t / 3.0) * std::exp(-t);
    CHECK(kernel_eval(k, a, b) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("kernel matrix is symmetric with exact diagonal") {
    const Dataset data = random_dataset(2, 12, 7);
    const Kernel k = test_kernel(2);
    const Matrix km = kernel_matrix(k, data.X);
    CHECK((km - km.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 12; ++i) CHECK(km(i, i) == 1.3);
}

TEST_CASE("marginal likelihood of a single zero observation with unit kernel") {
    Dataset data;
    data.X = Matrix::Zero(1, 1);
    data.y = Vector::Zero(1);
    const Kernel k = Kernel::matern52(1.0, Vector::Ones(1));
    CHECK(log_marginal_likelihood(data.X, data.y, k, 0.0) ==
          doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-14));
}

TEST_CASE("one-point posterior mean follows the shrinkage formula") {
    Dataset data;
    data.X = Matrix::Zero(1, 1);
    data.y = Vector::Constant(1, 2.0);
    const Kernel k = test_kernel(1);
    const double noise = 0.01;
    GpPosterior gp(data, k, noise);
    const double expected = 2.0 * 1.3 / (1.3 + noise);
    CHECK(gp.predict(Vector::Zero(1)).mean == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("joint prediction matches an independent dense solve") {
    const Dataset data = random_dataset(2, 4, 11);
    const Kernel k = test_kernel(2);
    const double noise = 0.05;
    GpPosterior gp(data, k, noise);

    Rng rng(13);
    Matrix stars(2, 3);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 2; ++i) stars(i, j) = rng.uniform(-1.0, 1.0);

    Vector mean;
    Matrix cov;
    gp.predict_joint(stars, mean, cov);

    // Oracle: explicit inverse, no Cholesky.
    const Matrix km = kernel_matrix(k, data.X) + noise * Matrix::Identity(4, 4);
    const Matrix inv = km.inverse();
    const Matrix cross = kernel_matrix(k, data.X, stars);
    const Vector mean_oracle = cross.transpose() * inv * data.y;
    const Matrix cov_oracle =
        kernel_matrix(k, stars) - cross.transpose() * inv * cross;

    CHECK((mean - mean_oracle).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((cov - cov_oracle).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("entry-wise covariance oracle agrees with the joint path") {
    const Dataset data = random_dataset(3, 8, 5);
    const Kernel k = test_kernel(3);
    GpPosterior gp(data, k, 0.02);

    Rng rng(17);
    Matrix stars(3, 3);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) stars(i, j) = rng.uniform(-1.0, 1.0);

    Vector mean;
    Matrix cov;
    gp.predict_joint(stars, mean, cov);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const Candidate a{stars.col(i), 0};
            const Candidate b{stars.col(j), 0};
            CHECK(gp.posterior_cov(a, b) == doctest::Approx(cov(i, j)).epsilon(1e-9));
        }
        CHECK(gp.posterior_mean(Candidate{stars.col(i), 0}) ==
              doctest::Approx(mean[i]).epsilon(1e-10));
    }

    // Projection fast path gives the same entries.
    const Projection pa = gp.project(Candidate{stars.col(0), 0});
    const Projection pb = gp.project(Candidate{stars.col(2), 0});
    CHECK(gp.cov(pa, pb) == doctest::Approx(cov(0, 2)).epsilon(1e-9));
    CHECK(pa.mean == doctest::Approx(mean[0]).epsilon(1e-10));
}

TEST_CASE("near-noiseless gp interpolates sin") {
    Dataset data;
    data.X.resize(1, 5);
    data.y.resize(5);
    for (int i = 0; i < 5; ++i) {
        data.X(0, i) = -2.0 + i * 1.0;
        data.y[i] = std::sin(data.X(0, i));
    }
    GpFitOptions opts;
    opts.learn_noise = false;
    opts.noise_variance = 1e-6;
    opts.seed = 3;
    const GpPosterior gp = GpPosterior::fit(data, opts);
    for (int i = 0; i < 5; ++i) {
        CHECK(gp.predict(data.X.col(i)).mean ==
              doctest::Approx(data.y[i]).epsilon(1e-3));
    }
}

TEST_CASE("all-zero observations give an identically zero predictive mean") {
    Dataset data = random_dataset(2, 6, 23);
    data.y.setZero();
    GpPosterior gp(data, test_kernel(2), 0.1);
    Rng rng(29);
    for (int t = 0; t < 10; ++t) {
        Vector x(2);
        x << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
        CHECK(std::abs(gp.predict(x).mean) < 1e-14);
    }
}

TEST_CASE("fit improves on its starting point and is permutation invariant") {
    const Dataset data = random_dataset(2, 20, 31);
    GpFitOptions opts;
    opts.seed = 5;
    opts.restarts = 4;
    const GpPosterior fitted = GpPosterior::fit(data, opts);

    // Default start evaluated directly.
    Vector ys = data.y;
    const double shift = ys.mean();
    double scale = std::sqrt((ys.array() - shift).square().sum() / ys.size());
    if (scale <= 1e-12) scale = 1.0;
    ys = (ys.array() - shift) / scale;
    const double start_lml =
        log_marginal_likelihood(data.X, ys, Kernel::matern52(1.0, Vector::Constant(2, 0.4)), 1e-2) -
        data.size() * std::log(scale);
    CHECK(fitted.log_marginal_likelihood() >= start_lml - 1e-9);

    // Reversed dataset: same model up to factorisation rounding.
    Dataset rev;
    rev.X.resize(2, 20);
    rev.y.resize(20);
    rev.level = IntVector::Zero(20);
    for (int i = 0; i < 20; ++i) {
        rev.X.col(i) = data.X.col(19 - i);
        rev.y[i] = data.y[19 - i];
    }
    const GpPosterior fitted_rev = GpPosterior::fit(rev, opts);
    CHECK(std::abs(fitted.log_marginal_likelihood() - fitted_rev.log_marginal_likelihood()) <
          1e-9 * std::max(1.0, std::abs(fitted.log_marginal_likelihood())));
}

TEST_CASE("jitter ladder rescues duplicate points at zero noise") {
    Dataset data;
    data.X.resize(2, 4);
    data.X << 0.1, 0.1, 0.7, 0.7, 0.3, 0.3, -0.2, -0.2;
    data.y.resize(4);
    data.y << 1.0, 1.0, -0.5, -0.5;
    const Kernel k = test_kernel(2);
    GpPosterior gp(data, k, 0.0);
    CHECK(gp.jitter() > 0.0);
    CHECK(gp.jitter() <= 1e-4 * 1.3 * (1.0 + 1e-9));
    Vector mean;
    Matrix cov;
    gp.predict_joint(data.X.leftCols(2), mean, cov);
    CHECK(std::isfinite(mean[0]));
    CHECK(cov(0, 0) >= 0.0);
}

TEST_CASE("input normalisation keeps raw-coordinate predictions consistent") {
    Rng rng(41);
    Dataset data;
    data.X.resize(2, 12);
    data.y.resize(12);
    data.level = IntVector::Zero(12);
    Box box;
    box.lo = Vector(2);
    box.hi = Vector(2);
    box.lo << 0.0, -5.0;
    box.hi << 10.0, 5.0;
    for (int j = 0; j < 12; ++j) {
        data.X.col(j) = rng.uniform_vector(box);
        data.y[j] = std::cos(0.5 * data.X(0, j)) + 0.1 * data.X(1, j);
    }
    GpFitOptions opts;
    opts.learn_noise = false;
    opts.noise_variance = 1e-8;
    const GpPosterior gp = GpPosterior::fit(data, opts, box);
    for (int j = 0; j < 12; ++j) {
        CHECK(gp.predict(data.X.col(j)).mean == doctest::Approx(data.y[j]).epsilon(1e-3));
    }
    // Far from data the mean reverts toward the observation average.
    Vector far(2);
    far << 9.9, 4.9;
    const MeanVar mv = gp.predict(far);
    CHECK(std::isfinite(mv.mean));
    CHECK(mv.var > 0.0);
}

TEST_CASE("predictive variance clamps tiny negatives to zero") {
    // Heavy duplication at zero noise drives the predictive variance at the
    // training points to rounding level; it must never be reported negative.
    Dataset data;
    data.X.resize(1, 6);
    data.X << 0.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    data.y.resize(6);
    data.y << 0.5, 0.5, 0.5, -0.5, -0.5, -0.5;
    GpPosterior gp(data, test_kernel(1), 0.0);
    Vector mean, sd;
    gp.objective_mean_sd(data.X, mean, sd);
    for (int i = 0; i < 6; ++i) CHECK(sd[i] >= 0.0);
}
