#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gibbon/gp.hpp"
#include "gibbon/mf_gp.hpp"
#include "gibbon/rng.hpp"
#include "gibbon/surrogate.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace gibbon;

namespace {

MfKernel test_mf_kernel(int d, const Vector& dv, const Vector& mix) {
    MfKernel k;
    k.spatial = Kernel::matern52(1.0, Vector::Constant(d, 0.7));
    k.delta_variance = dv;
    k.mixing = mix;
    return k;
}

Dataset random_mf_dataset(int d, int n, int levels, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data;
    data.X.resize(d, n);
    data.y.resize(n);
    data.level.resize(n);
    for (int i = 0; i < n; ++i) {
        data.X.col(i) = rng.uniform_vector(Box::unit(d));
        data.y[i] = rng.normal();
        data.level[i] = static_cast<int>(rng.integer(levels));
    }
    // Guarantee coverage of every level.
    for (int l = 0; l < levels && l < n; ++l) data.level[l] = l;
    return data;
}

// Dense reference for the joint predictive bundle: stack the training set,
// the candidate observations A, and the objective values C into one prior
// covariance, then condition on the training block by explicit inverse.
PredictiveBundle dense_bundle(const Dataset& data, const MfKernel& kern, const Vector& noise,
                              const std::vector<Candidate>& cands) {
    const int n = data.size();
    const int B = static_cast<int>(cands.size());
    const int t = n + 2 * B;

    std::vector<Vector> pts;
    std::vector<int> levs;
    pts.reserve(t);
    for (int i = 0; i < n; ++i) {
        pts.push_back(data.X.col(i));
        levs.push_back(data.level[i]);
    }
    for (const auto& c : cands) {
        pts.push_back(c.x);
        levs.push_back(c.level);
    }
    for (const auto& c : cands) {
        pts.push_back(c.x);
        levs.push_back(0);
    }

    Matrix K(t, t);
    for (int i = 0; i < t; ++i) {
        for (int j = 0; j < t; ++j) {
            K(i, j) = kern.eval(pts[i], levs[i], pts[j], levs[j]);
        }
    }
    Matrix Ktt = K.topLeftCorner(n, n);
    for (int i = 0; i < n; ++i) Ktt(i, i) += noise[data.level[i]];
    const Matrix Kst = K.bottomLeftCorner(2 * B, n);
    const Matrix Kss = K.bottomRightCorner(2 * B, 2 * B);
    const Matrix Kinv = Ktt.inverse();

    const Vector mu = Kst * (Kinv * data.y);
    const Matrix cov = Kss - Kst * Kinv * Kst.transpose();

    PredictiveBundle b;
    b.mu_A = mu.head(B);
    b.mu_C = mu.tail(B);
    b.sigma_A = cov.topLeftCorner(B, B);
    b.sigma_C = cov.bottomRightCorner(B, B);
    for (int i = 0; i < B; ++i) b.sigma_A(i, i) += noise[cands[i].level];
    b.rho.resize(B);
    for (int i = 0; i < B; ++i) {
        b.rho[i] = cov(i, B + i) / std::sqrt(b.sigma_A(i, i) * b.sigma_C(i, i));
    }
    return b;
}

}  // namespace

TEST_CASE("level covariance follows the mixing recursion") {
    Vector dv(3);
    dv << 0.5, 0.3, 0.2;
    Vector mix(2);
    mix << 0.8, -0.6;
    const MfKernel k = test_mf_kernel(1, dv, mix);
    const Matrix lc = k.level_cov();

    // V2 = 0.2; V1 = (-0.6)^2 V2 + 0.3 = 0.372; V0 = 0.8^2 V1 + 0.5 = 0.73808.
    CHECK(lc(2, 2) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(lc(1, 1) == doctest::Approx(0.372).epsilon(1e-15));
    CHECK(lc(0, 0) == doctest::Approx(0.73808).epsilon(1e-15));
    CHECK(lc(1, 2) == doctest::Approx(-0.6 * 0.2).epsilon(1e-15));
    CHECK(lc(0, 1) == doctest::Approx(0.8 * 0.372).epsilon(1e-15));
    CHECK(lc(0, 2) == doctest::Approx(0.8 * -0.6 * 0.2).epsilon(1e-15));
    CHECK(lc.isApprox(lc.transpose(), 1e-15));

    Eigen::SelfAdjointEigenSolver<Matrix> es(lc);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("single level model matches the plain posterior") {
    const int d = 2;
    Dataset data = random_mf_dataset(d, 8, 1, 11);

    MfKernel mk = test_mf_kernel(d, Vector::Constant(1, 1.9), Vector());
    MfPosterior mf(data, mk, Vector::Constant(1, 0.03));

    Kernel flat = mk.spatial;
    flat.variance = 1.9;
    GpPosterior gp(data, flat, 0.03);

    Rng rng(5);
    for (int t = 0; t < 6; ++t) {
        Candidate za{rng.uniform_vector(Box::unit(d)), 0};
        Candidate zb{rng.uniform_vector(Box::unit(d)), 0};
        CHECK(mf.posterior_mean(za) == doctest::Approx(gp.posterior_mean(za)).epsilon(1e-12));
        CHECK(mf.posterior_cov(za, zb) == doctest::Approx(gp.posterior_cov(za, zb)).epsilon(1e-12));
    }
}

TEST_CASE("zero mixing decouples the objective from other levels") {
    const int d = 2;
    Dataset data = random_mf_dataset(d, 14, 2, 21);

    Vector dv(2);
    dv << 0.8, 1.4;
    MfKernel mk = test_mf_kernel(d, dv, Vector::Zero(1));
    MfPosterior mf(data, mk, Vector::Constant(2, 0.05));

    Dataset only0;
    only0.X.resize(d, 0);
    for (int i = 0; i < data.size(); ++i) {
        if (data.level[i] == 0) only0.append(data.X.col(i), data.y[i], 0);
    }
    Kernel flat = mk.spatial;
    flat.variance = dv[0];
    GpPosterior gp(only0, flat, 0.05);

    Rng rng(6);
    for (int t = 0; t < 6; ++t) {
        Candidate z{rng.uniform_vector(Box::unit(d)), 0};
        CHECK(mf.posterior_mean(z) == doctest::Approx(gp.posterior_mean(z)).epsilon(1e-10));
        CHECK(mf.posterior_cov(z, z) == doctest::Approx(gp.posterior_cov(z, z)).epsilon(1e-10));
    }
}

TEST_CASE("bundle correlations reach the prior level correlation far from data") {
    const int d = 2;
    Vector dv(3);
    dv << 0.6, 0.4, 0.9;
    Vector mix(2);
    mix << 0.7, 0.5;
    const MfKernel mk = test_mf_kernel(d, dv, mix);
    const Matrix lc = mk.level_cov();

    // All observations live ~100 lengthscales away, so the posterior at the
    // candidates is the prior and the noise-free correlation between an
    // observation at level s and the objective is lc(s,0)/sqrt(lc(s,s)lc(0,0)).
    Dataset data = random_mf_dataset(d, 9, 3, 31);
    data.X.array() += 100.0;
    MfPosterior mf(data, mk, Vector::Constant(3, 1e-10));

    std::vector<Candidate> cands;
    Rng rng(7);
    for (int s = 0; s < 3; ++s) cands.push_back({rng.uniform_vector(Box::unit(d)), s});
    const PredictiveBundle b = bundle(mf, cands);

    for (int i = 0; i < 3; ++i) {
        const int s = cands[i].level;
        const double expected = lc(s, 0) / std::sqrt(lc(s, s) * lc(0, 0));
        CHECK(b.rho[i] == doctest::Approx(expected).epsilon(1e-4));
        CHECK(b.sigma_C(i, i) == doctest::Approx(lc(0, 0)).epsilon(1e-4));
    }
}

TEST_CASE("bundle agrees with the dense conditioning reference") {
    const int d = 2;
    Vector dv(3);
    dv << 0.5, 0.7, 1.1;
    Vector mix(2);
    mix << 0.9, -0.4;
    const MfKernel mk = test_mf_kernel(d, dv, mix);
    Vector noise(3);
    noise << 0.04, 0.09, 0.16;

    Dataset data = random_mf_dataset(d, 12, 3, 41);
    MfPosterior mf(data, mk, noise);

    Rng rng(8);
    std::vector<Candidate> cands;
    cands.push_back({rng.uniform_vector(Box::unit(d)), 2});
    cands.push_back({rng.uniform_vector(Box::unit(d)), 0});
    cands.push_back({rng.uniform_vector(Box::unit(d)), 1});

    const PredictiveBundle got = bundle(mf, cands);
    const PredictiveBundle want = dense_bundle(data, mk, noise, cands);

    for (int i = 0; i < 3; ++i) {
        CHECK(got.mu_A[i] == doctest::Approx(want.mu_A[i]).epsilon(1e-10));
        CHECK(got.mu_C[i] == doctest::Approx(want.mu_C[i]).epsilon(1e-10));
        CHECK(got.rho[i] == doctest::Approx(want.rho[i]).epsilon(1e-10));
        for (int j = 0; j < 3; ++j) {
            CHECK(got.sigma_A(i, j) == doctest::Approx(want.sigma_A(i, j)).epsilon(1e-9));
            CHECK(got.sigma_C(i, j) == doctest::Approx(want.sigma_C(i, j)).epsilon(1e-9));
        }
    }
}

TEST_CASE("observation and objective decouple given the objective at that input") {
    // For any x_j, x_i and level s: Cov(A_j, C_i | C_j) = 0 in the prior,
    // because the cross covariance factorises through the level covariance.
    const int d = 3;
    Vector dv(4);
    dv << 0.3, 0.6, 0.5, 1.2;
    Vector mix(3);
    mix << 0.8, 0.6, -0.7;
    const MfKernel mk = test_mf_kernel(d, dv, mix);

    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        const Vector xj = rng.uniform_vector(Box::unit(d));
        const Vector xi = rng.uniform_vector(Box::unit(d));
        const int s = 1 + static_cast<int>(rng.integer(3));

        const double c_aj_ci = mk.eval(xj, s, xi, 0);
        const double c_aj_cj = mk.eval(xj, s, xj, 0);
        const double c_cj_ci = mk.eval(xj, 0, xi, 0);
        const double v_cj = mk.eval(xj, 0, xj, 0);
        const double conditional = c_aj_ci - c_aj_cj * c_cj_ci / v_cj;
        CHECK(std::abs(conditional) < 1e-8);
    }
}

TEST_CASE("fit recovers a usable two level model") {
    const int d = 1;
    Rng rng(12);
    Dataset data;
    data.X.resize(d, 0);
    // Cheap level is a shifted copy of the target; 8 cheap + 6 target points.
    auto truth = [](double x) { return std::sin(3.0 * x); };
    for (int i = 0; i < 8; ++i) {
        const double x = i / 7.0;
        data.append(Vector::Constant(1, x), truth(x) + 0.3, 1);
    }
    for (int i = 0; i < 6; ++i) {
        const double x = i / 5.0;
        data.append(Vector::Constant(1, x), truth(x), 0);
    }

    MfFitOptions opts;
    opts.restarts = 3;
    opts.max_iterations = 40;
    opts.seed = 77;
    MfPosterior mf = MfPosterior::fit(data, 2, opts);

    CHECK(mf.levels() == 2);
    CHECK(mf.size() == 14);
    CHECK(std::isfinite(mf.log_marginal_likelihood()));

    // Interpolation at a held-out target point should beat the prior guess.
    Candidate z{Vector::Constant(1, 0.55), 0};
    const double err = std::abs(mf.posterior_mean(z) - truth(0.55));
    CHECK(err < 0.25);

    // Missing-level datasets are rejected.
    Dataset no0 = data;
    for (int i = 0; i < no0.size(); ++i) no0.level[i] = 1;
    CHECK_THROWS_AS(MfPosterior::fit(no0, 2, opts), std::invalid_argument);
}
