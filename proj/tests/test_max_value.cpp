#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gibbon/gp.hpp"
#include "gibbon/max_value.hpp"
#include "gibbon/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

using namespace gibbon;

namespace {

// Deterministic surrogate with a closed-form mean surface and zero posterior
// spread; exercises the degenerate sampler paths.
class FlatSurrogate final : public Surrogate {
  public:
    int dim() const override { return 1; }
    int levels() const override { return 1; }
    double observation_noise(int) const override { return 0.0; }
    double posterior_mean(const Candidate& z) const override { return mean(z.x[0]); }
    double posterior_cov(const Candidate&, const Candidate&) const override { return 0.0; }
    Projection project(const Candidate& z) const override {
        return Projection{z.x, z.level, Vector(), mean(z.x[0])};
    }
    double cov(const Projection&, const Projection&) const override { return 0.0; }
    void objective_mean_sd(const Matrix& points, Vector& mu, Vector& sd) const override {
        mu.resize(points.cols());
        for (int j = 0; j < points.cols(); ++j) mu[j] = mean(points(0, j));
        sd = Vector::Zero(points.cols());
    }
    void objective_joint(const Matrix& points, Vector& mu, Matrix& cov) const override {
        Vector sd;
        objective_mean_sd(points, mu, sd);
        cov = Matrix::Zero(points.cols(), points.cols());
    }

  private:
    static double mean(double x) { return 3.0 - (x - 0.5) * (x - 0.5); }
};

GpPosterior sin_model(int n_obs, double noise) {
    Dataset data;
    data.X.resize(1, 0);
    for (int i = 0; i < n_obs; ++i) {
        const double x = 7.0 * i / (n_obs - 1);
        data.append(Vector::Constant(1, x), std::sin(x), 0);
    }
    Box box;
    box.lo = Vector::Constant(1, 0.0);
    box.hi = Vector::Constant(1, 7.0);
    return GpPosterior(data, Kernel::matern52(1.0, Vector::Constant(1, 0.18)), noise, box);
}

// Dense evenly spaced check grid; tracks the posterior surface the random
// sampler grid sees to within the grid resolution.
void surface_stats(const Surrogate& model, double lo, double hi, int n, double& max_mu,
                   double& sigma_at_argmax, double& max_sd) {
    Matrix grid(1, n);
    for (int j = 0; j < n; ++j) grid(0, j) = lo + (hi - lo) * j / (n - 1);
    Vector mu, sd;
    model.objective_mean_sd(grid, mu, sd);
    int arg = 0;
    max_mu = mu.maxCoeff(&arg);
    sigma_at_argmax = sd[arg];
    max_sd = sd.maxCoeff();
}

double median(Vector v) {
    std::sort(v.data(), v.data() + v.size());
    return v[v.size() / 2];
}

}  // namespace

TEST_CASE("zero spread surface gives point mass samples from both samplers") {
    FlatSurrogate model;
    Matrix cands(1, 3);
    cands << 0.1, 0.5, 0.9;
    const SearchSpace space = SearchSpace::discrete_set(cands);

    const MaxValueSamples g = gumbel_sample(model, space, 7, 0, 5);
    REQUIRE(g.values.size() == 7);
    for (int i = 0; i < 7; ++i) CHECK(g.values[i] == 3.0);
    CHECK(g.method == MaxValueSamples::Method::kGumbel);
    CHECK(g.grid_size == 3);

    const MaxValueSamples t = thompson_sample(model, space, 4, 0, 5);
    for (int i = 0; i < 4; ++i) CHECK(t.values[i] == 3.0);
    CHECK(t.method == MaxValueSamples::Method::kExactThompson);
}

TEST_CASE("degenerate grids are rejected") {
    FlatSurrogate model;
    Matrix one(1, 1);
    one << 0.5;
    CHECK_THROWS_AS(gumbel_sample(model, SearchSpace::discrete_set(one), 5, 0, 1),
                    std::invalid_argument);

    Box box;
    box.lo = Vector::Constant(1, 0.0);
    box.hi = Vector::Constant(1, 1.0);
    const SearchSpace cont = SearchSpace::continuous(box);
    CHECK_THROWS_AS(gumbel_sample(model, cont, 5, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(gumbel_sample(model, cont, 0, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS(thompson_sample(model, cont, 5, 5000, 1), std::invalid_argument);
}

TEST_CASE("gumbel draws land just above the posterior mean peak") {
    const GpPosterior model = sin_model(20, 1e-6);
    Box box;
    box.lo = Vector::Constant(1, 0.0);
    box.hi = Vector::Constant(1, 7.0);
    const SearchSpace space = SearchSpace::continuous(box);

    double max_mu = 0.0, sig_star = 0.0, max_sd = 0.0;
    surface_stats(model, 0.0, 7.0, 4001, max_mu, sig_star, max_sd);

    const MaxValueSamples s = gumbel_sample(model, space, 10000, 4000, 17);
    const double lo_band = max_mu - 1e-3;
    const double hi_band = max_mu + 4.0 * max_sd + 1e-3;
    int inside = 0;
    for (int i = 0; i < s.values.size(); ++i) {
        CHECK(std::isfinite(s.values[i]));
        if (s.values[i] >= lo_band && s.values[i] <= hi_band) ++inside;
    }
    CHECK(inside == s.values.size());
}

TEST_CASE("thompson at a single point reduces to a plain gaussian draw") {
    const GpPosterior model = sin_model(12, 1e-2);
    Matrix one(1, 1);
    one << 3.3;
    const SearchSpace space = SearchSpace::discrete_set(one);

    Vector mu, sd;
    model.objective_mean_sd(one, mu, sd);
    REQUIRE(sd[0] > 1e-4);

    const int M = 4000;
    const MaxValueSamples s = thompson_sample(model, space, M, 0, 23);
    const double mean = s.values.mean();
    CHECK(std::abs(mean - mu[0]) < 3.0 * sd[0] / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("both samplers agree on the location of the max distribution") {
    // Candidates sit 2.5 lengthscales apart, so the independence product the
    // Gumbel fit assumes is a faithful description of the joint law that the
    // path sampler draws from, and the two must agree. (On grids much denser
    // than the lengthscale the independence approximation deliberately
    // overestimates the max; that regime is not an agreement oracle.)
    Dataset data;
    data.X.resize(1, 0);
    for (int i = 0; i < 12; ++i) {
        const double x = 64.0 * i / 11.0;
        data.append(Vector::Constant(1, x), std::sin(x / 3.0), 0);
    }
    Box box;
    box.lo = Vector::Constant(1, 0.0);
    box.hi = Vector::Constant(1, 64.0);
    const GpPosterior model(
        data, Kernel::matern52(1.0, Vector::Constant(1, 0.1 / 64.0)), 1e-4, box);

    Matrix cands(1, 257);
    for (int j = 0; j < 257; ++j) cands(0, j) = 64.0 * j / 256.0;
    const SearchSpace space = SearchSpace::discrete_set(cands);

    Vector mu, sd;
    model.objective_mean_sd(cands, mu, sd);
    const double max_sd = sd.maxCoeff();
    REQUIRE(max_sd > 0.5);

    const MaxValueSamples g = gumbel_sample(model, space, 1001, 0, 31);
    const MaxValueSamples t = thompson_sample(model, space, 1001, 0, 31);
    CHECK(std::abs(median(g.values) - median(t.values)) < 0.5 * max_sd);
}

TEST_CASE("samples stay above the sanity band and are seed deterministic") {
    const GpPosterior model = sin_model(9, 0.05);
    Box box;
    box.lo = Vector::Constant(1, 0.0);
    box.hi = Vector::Constant(1, 7.0);
    const SearchSpace space = SearchSpace::continuous(box);

    double max_mu = 0.0, sig_star = 0.0, max_sd = 0.0;
    surface_stats(model, 0.0, 7.0, 2001, max_mu, sig_star, max_sd);

    const MaxValueSamples a = gumbel_sample(model, space, 64, 500, 77);
    const MaxValueSamples b = gumbel_sample(model, space, 64, 500, 77);
    const MaxValueSamples c = gumbel_sample(model, space, 64, 500, 78);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);

    const double band = max_mu - 6.0 * max_sd - 1e-9;
    for (int i = 0; i < a.values.size(); ++i) CHECK(a.values[i] >= band);
    const MaxValueSamples t = thompson_sample(model, space, 64, 400, 77);
    for (int i = 0; i < t.values.size(); ++i) CHECK(t.values[i] >= band);
}
