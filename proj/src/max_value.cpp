#include "gibbon/max_value.hpp"

#include "gibbon/rng.hpp"
#include "gibbon/stats.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gibbon {

namespace {

constexpr double kDegenerateSd = 1e-12;

Matrix sampler_grid(const SearchSpace& space, int N, std::uint64_t seed, std::uint64_t stream) {
    if (space.discrete()) return space.candidates;
    if (N < 1) throw std::invalid_argument("max value sampler: grid size must be positive");
    Rng rng(Rng::derive(seed, stream));
    Matrix g(space.dim(), N);
    for (int j = 0; j < N; ++j) g.col(j) = rng.uniform_vector(space.box);
    return g;
}

// Every sample must clear the sanity floor mu* - 5 sigma* at the grid argmax
// of the posterior mean.
double sample_floor(const Vector& mu, const Vector& sd) {
    int arg = 0;
    const double mu_star = mu.maxCoeff(&arg);
    return mu_star - 5.0 * sd[arg];
}

}  // namespace

MaxValueSamples gumbel_sample(const Surrogate& model, const SearchSpace& space, int M, int N,
                              std::uint64_t seed) {
    validate(space);
    if (M < 1) throw std::invalid_argument("max value sampler: needs at least one sample");
    const Matrix grid = sampler_grid(space, N, seed, 101);
    const int n = static_cast<int>(grid.cols());
    if (n < 2) throw std::invalid_argument("max value sampler: needs at least two grid points");

    Vector mu, sd;
    model.objective_mean_sd(grid, mu, sd);
    const double mu_star = mu.maxCoeff();
    const double floor = sample_floor(mu, sd);

    MaxValueSamples out;
    out.grid_size = n;
    out.method = MaxValueSamples::Method::kGumbel;
    if (sd.maxCoeff() < kDegenerateSd) {
        out.values = Vector::Constant(M, mu_star);
        return out;
    }

    // Grid points sorted by their upper reach mu + 6 sigma. While scanning in
    // that order, the first point whose reach falls below y bounds every later
    // factor at Phi(6), so the tail of the sum is dropped.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Vector reach = mu + 6.0 * sd;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (reach[a] != reach[b]) return reach[a] > reach[b];
        return a < b;
    });
    Vector reach_s(n), mu_s(n), sd_s(n);
    for (int i = 0; i < n; ++i) {
        reach_s[i] = reach[order[i]];
        mu_s[i] = mu[order[i]];
        sd_s[i] = sd[order[i]];
    }

    auto log_max_cdf = [&](double y) -> double {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            if (reach_s[i] < y) break;
            if (sd_s[i] < kDegenerateSd) {
                if (y < mu_s[i]) return -kInf;
                continue;
            }
            s += norm_logcdf((y - mu_s[i]) / sd_s[i]);
        }
        return s;
    };

    const double hi = reach_s[0];
    double lo = std::min(mu_star, hi - kDegenerateSd);
    double step = std::max(sd.maxCoeff(), kDegenerateSd);
    while (log_max_cdf(lo) > std::log(0.25)) {
        lo -= step;
        step *= 2.0;
    }

    auto quantile = [&](double q) -> double {
        const double target = std::log(q);
        double a = lo;
        double b = hi;
        for (int it = 0; it < 200; ++it) {
            if (b - a <= 1e-13 * std::max(1.0, std::abs(a) + std::abs(b))) break;
            const double mid = 0.5 * (a + b);
            if (log_max_cdf(mid) < target) {
                a = mid;
            } else {
                b = mid;
            }
        }
        return 0.5 * (a + b);
    };

    const double y25 = quantile(0.25);
    const double y50 = quantile(0.50);
    const double y75 = quantile(0.75);
    const double scale_b =
        (y25 - y75) / (std::log(std::log(4.0 / 3.0)) - std::log(std::log(4.0)));
    const double loc_a = y50 + scale_b * std::log(std::log(2.0));

    Rng rng(Rng::derive(seed, 202));
    out.values.resize(M);
    for (int j = 0; j < M; ++j) {
        if (!(scale_b > 0.0)) {
            out.values[j] = y50;
        } else {
            double u = rng.uniform();
            while (u <= 0.0) u = rng.uniform();
            out.values[j] = loc_a - scale_b * std::log(-std::log(u));
        }
        out.values[j] = std::max(out.values[j], floor);
    }
    return out;
}

MaxValueSamples thompson_sample(const Surrogate& model, const SearchSpace& space, int M, int N,
                                std::uint64_t seed) {
    validate(space);
    if (M < 1) throw std::invalid_argument("max value sampler: needs at least one sample");
    const Matrix grid = sampler_grid(space, N, seed, 303);
    const int n = static_cast<int>(grid.cols());
    if (n > 4096) {
        throw std::invalid_argument("max value sampler: grid too large for a dense factorisation");
    }

    Vector mu;
    Matrix cov;
    model.objective_joint(grid, mu, cov);

    MaxValueSamples out;
    out.grid_size = n;
    out.method = MaxValueSamples::Method::kExactThompson;
    if (cov.diagonal().maxCoeff() < kDegenerateSd * kDegenerateSd) {
        out.values = Vector::Constant(M, mu.maxCoeff());
        return out;
    }
    const double floor = sample_floor(mu, cov.diagonal().cwiseMax(0.0).cwiseSqrt());

    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        const double diag_mean = cov.diagonal().mean();
        bool ok = false;
        for (double j = 1e-12; j <= 1.0000001e-4; j *= 10.0) {
            Matrix cj = cov;
            cj.diagonal().array() += j * diag_mean;
            llt.compute(cj);
            if (llt.info() == Eigen::Success) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw std::runtime_error("max value sampler: path covariance failed to factorise");
        }
    }

    Rng rng(Rng::derive(seed, 404));
    out.values.resize(M);
    for (int j = 0; j < M; ++j) {
        const Vector path = mu + llt.matrixL() * rng.normal_vector(n);
        out.values[j] = std::max(path.maxCoeff(), floor);
    }
    return out;
}

}  // namespace gibbon
