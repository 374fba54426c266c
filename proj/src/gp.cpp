#include "gibbon/gp.hpp"

#include "gibbon/optimize.hpp"
#include "gibbon/rng.hpp"
#include "gibbon/stats.hpp"

#include "conditioned.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace gibbon {

namespace {

struct SfKernel {
    Kernel k;
    double eval(const Vector& a, int, const Vector& b, int) const {
        return kernel_eval(k, a, b);
    }
    void eval_row(const Matrix& xs, const IntVector&, const Vector& z, int, Vector& out) const {
        out = kernel_row(k, xs, z);
    }
    double prior_var(int) const { return k.variance; }
};

void require_single_level(const Dataset& data) {
    for (int i = 0; i < data.level.size(); ++i) {
        if (data.level[i] != 0) {
            throw std::invalid_argument("gp: dataset carries fidelity tags above 0");
        }
    }
}

void require_level0(const Candidate& z) {
    if (z.level != 0) {
        throw std::invalid_argument("gp: candidate level must be 0 for a single-fidelity model");
    }
}

}  // namespace

struct GpPosterior::Impl {
    detail::Conditioned<SfKernel> c;
};

GpPosterior::GpPosterior(const Dataset& data, Kernel kernel, double noise_variance,
                         const Box& box)
    : impl_(std::make_unique<Impl>()) {
    validate(data);
    validate(kernel);
    require_single_level(data);
    if (noise_variance < 0.0 || !std::isfinite(noise_variance)) {
        throw std::invalid_argument("gp: noise variance must be non-negative");
    }
    auto& c = impl_->c;
    c.box = box;
    c.Xn = detail::normalise_columns(box, data.X);
    c.lev = IntVector::Zero(data.size());
    c.ystd = data.y;
    c.kern.k = std::move(kernel);
    c.noise = Vector::Constant(1, noise_variance);
    c.condition();
}

GpPosterior::GpPosterior() : impl_(std::make_unique<Impl>()) {}
GpPosterior::~GpPosterior() = default;
GpPosterior::GpPosterior(GpPosterior&&) noexcept = default;
GpPosterior& GpPosterior::operator=(GpPosterior&&) noexcept = default;
GpPosterior::GpPosterior(const GpPosterior& other)
    : impl_(std::make_unique<Impl>(*other.impl_)) {}

GpPosterior GpPosterior::fit(const Dataset& data, const GpFitOptions& opts, const Box& box) {
    validate(data);
    require_single_level(data);
    if (data.size() < 1) throw std::invalid_argument("gp: fit needs at least one observation");
    const int d = data.dim();

    detail::Conditioned<SfKernel> base;
    base.box = box;
    base.Xn = detail::normalise_columns(box, data.X);
    base.lev = IntVector::Zero(data.size());
    detail::standardise_params(data.y, base.shift, base.scale);
    base.ystd = (data.y.array() - base.shift) / base.scale;

    const bool learn_noise = opts.learn_noise;
    const int p = 1 + d + (learn_noise ? 1 : 0);

    // theta = [log variance, log lengthscales..., log noise?]
    Vector lo(p), hi(p);
    lo[0] = std::log(1e-6);
    hi[0] = std::log(1e3);
    for (int i = 0; i < d; ++i) {
        lo[1 + i] = std::log(1e-3);
        hi[1 + i] = std::log(50.0);
    }
    if (learn_noise) {
        lo[p - 1] = std::log(1e-9);
        hi[p - 1] = std::log(10.0);
    }

    auto apply = [&](detail::Conditioned<SfKernel>& c, const Vector& theta) {
        c.kern.k.family = opts.family;
        c.kern.k.variance = std::exp(theta[0]);
        c.kern.k.lengthscales = theta.segment(1, d).array().exp();
        const double nv = learn_noise ? std::exp(theta[p - 1]) : opts.noise_variance;
        c.noise = Vector::Constant(1, nv);
    };

    auto objective = [&](const Vector& theta) -> double {
        detail::Conditioned<SfKernel> c = base;
        apply(c, theta);
        try {
            c.condition();
        } catch (const std::runtime_error&) {
            return -kInf;
        }
        return std::isfinite(c.lml_std) ? c.lml_std : -kInf;
    };

    Vector start0(p);
    if (opts.warm_kernel != nullptr) {
        start0[0] = std::log(opts.warm_kernel->variance);
        for (int i = 0; i < d; ++i) start0[1 + i] = std::log(opts.warm_kernel->lengthscales[i]);
        if (learn_noise) {
            start0[p - 1] = std::log(opts.warm_noise > 0.0 ? opts.warm_noise : opts.noise_variance);
        }
    } else {
        start0[0] = 0.0;
        for (int i = 0; i < d; ++i) start0[1 + i] = std::log(0.4);
        if (learn_noise) start0[p - 1] = std::log(opts.noise_variance);
    }
    start0 = start0.cwiseMax(lo).cwiseMin(hi);

    AscentOptions ascent;
    ascent.max_iterations = opts.max_iterations;
    ascent.step_tolerance = opts.step_tolerance;
    ascent.fd_step = 1e-4;
    ascent.initial_step = 0.5;
    // Sub-1e-6 relative likelihood gains do not move the posterior; stop there
    // instead of crawling to the iteration cap.
    ascent.value_tolerance = 1e-6;

    Vector best_theta;
    double best_value = -kInf;
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        Vector x0;
        if (r == 0) {
            x0 = start0;
        } else {
            Rng rng(Rng::derive(opts.seed, 1000 + r));
            x0.resize(p);
            x0[0] = rng.uniform(std::log(0.2), std::log(5.0));
            for (int i = 0; i < d; ++i) x0[1 + i] = rng.uniform(std::log(0.05), std::log(2.0));
            if (learn_noise) x0[p - 1] = rng.uniform(std::log(1e-4), std::log(0.5));
        }
        const AscentResult res = ascend(objective, x0, lo, hi, ascent);
        if (res.value > best_value) {
            best_value = res.value;
            best_theta = res.x;
        }
    }
    if (!std::isfinite(best_value)) {
        throw std::runtime_error("gp: marginal likelihood ascent failed from every start");
    }

    GpPosterior out;
    out.impl_->c = base;
    apply(out.impl_->c, best_theta);
    out.impl_->c.condition();
    return out;
}

int GpPosterior::dim() const { return static_cast<int>(impl_->c.Xn.rows()); }

double GpPosterior::observation_noise(int level) const {
    if (level != 0) throw std::invalid_argument("gp: level must be 0");
    const auto& c = impl_->c;
    return c.scale * c.scale * c.noise[0];
}

double GpPosterior::posterior_mean(const Candidate& z) const {
    require_level0(z);
    return impl_->c.entry_mean(z);
}

double GpPosterior::posterior_cov(const Candidate& a, const Candidate& b) const {
    require_level0(a);
    require_level0(b);
    return impl_->c.entry_cov(a, b);
}

Projection GpPosterior::project(const Candidate& z) const {
    require_level0(z);
    return impl_->c.make_projection(z);
}

double GpPosterior::cov(const Projection& a, const Projection& b) const {
    return impl_->c.projected_cov(a, b);
}

void GpPosterior::objective_mean_sd(const Matrix& points, Vector& mean, Vector& sd) const {
    impl_->c.batched_mean_sd(points, 0, mean, sd);
}

void GpPosterior::objective_joint(const Matrix& points, Vector& mean, Matrix& cov) const {
    impl_->c.batched_joint(points, 0, mean, cov);
}

void GpPosterior::predict_joint(const Matrix& points, Vector& mean, Matrix& cov) const {
    impl_->c.batched_joint(points, 0, mean, cov);
}

MeanVar GpPosterior::predict(const Vector& x) const {
    Vector mean, sd;
    impl_->c.batched_mean_sd(x, 0, mean, sd);
    return MeanVar{mean[0], sd[0] * sd[0]};
}

double GpPosterior::log_marginal_likelihood() const {
    const auto& c = impl_->c;
    return c.lml_std - c.n() * std::log(c.scale);
}

double GpPosterior::jitter() const { return impl_->c.jitter; }
const Kernel& GpPosterior::internal_kernel() const { return impl_->c.kern.k; }
double GpPosterior::internal_noise() const { return impl_->c.noise[0]; }
const Box& GpPosterior::box() const { return impl_->c.box; }
int GpPosterior::size() const { return impl_->c.n(); }

double log_marginal_likelihood(const Matrix& X, const Vector& y, const Kernel& kernel,
                               double noise_variance) {
    validate(kernel);
    detail::Conditioned<SfKernel> c;
    c.Xn = X;
    c.lev = IntVector::Zero(X.cols());
    c.ystd = y;
    c.kern.k = kernel;
    c.noise = Vector::Constant(1, noise_variance);
    c.condition();
    return c.lml_std;
}

}  // namespace gibbon
