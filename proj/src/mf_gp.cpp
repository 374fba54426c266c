#include "gibbon/mf_gp.hpp"

#include "gibbon/optimize.hpp"
#include "gibbon/rng.hpp"
#include "gibbon/stats.hpp"

#include "conditioned.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace gibbon {

Matrix MfKernel::level_cov() const {
    const int L = levels();
    Vector total(L);
    total[L - 1] = delta_variance[L - 1];
    for (int i = L - 2; i >= 0; --i) {
        total[i] = mixing[i] * mixing[i] * total[i + 1] + delta_variance[i];
    }
    Matrix lc(L, L);
    for (int j = 0; j < L; ++j) {
        lc(j, j) = total[j];
        double prod = 1.0;
        for (int i = j - 1; i >= 0; --i) {
            prod *= mixing[i];
            lc(i, j) = prod * total[j];
            lc(j, i) = lc(i, j);
        }
    }
    return lc;
}

double MfKernel::eval(const Vector& xa, int la, const Vector& xb, int lb) const {
    return level_cov()(la, lb) * kernel_eval(spatial, xa, xb);
}

double MfKernel::prior_var(int level) const { return level_cov()(level, level); }

void validate(const MfKernel& k) {
    validate(k.spatial);
    if (k.spatial.variance != 1.0) {
        throw std::invalid_argument("mf kernel: spatial kernel must have unit variance");
    }
    const int L = k.levels();
    if (L < 1) throw std::invalid_argument("mf kernel: needs at least one level");
    if (k.mixing.size() != L - 1) {
        throw std::invalid_argument("mf kernel: mixing size must be levels - 1");
    }
    double sum = 0.0;
    for (int i = 0; i < L; ++i) {
        const double v = k.delta_variance[i];
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("mf kernel: level variances must be finite and >= 0");
        }
        sum += v;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("mf kernel: all level variances are zero");
    for (int i = 0; i < L - 1; ++i) {
        if (!std::isfinite(k.mixing[i])) {
            throw std::invalid_argument("mf kernel: mixing weights must be finite");
        }
    }
}

namespace {

// Per-entry eval must not rebuild the level covariance, so the conditioned
// state carries a cached copy refreshed whenever the kernel changes.
struct MfAdapter {
    MfKernel k;
    Matrix lc;

    void refresh() { lc = k.level_cov(); }
    double eval(const Vector& xa, int la, const Vector& xb, int lb) const {
        return lc(la, lb) * kernel_eval(k.spatial, xa, xb);
    }
    double prior_var(int level) const { return lc(level, level); }
};

void require_levels(const Dataset& data, int L) {
    for (int i = 0; i < data.level.size(); ++i) {
        if (data.level[i] < 0 || data.level[i] >= L) {
            throw std::invalid_argument("mf: dataset fidelity tag outside model levels");
        }
    }
}

void require_level(const Candidate& z, int L) {
    if (z.level < 0 || z.level >= L) {
        throw std::invalid_argument("mf: candidate level outside model levels");
    }
}

}  // namespace

struct MfPosterior::Impl {
    detail::Conditioned<MfAdapter> c;
};

MfPosterior::MfPosterior(const Dataset& data, MfKernel kernel, Vector noise_variances,
                         const Box& box)
    : impl_(std::make_unique<Impl>()) {
    validate(data);
    validate(kernel);
    const int L = kernel.levels();
    require_levels(data, L);
    if (noise_variances.size() != L) {
        throw std::invalid_argument("mf: one noise variance per level required");
    }
    for (int l = 0; l < L; ++l) {
        if (noise_variances[l] < 0.0 || !std::isfinite(noise_variances[l])) {
            throw std::invalid_argument("mf: noise variances must be non-negative");
        }
    }
    auto& c = impl_->c;
    c.box = box;
    c.Xn = detail::normalise_columns(box, data.X);
    c.lev = data.level;
    c.ystd = data.y;
    c.kern.k = std::move(kernel);
    c.kern.refresh();
    c.noise = std::move(noise_variances);
    c.condition();
}

MfPosterior::MfPosterior() : impl_(std::make_unique<Impl>()) {}
MfPosterior::~MfPosterior() = default;
MfPosterior::MfPosterior(MfPosterior&&) noexcept = default;
MfPosterior& MfPosterior::operator=(MfPosterior&&) noexcept = default;
MfPosterior::MfPosterior(const MfPosterior& other)
    : impl_(std::make_unique<Impl>(*other.impl_)) {}

MfPosterior MfPosterior::fit(const Dataset& data, int levels, const MfFitOptions& opts,
                             const Box& box) {
    validate(data);
    if (levels < 1) throw std::invalid_argument("mf: fit needs at least one level");
    require_levels(data, levels);
    IntVector counts = IntVector::Zero(levels);
    for (int i = 0; i < data.size(); ++i) counts[data.level[i]] += 1;
    for (int l = 0; l < levels; ++l) {
        if (counts[l] == 0) {
            throw std::invalid_argument("mf: fit needs at least one observation per level");
        }
    }
    const int d = data.dim();
    const int L = levels;

    detail::Conditioned<MfAdapter> base;
    base.box = box;
    base.Xn = detail::normalise_columns(box, data.X);
    base.lev = data.level;
    detail::standardise_params(data.y, base.shift, base.scale);
    base.ystd = (data.y.array() - base.shift) / base.scale;

    const bool learn_noise = opts.learn_noise;
    const int p = d + L + (L - 1) + (learn_noise ? L : 0);

    // theta = [log lengthscales (d), log level variances (L),
    //          mixing weights (L-1, linear), log noise per level?]
    Vector lo(p), hi(p);
    for (int i = 0; i < d; ++i) {
        lo[i] = std::log(1e-3);
        hi[i] = std::log(50.0);
    }
    for (int l = 0; l < L; ++l) {
        lo[d + l] = std::log(1e-6);
        hi[d + l] = std::log(1e3);
    }
    for (int l = 0; l < L - 1; ++l) {
        lo[d + L + l] = -3.0;
        hi[d + L + l] = 3.0;
    }
    if (learn_noise) {
        for (int l = 0; l < L; ++l) {
            lo[d + 2 * L - 1 + l] = std::log(1e-9);
            hi[d + 2 * L - 1 + l] = std::log(10.0);
        }
    }

    auto apply = [&](detail::Conditioned<MfAdapter>& c, const Vector& theta) {
        c.kern.k.spatial.family = opts.family;
        c.kern.k.spatial.variance = 1.0;
        c.kern.k.spatial.lengthscales = theta.head(d).array().exp();
        c.kern.k.delta_variance = theta.segment(d, L).array().exp();
        c.kern.k.mixing = theta.segment(d + L, L - 1);
        c.kern.refresh();
        if (learn_noise) {
            c.noise = theta.tail(L).array().exp();
        } else {
            c.noise = Vector::Constant(L, opts.noise_variance);
        }
    };

    auto objective = [&](const Vector& theta) -> double {
        detail::Conditioned<MfAdapter> c = base;
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
        for (int i = 0; i < d; ++i) {
            start0[i] = std::log(opts.warm_kernel->spatial.lengthscales[i]);
        }
        for (int l = 0; l < L; ++l) {
            start0[d + l] = std::log(std::max(opts.warm_kernel->delta_variance[l], 1e-6));
        }
        start0.segment(d + L, L - 1) = opts.warm_kernel->mixing;
        if (learn_noise) {
            for (int l = 0; l < L; ++l) {
                const double w =
                    opts.warm_noise.size() == L ? opts.warm_noise[l] : opts.noise_variance;
                start0[d + 2 * L - 1 + l] = std::log(w > 0.0 ? w : opts.noise_variance);
            }
        }
    } else {
        for (int i = 0; i < d; ++i) start0[i] = std::log(0.4);
        for (int l = 0; l < L; ++l) start0[d + l] = std::log(1.0 / L);
        start0.segment(d + L, L - 1).setOnes();
        if (learn_noise) {
            for (int l = 0; l < L; ++l) start0[d + 2 * L - 1 + l] = std::log(opts.noise_variance);
        }
    }
    start0 = start0.cwiseMax(lo).cwiseMin(hi);

    AscentOptions ascent;
    ascent.max_iterations = opts.max_iterations;
    ascent.step_tolerance = opts.step_tolerance;
    ascent.fd_step = 1e-4;
    ascent.initial_step = 0.5;
    ascent.value_tolerance = 1e-6;

    Vector best_theta;
    double best_value = -kInf;
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        Vector x0;
        if (r == 0) {
            x0 = start0;
        } else {
            Rng rng(Rng::derive(opts.seed, 2000 + r));
            x0.resize(p);
            for (int i = 0; i < d; ++i) x0[i] = rng.uniform(std::log(0.05), std::log(2.0));
            for (int l = 0; l < L; ++l) x0[d + l] = rng.uniform(std::log(0.05), std::log(2.0));
            for (int l = 0; l < L - 1; ++l) x0[d + L + l] = rng.uniform(-2.0, 2.0);
            if (learn_noise) {
                for (int l = 0; l < L; ++l) {
                    x0[d + 2 * L - 1 + l] = rng.uniform(std::log(1e-4), std::log(0.5));
                }
            }
        }
        const AscentResult res = ascend(objective, x0, lo, hi, ascent);
        if (res.value > best_value) {
            best_value = res.value;
            best_theta = res.x;
        }
    }
    if (!std::isfinite(best_value)) {
        throw std::runtime_error("mf: marginal likelihood ascent failed from every start");
    }

    MfPosterior out;
    out.impl_->c = base;
    apply(out.impl_->c, best_theta);
    out.impl_->c.condition();
    return out;
}

int MfPosterior::dim() const { return static_cast<int>(impl_->c.Xn.rows()); }
int MfPosterior::levels() const { return impl_->c.kern.k.levels(); }

double MfPosterior::observation_noise(int level) const {
    if (level < 0 || level >= levels()) {
        throw std::invalid_argument("mf: level outside model levels");
    }
    const auto& c = impl_->c;
    return c.scale * c.scale * c.noise[level];
}

double MfPosterior::posterior_mean(const Candidate& z) const {
    require_level(z, levels());
    return impl_->c.entry_mean(z);
}

double MfPosterior::posterior_cov(const Candidate& a, const Candidate& b) const {
    require_level(a, levels());
    require_level(b, levels());
    return impl_->c.entry_cov(a, b);
}

Projection MfPosterior::project(const Candidate& z) const {
    require_level(z, levels());
    return impl_->c.make_projection(z);
}

double MfPosterior::cov(const Projection& a, const Projection& b) const {
    return impl_->c.projected_cov(a, b);
}

void MfPosterior::objective_mean_sd(const Matrix& points, Vector& mean, Vector& sd) const {
    impl_->c.batched_mean_sd(points, 0, mean, sd);
}

void MfPosterior::objective_joint(const Matrix& points, Vector& mean, Matrix& cov) const {
    impl_->c.batched_joint(points, 0, mean, cov);
}

double MfPosterior::log_marginal_likelihood() const {
    const auto& c = impl_->c;
    return c.lml_std - c.n() * std::log(c.scale);
}

double MfPosterior::jitter() const { return impl_->c.jitter; }
const MfKernel& MfPosterior::internal_kernel() const { return impl_->c.kern.k; }
const Vector& MfPosterior::internal_noise() const { return impl_->c.noise; }
int MfPosterior::size() const { return impl_->c.n(); }

}  // namespace gibbon
