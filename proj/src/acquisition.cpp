#include "gibbon/acquisition.hpp"

#include "gibbon/stats.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace gibbon {

namespace {

// Standardised thresholds are pinned to +-40: beyond that the truncation
// factor has saturated and gamma^2 arithmetic would overflow long before.
constexpr double kGammaClamp = 40.0;

double standardised_threshold(double m, double mu_c, double sd_c) {
    double gamma;
    if (sd_c > 1e-150) {
        gamma = (m - mu_c) / sd_c;
    } else {
        gamma = m >= mu_c ? kGammaClamp : -kGammaClamp;
    }
    return std::min(kGammaClamp, std::max(-kGammaClamp, gamma));
}

// -(1/2M) sum_m log(1 - rho^2 v(gamma(m))) for one batch element. An empty
// sample set contributes nothing, which leaves diversity-only scoring usable.
double quality_term(double rho, double mu_c, double sig_c, const Vector& maxima) {
    if (maxima.size() == 0) return 0.0;
    const double sd_c = std::sqrt(std::max(sig_c, 0.0));
    double sum = 0.0;
    for (int m = 0; m < maxima.size(); ++m) {
        const double gamma = standardised_threshold(maxima[m], mu_c, sd_c);
        sum += std::log1p(-rho * rho * truncation_factor(gamma));
    }
    return -0.5 * sum / static_cast<double>(maxima.size());
}

Matrix correlation_matrix(const Matrix& sigma) {
    const int B = static_cast<int>(sigma.rows());
    const Vector s = sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
    Matrix r(B, B);
    for (int j = 0; j < B; ++j) {
        r(j, j) = 1.0;
        for (int i = j + 1; i < B; ++i) {
            const double denom = s[i] * s[j];
            double v = denom > 1e-300 ? sigma(i, j) / denom : 0.0;
            v = std::min(1.0, std::max(-1.0, v));
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    return r;
}

std::vector<Candidate> joined(const std::vector<Candidate>& a, const std::vector<Candidate>& b) {
    std::vector<Candidate> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

const MaxValueSamples& require_max_values(const AcquisitionContext& ctx) {
    if (ctx.max_values == nullptr || ctx.max_values->values.size() == 0) {
        throw std::invalid_argument("acquisition: max-value samples required");
    }
    return *ctx.max_values;
}

const Surrogate& require_model(const AcquisitionContext& ctx) {
    if (ctx.model == nullptr) throw std::invalid_argument("acquisition: model required");
    return *ctx.model;
}

GibbonParts decompose(const Surrogate& model, const MaxValueSamples& mv,
                      const std::vector<Candidate>& batch) {
    if (batch.empty()) throw std::invalid_argument("acquisition: empty batch");
    const PredictiveBundle b = bundle(model, batch);
    GibbonParts parts;
    parts.diversity = 0.5 * logdet_psd(correlation_matrix(b.sigma_A), kCorrelationFloor);
    for (int i = 0; i < b.size(); ++i) {
        parts.quality += quality_term(b.rho[i], b.mu_C[i], b.sigma_C(i, i), mv.values);
    }
    return parts;
}

}  // namespace

std::string acquisition_name(Acquisition a) {
    switch (a) {
        case Acquisition::kGibbon: return "gibbon";
        case Acquisition::kGibbonModified: return "gibbon-modified";
        case Acquisition::kMes: return "mes";
        case Acquisition::kEi: return "ei";
        case Acquisition::kLpEi: return "lp-ei";
        case Acquisition::kLpMes: return "lp-mes";
        case Acquisition::kDppExplore: return "dpp-explore";
        case Acquisition::kRandom: return "random";
    }
    return "unknown";
}

std::optional<Acquisition> parse_acquisition(std::string_view name) {
    for (Acquisition a :
         {Acquisition::kGibbon, Acquisition::kGibbonModified, Acquisition::kMes, Acquisition::kEi,
          Acquisition::kLpEi, Acquisition::kLpMes, Acquisition::kDppExplore, Acquisition::kRandom}) {
        if (acquisition_name(a) == name) return a;
    }
    return std::nullopt;
}

double gibbon_batch(const AcquisitionContext& ctx, const std::vector<Candidate>& candidates) {
    const GibbonParts parts = decompose(require_model(ctx), require_max_values(ctx),
                                        joined(ctx.pending, candidates));
    return parts.diversity + parts.quality;
}

double gibbon_modified(const AcquisitionContext& ctx, const std::vector<Candidate>& candidates,
                       int final_batch_size) {
    if (final_batch_size < 1) {
        throw std::invalid_argument("acquisition: final batch size must be >= 1");
    }
    const GibbonParts parts = decompose(require_model(ctx), require_max_values(ctx),
                                        joined(ctx.pending, candidates));
    const double b2 = static_cast<double>(final_batch_size) * final_batch_size;
    return parts.diversity / b2 + parts.quality;
}

GibbonParts gibbon_decomposed(const AcquisitionContext& ctx,
                              const std::vector<Candidate>& candidates) {
    return decompose(require_model(ctx), require_max_values(ctx),
                     joined(ctx.pending, candidates));
}

double gibbon_single(const Surrogate& model, const MaxValueSamples& max_values,
                     const Candidate& z) {
    const Projection obs = model.project(z);
    const double var_obs = model.cov(obs, obs);
    const double sigma_a = var_obs + model.observation_noise(z.level);

    double mu_c, sig_c, cross;
    if (z.level == 0) {
        mu_c = obs.mean;
        sig_c = var_obs;
        cross = var_obs;
    } else {
        const Projection pc = model.project(Candidate{z.x, 0});
        mu_c = pc.mean;
        sig_c = model.cov(pc, pc);
        cross = model.cov(obs, pc);
    }
    const double denom = std::sqrt(std::max(sigma_a * sig_c, 0.0));
    double rho = denom > 1e-300 ? cross / denom : 0.0;
    rho = std::min(kRhoClamp, std::max(-kRhoClamp, rho));
    return quality_term(rho, mu_c, sig_c, max_values.values);
}

double mes(const AcquisitionContext& ctx, const Vector& x) {
    const Surrogate& model = require_model(ctx);
    const Vector& maxima = require_max_values(ctx).values;
    Vector mu, sd;
    model.objective_mean_sd(x, mu, sd);
    double sum = 0.0;
    for (int m = 0; m < maxima.size(); ++m) {
        const double gamma = standardised_threshold(maxima[m], mu[0], sd[0]);
        sum += 0.5 * gamma * hazard(gamma) - norm_logcdf(gamma);
    }
    return sum / static_cast<double>(maxima.size());
}

std::pair<double, double> degenerate_pair(double u) {
    const double g = -0.5 * std::log1p(-truncation_factor(u));
    const double m = 0.5 * u * hazard(u) - norm_logcdf(u);
    return {g, m};
}

double expected_improvement(const AcquisitionContext& ctx, const Vector& x) {
    const Surrogate& model = require_model(ctx);
    Vector mu, sd;
    model.objective_mean_sd(x, mu, sd);
    const double gap = mu[0] - ctx.incumbent_value;
    if (sd[0] < 1e-150) return std::max(gap, 0.0);
    const double z = gap / sd[0];
    return std::max(gap * norm_cdf(z) + sd[0] * norm_pdf(z), 0.0);
}

double soft_penaliser(const Vector& x, const Vector& x_prev, double lipschitz, double g_star,
                      const Surrogate& model) {
    Vector mu, sd;
    model.objective_mean_sd(x_prev, mu, sd);
    const double num = lipschitz * (x - x_prev).norm() - g_star + mu[0];
    if (sd[0] < 1e-150) {
        if (num > 0.0) return 1.0;
        return num < 0.0 ? 0.0 : 0.5;
    }
    return 0.5 * std::erfc(-num / sd[0]);
}

double correlation_penaliser(const AcquisitionContext& ctx, const Vector& x) {
    if (ctx.pending.empty()) return 1.0;
    const Surrogate& model = require_model(ctx);
    std::vector<Candidate> batch = ctx.pending;
    batch.push_back(Candidate{x, 0});
    const PredictiveBundle b = bundle(model, batch);
    return std::exp(logdet_psd(correlation_matrix(b.sigma_A), kCorrelationFloor));
}

double dpp_logdet(const AcquisitionContext& ctx, const std::vector<Candidate>& candidates) {
    const Surrogate& model = require_model(ctx);
    const MaxValueSamples& mv = require_max_values(ctx);
    if (candidates.empty()) throw std::invalid_argument("acquisition: empty batch");
    const PredictiveBundle b = bundle(model, candidates);
    const Matrix r = correlation_matrix(b.sigma_A);
    Vector q(b.size());
    for (int i = 0; i < b.size(); ++i) {
        q[i] = std::exp(gibbon_single(model, mv, candidates[i]));
    }
    const Matrix l = q.asDiagonal() * r * q.asDiagonal();
    return 0.5 * logdet_psd(l, kCorrelationFloor);
}

GibbonBatchScorer::GibbonBatchScorer(const Surrogate& model, const MaxValueSamples& max_values)
    : model_(&model), max_values_(&max_values), chol_(0, 0) {}

void GibbonBatchScorer::project_pair(const Candidate& z, Projection& obs, double& sigma_a,
                                     double& alpha) const {
    obs = model_->project(z);
    const double var_obs = model_->cov(obs, obs);
    sigma_a = var_obs + model_->observation_noise(z.level);

    double mu_c, sig_c, cross;
    if (z.level == 0) {
        mu_c = obs.mean;
        sig_c = var_obs;
        cross = var_obs;
    } else {
        const Projection pc = model_->project(Candidate{z.x, 0});
        mu_c = pc.mean;
        sig_c = model_->cov(pc, pc);
        cross = model_->cov(obs, pc);
    }
    const double denom = std::sqrt(std::max(sigma_a * sig_c, 0.0));
    double rho = denom > 1e-300 ? cross / denom : 0.0;
    rho = std::min(kRhoClamp, std::max(-kRhoClamp, rho));
    alpha = quality_term(rho, mu_c, sig_c, max_values_->values);
}

GibbonParts GibbonBatchScorer::score_parts(const Candidate& z) const {
    Projection obs;
    double sigma_a = 0.0, alpha = 0.0;
    project_pair(z, obs, sigma_a, alpha);

    GibbonParts parts;
    parts.quality = quality_ + alpha;

    const int B = prefix_size();
    if (B == 0) return parts;

    Vector r(B);
    const double sz = std::sqrt(std::max(sigma_a, 0.0));
    for (int i = 0; i < B; ++i) {
        const double denom = sz * std::sqrt(std::max(obs_[i].sigma_a, 0.0));
        double v = denom > 1e-300 ? model_->cov(obs, obs_[i].proj) / denom : 0.0;
        r[i] = std::min(1.0, std::max(-1.0, v));
    }
    const Vector w = chol_.triangularView<Eigen::Lower>().solve(r);
    const double s = std::max(1.0 - w.squaredNorm(), kCorrelationFloor);
    parts.diversity = 0.5 * (logdet_ + std::log(s));
    return parts;
}

double GibbonBatchScorer::score(const Candidate& z) const {
    const GibbonParts parts = score_parts(z);
    return parts.diversity + parts.quality;
}

void GibbonBatchScorer::push(const Candidate& z) {
    Element e;
    project_pair(z, e.proj, e.sigma_a, e.alpha);

    const int B = prefix_size();
    Vector w(B);
    double s = 1.0;
    if (B > 0) {
        Vector r(B);
        const double sz = std::sqrt(std::max(e.sigma_a, 0.0));
        for (int i = 0; i < B; ++i) {
            const double denom = sz * std::sqrt(std::max(obs_[i].sigma_a, 0.0));
            double v = denom > 1e-300 ? model_->cov(e.proj, obs_[i].proj) / denom : 0.0;
            r[i] = std::min(1.0, std::max(-1.0, v));
        }
        w = chol_.triangularView<Eigen::Lower>().solve(r);
        s = std::max(1.0 - w.squaredNorm(), kCorrelationFloor);
    }

    Matrix next = Matrix::Zero(B + 1, B + 1);
    next.topLeftCorner(B, B) = chol_;
    next.block(B, 0, 1, B) = w.transpose();
    next(B, B) = std::sqrt(s);
    chol_ = std::move(next);
    logdet_ += std::log(s);
    quality_ += e.alpha;
    obs_.push_back(std::move(e));
}

double GibbonBatchScorer::prefix_value() const { return 0.5 * logdet_ + quality_; }

}  // namespace gibbon
