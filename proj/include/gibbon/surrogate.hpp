#pragma once

#include "gibbon/types.hpp"

#include <vector>

namespace gibbon {

// Correlations are kept strictly inside (-1, 1) so every log(1 - rho^2 ...)
// downstream stays finite.
inline constexpr double kRhoClamp = 1.0 - 1e-9;

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

// A candidate solved against the training data: posterior cross-covariances
// with other projected candidates reduce to an O(n) dot product.
struct Projection {
    Vector xn;        // model-internal (normalised) coordinates
    int level = 0;
    Vector solved;    // L^-1 k_n(z), model-internal units
    double mean = 0;  // posterior mean, raw units
};

// Joint predictive summary of a candidate batch z_1..z_B: the observations
// A_i = y(z_i) the batch would produce, the objective values C_i = g(x_i)
// at the same locations, and the per-candidate correlation between the two.
// sigma_A includes the observation noise of each candidate's level; sigma_C
// is the latent objective covariance.
struct PredictiveBundle {
    Vector mu_A;
    Matrix sigma_A;
    Vector mu_C;
    Matrix sigma_C;
    Vector rho;

    int size() const { return static_cast<int>(rho.size()); }
};

class Surrogate {
  public:
    virtual ~Surrogate() = default;

    virtual int dim() const = 0;
    virtual int levels() const = 0;
    virtual double observation_noise(int level) const = 0;  // raw variance

    // Entry-wise posterior oracle: every call redoes the O(n^2) solve against
    // the training set. Inner loops that touch many entries should project
    // once per candidate and use the cached path instead.
    virtual double posterior_mean(const Candidate& z) const = 0;
    virtual double posterior_cov(const Candidate& a, const Candidate& b) const = 0;

    virtual Projection project(const Candidate& z) const = 0;
    virtual double cov(const Projection& a, const Projection& b) const = 0;

    // Batched objective (level 0) posterior over raw input columns.
    virtual void objective_mean_sd(const Matrix& points, Vector& mean, Vector& sd) const = 0;
    virtual void objective_joint(const Matrix& points, Vector& mean, Matrix& cov) const = 0;
};

// Assembles the joint predictive bundle entry by entry through the posterior
// covariance oracle. Diagonals are clamped at zero, both covariance blocks
// are repaired to PSD, and rho is clamped into (-1, 1).
PredictiveBundle bundle(const Surrogate& model, const std::vector<Candidate>& candidates);

}  // namespace gibbon
