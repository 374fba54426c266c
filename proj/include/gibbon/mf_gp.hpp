#pragma once

#include "gibbon/dataset.hpp"
#include "gibbon/kernel.hpp"
#include "gibbon/surrogate.hpp"
#include "gibbon/types.hpp"

#include <cstdint>
#include <memory>

namespace gibbon {

// Covariance over (input, fidelity) pairs built from the recursive linear
// model f_l = rho_l * f_{l+1} + delta_l, run from the coarsest level up to
// level 0 (the objective). All level discrepancies share one unit-variance
// spatial kernel and differ only in output variance, so the full kernel
// factorises as levelCov(s, s') * k_x(x, x'); that factorisation is what
// makes an observation at (x, s) conditionally independent of the objective
// elsewhere given the objective at x.
struct MfKernel {
    Kernel spatial;          // variance pinned to 1; lengthscales per dimension
    Vector delta_variance;   // v_l >= 0 per level, level order 0..L-1
    Vector mixing;           // rho_l couples level l to level l+1; size L-1

    int levels() const { return static_cast<int>(delta_variance.size()); }

    // L x L PSD covariance between level processes implied by the recursion.
    Matrix level_cov() const;

    double eval(const Vector& xa, int la, const Vector& xb, int lb) const;
    double prior_var(int level) const;
};

void validate(const MfKernel& k);

struct MfFitOptions {
    KernelFamily family = KernelFamily::kMatern52;
    int restarts = 8;
    int max_iterations = 100;
    double step_tolerance = 1e-6;
    std::uint64_t seed = 0;
    bool learn_noise = true;
    double noise_variance = 1e-2;          // fixed or starting value, standardised units
    const MfKernel* warm_kernel = nullptr;
    Vector warm_noise;                     // standardised units; empty = none
};

// Multi-fidelity GP over (x, level) with per-level observation noise.
class MfPosterior final : public Surrogate {
  public:
    MfPosterior(const Dataset& data, MfKernel kernel, Vector noise_variances,
                const Box& box = {});
    ~MfPosterior() override;
    MfPosterior(MfPosterior&&) noexcept;
    MfPosterior& operator=(MfPosterior&&) noexcept;
    MfPosterior(const MfPosterior&);

    // Requires at least one observation at every level in 0..levels-1.
    static MfPosterior fit(const Dataset& data, int levels, const MfFitOptions& opts,
                           const Box& box = {});

    int dim() const override;
    int levels() const override;
    double observation_noise(int level) const override;
    double posterior_mean(const Candidate& z) const override;
    double posterior_cov(const Candidate& a, const Candidate& b) const override;
    Projection project(const Candidate& z) const override;
    double cov(const Projection& a, const Projection& b) const override;
    void objective_mean_sd(const Matrix& points, Vector& mean, Vector& sd) const override;
    void objective_joint(const Matrix& points, Vector& mean, Matrix& cov) const override;

    double log_marginal_likelihood() const;
    double jitter() const;
    const MfKernel& internal_kernel() const;
    const Vector& internal_noise() const;
    int size() const;

  private:
    MfPosterior();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gibbon
