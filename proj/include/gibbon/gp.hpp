#pragma once

#include "gibbon/dataset.hpp"
#include "gibbon/kernel.hpp"
#include "gibbon/surrogate.hpp"
#include "gibbon/types.hpp"

#include <cstdint>
#include <memory>

namespace gibbon {

struct GpFitOptions {
    KernelFamily family = KernelFamily::kMatern52;
    int restarts = 8;
    int max_iterations = 100;
    double step_tolerance = 1e-6;
    std::uint64_t seed = 0;
    bool learn_noise = true;
    // Standardised-units noise: the fixed value when learn_noise is off, the
    // starting value otherwise.
    double noise_variance = 1e-2;
    // Warm start (standardised units); overrides the default first start.
    const Kernel* warm_kernel = nullptr;
    double warm_noise = -1.0;
};

// Exact GP conditioned on a dataset. Construction conditions on the data as
// given (no hidden rescaling); fit() normalises inputs to the unit cube and
// standardises observations internally, maximises the marginal likelihood by
// multi-start ascent in log-parameter space, and returns a posterior that
// reports every quantity back in raw units.
class GpPosterior final : public Surrogate {
  public:
    GpPosterior(const Dataset& data, Kernel kernel, double noise_variance,
                const Box& box = {});
    ~GpPosterior() override;
    GpPosterior(GpPosterior&&) noexcept;
    GpPosterior& operator=(GpPosterior&&) noexcept;
    GpPosterior(const GpPosterior&);

    static GpPosterior fit(const Dataset& data, const GpFitOptions& opts,
                           const Box& box = {});

    int dim() const override;
    int levels() const override { return 1; }
    double observation_noise(int level) const override;
    double posterior_mean(const Candidate& z) const override;
    double posterior_cov(const Candidate& a, const Candidate& b) const override;
    Projection project(const Candidate& z) const override;
    double cov(const Projection& a, const Projection& b) const override;
    void objective_mean_sd(const Matrix& points, Vector& mean, Vector& sd) const override;
    void objective_joint(const Matrix& points, Vector& mean, Matrix& cov) const override;

    // Joint predictive law at raw input columns; cov is symmetric PSD after
    // clamping.
    void predict_joint(const Matrix& points, Vector& mean, Matrix& cov) const;
    MeanVar predict(const Vector& x) const;

    // Marginal likelihood of the conditioned data in raw units.
    double log_marginal_likelihood() const;

    double jitter() const;
    const Kernel& internal_kernel() const;
    double internal_noise() const;
    const Box& box() const;
    int size() const;

  private:
    GpPosterior();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Textbook marginal likelihood of y under GP(0, kernel) + iid noise, taken
// literally on the data given (no normalisation).
double log_marginal_likelihood(const Matrix& X, const Vector& y, const Kernel& kernel,
                               double noise_variance);

}  // namespace gibbon
