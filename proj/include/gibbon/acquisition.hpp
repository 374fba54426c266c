#pragma once

#include "gibbon/max_value.hpp"
#include "gibbon/surrogate.hpp"
#include "gibbon/types.hpp"

#include <Eigen/Cholesky>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gibbon {

enum class Acquisition {
    kGibbon,
    kGibbonModified,
    kMes,
    kEi,
    kLpEi,
    kLpMes,
    kDppExplore,
    kRandom,
};

std::string acquisition_name(Acquisition a);
std::optional<Acquisition> parse_acquisition(std::string_view name);

// Immutable state one acquisition evaluation reads: the fitted model, the
// sampled objective maxima, any batch elements already chosen this step, and
// the incumbent value (used by improvement-based baselines).
struct AcquisitionContext {
    const Surrogate* model = nullptr;
    const MaxValueSamples* max_values = nullptr;
    std::vector<Candidate> pending;
    double incumbent_value = -kInf;
};

// Eigenvalue floor for predictive correlation matrices; keeps log|R| finite
// for duplicated candidates (the noiseless-duplicate limit is singular).
inline constexpr double kCorrelationFloor = 1e-9;

// Information-based batch score over pending + candidates:
//   1/2 log|R| - (1/2M) sum_i sum_m log(1 - rho_i^2 v(gamma_i(m)))
// where R is the observation correlation matrix, rho_i couples observation i
// to the objective at its location, and v is the truncation factor of the
// objective-level standardised threshold gamma_i(m).
double gibbon_batch(const AcquisitionContext& ctx, const std::vector<Candidate>& candidates);

// Large-batch variant: the diversity term is down-weighted by 1/B^2 (B = the
// final batch size), leaving the quality sum untouched.
double gibbon_modified(const AcquisitionContext& ctx, const std::vector<Candidate>& candidates,
                       int final_batch_size);

struct GibbonParts {
    double diversity = 0.0;  // 1/2 log|R|
    double quality = 0.0;    // sum of single-candidate scores
};

// Exact decomposition: diversity + quality reproduces gibbon_batch().
GibbonParts gibbon_decomposed(const AcquisitionContext& ctx,
                              const std::vector<Candidate>& candidates);

// Single-candidate score through the cached projection path; equals
// gibbon_batch(ctx with empty pending, {z}).
double gibbon_single(const Surrogate& model, const MaxValueSamples& max_values,
                     const Candidate& z);

// Max-value entropy score at an objective-level input:
//   (1/M) sum_m [ gamma h(gamma)/2 - log Phi(gamma) ].
// Exact for noiseless single-fidelity observations.
double mes(const AcquisitionContext& ctx, const Vector& x);

// Scalar noiseless single-candidate forms as functions of the standardised
// threshold u alone; first = information-based score, second = entropy score.
// The first is a lower bound on the second for every u.
std::pair<double, double> degenerate_pair(double u);

double expected_improvement(const AcquisitionContext& ctx, const Vector& x);

// Repulsion factor around an already-chosen point x_prev: 0.5 erfc(-z) with
// z = (L ||x - x_prev|| - g_star + mu(x_prev)) / sd(x_prev).
double soft_penaliser(const Vector& x, const Vector& x_prev, double lipschitz, double g_star,
                      const Surrogate& model);

// Determinant of the predictive correlation over pending + {x at level 0};
// 1 for an empty pending batch.
double correlation_penaliser(const AcquisitionContext& ctx, const Vector& x);

// 1/2 log|L| for the kernel L_ij = q_i q_j R_ij with q_i = exp(single score);
// equals gibbon_batch(ctx, candidates) for an empty pending batch.
double dpp_logdet(const AcquisitionContext& ctx, const std::vector<Candidate>& candidates);

// Incremental greedy scorer. Holds the projections and correlation Cholesky
// of the chosen prefix so each candidate score costs one O(n^2) projection
// pair plus O(B^2), instead of a fresh O(B^2 n^2) bundle.
class GibbonBatchScorer {
  public:
    GibbonBatchScorer(const Surrogate& model, const MaxValueSamples& max_values);

    // gibbon_batch(prefix + {z}).
    double score(const Candidate& z) const;
    // Same evaluation split into diversity and quality, for reweighted or
    // diversity-only selection.
    GibbonParts score_parts(const Candidate& z) const;
    // Appends z to the prefix.
    void push(const Candidate& z);

    int prefix_size() const { return static_cast<int>(obs_.size()); }
    double prefix_value() const;

  private:
    struct Element {
        Projection proj;     // at the observation level
        double sigma_a;      // observation variance incl. noise
        double alpha;        // single-candidate score
    };
    void project_pair(const Candidate& z, Projection& obs, double& sigma_a, double& alpha) const;

    const Surrogate* model_;
    const MaxValueSamples* max_values_;
    std::vector<Element> obs_;
    Matrix chol_;            // lower Cholesky factor of the prefix correlation
    double logdet_ = 0.0;
    double quality_ = 0.0;
};

}  // namespace gibbon
