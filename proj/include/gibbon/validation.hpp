#pragma once

#include "gibbon/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gibbon {

// A coupled pair of Gaussian vectors (A, C). C ~ N(mu_C, Sigma_C); each A_j
// has marginal N(mu_A[j], Sigma_A_diag[j]), correlation rho[j] with C_j, and
// is independent of the other C_i given C_j. The event of interest is
// max(C) < m. Writing D_jj = rho_j sqrt(Sigma_A_jj / Sigma_C_jj) and
// S_jj = (1 - rho_j^2) Sigma_A_jj, the coupling is A = mu_A + D(C - mu_C) +
// sqrt(S) xi, which makes the full covariance of A equal D Sigma_C D + S by
// construction rather than by a post-hoc check.
struct TruncationScenario {
    int B = 0;
    Vector mu_A;
    Vector mu_C;
    Matrix Sigma_C;
    Vector Sigma_A_diag;
    Vector rho;
    double m = 0.0;

    Vector d_diag() const;
    Vector s_diag() const;
    Matrix sigma_A_full() const;
};

// Random well-conditioned scenario: Sigma_C = G G^T + 0.1 I with standard
// normal G, rho uniform on [-0.95, 0.95], and m placed near max(mu_C) then
// pushed up until P(max C < m) >= min_acceptance. B is limited to 3 because
// the acceptance check uses the exact small-dimension normal CDF.
TruncationScenario random_scenario(int B, std::uint64_t seed,
                                   double min_acceptance = 1e-3);

// P(max C < m), exact for B <= 3.
double acceptance_probability(const TruncationScenario& sc);

// Draws of A given max(C) < m, one accepted draw per row: sample (C, A)
// jointly, keep the pair iff every C_j is below m. Throws if the acceptance
// probability is under 1e-3 (exact for B <= 3, pilot-estimated above).
Matrix rejection_sample_conditional(const TruncationScenario& sc, int n_samples,
                                    std::uint64_t seed);

// Closed form for the density of A given max(C) < m at the point a:
// (1/P) phi_X1(a) Phi_X2(m 1) with X1 ~ N(mu_A, D Sigma_C D + S) and X2 the
// posterior of C given A = a, whose precision is (Sigma_C)^-1 + D S^-1 D.
// B = 1 with |rho| = 1 collapses to a truncated Gaussian and is handled as
// such; B > 1 with |rho| that close to 1 throws, since S^-1 is then singular.
double conditional_density(const TruncationScenario& sc, const Vector& a);

// Var(A_j | C_j < m) for one coupled pair: Sigma_A_jj shrunk by rho^2 times
// the Gaussian upper-truncation factor at gamma = (m - mu_C_j) / sd(C_j).
// mu_A_j does not enter; it is kept so callers can pass a scenario row as-is.
double esg_variance(double mu_A_j, double Sigma_A_jj, double mu_C_j,
                    double Sigma_C_jj, double rho_j, double m);

// Closed-form lower bound on the information the event max(C) < m carries
// about A: half the log-determinant of A's correlation matrix minus half the
// summed per-component log variance shrinkage.
double ig_lower_bound(const TruncationScenario& sc);

// Kozachenko-Leonenko k-nearest-neighbour differential entropy estimate in
// nats from sample rows. Brute-force neighbour search; fine to ~10^4 rows.
double knn_entropy(const Matrix& samples, int k = 3);

// Fixed description of the entropy estimator behind mc_information_gain;
// reports carry it so a stored record names the method that produced it.
inline constexpr const char* kEntropyEstimator =
    "kozachenko-leonenko k=3; half-sample bootstrap, 20 resamples";

struct InformationGainEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int n_samples = 0;
    std::string estimator;
};

// Monte-Carlo estimate of H(A) - H(A | max C < m). Both entropies use the
// same estimator on the same sample count so its bias cancels in the
// difference; the standard error comes from a half-sample bootstrap. B <= 3
// only: nearest-neighbour entropy degrades fast with dimension at these n.
InformationGainEstimate mc_information_gain(const TruncationScenario& sc,
                                            int n_samples, std::uint64_t seed);

// One scenario's outcome in a bound-versus-sampler sweep.
struct ScenarioRecord {
    std::uint64_t inputs_hash = 0;
    int B = 0;
    double lower_bound = 0.0;
    double mc_estimate = 0.0;
    double std_error = 0.0;
    bool pass = false;
};

// Runs n_scenarios random scenarios for each batch size in Bs and records
// whether ig_lower_bound stays below the Monte-Carlo estimate plus slack_se
// standard errors. Deterministic in seed.
std::vector<ScenarioRecord> verification_report(const std::vector<int>& Bs,
                                                int n_scenarios, int n_samples,
                                                std::uint64_t seed,
                                                double slack_se = 3.0);

}  // namespace gibbon
