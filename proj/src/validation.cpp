#include "gibbon/validation.hpp"

#include "gibbon/rng.hpp"
#include "gibbon/stats.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gibbon {

namespace {

void check_shape(const TruncationScenario& sc) {
    if (sc.B < 1) throw std::invalid_argument("scenario: B must be positive");
    if (sc.mu_A.size() != sc.B || sc.mu_C.size() != sc.B ||
        sc.Sigma_A_diag.size() != sc.B || sc.rho.size() != sc.B ||
        sc.Sigma_C.rows() != sc.B || sc.Sigma_C.cols() != sc.B) {
        throw std::invalid_argument("scenario: field sizes disagree with B");
    }
}

// Cholesky with two rounds of diagonal jitter before giving up. The jitter is
// relative to the mean diagonal so scenarios on any scale behave the same.
Eigen::LLT<Matrix> chol_or_throw(const Matrix& a, const char* what) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) return llt;
    const double scale = a.diagonal().mean();
    for (double jitter : {1e-10, 1e-8}) {
        Matrix b = a;
        b.diagonal().array() += jitter * scale;
        llt.compute(b);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw std::runtime_error(std::string(what) + ": matrix is not positive definite");
}

std::uint64_t fnv1a_mix(std::uint64_t h, std::uint64_t bits) {
    for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffull;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a_mix(std::uint64_t h, double v) {
    return fnv1a_mix(h, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t scenario_hash(const TruncationScenario& sc) {
    std::uint64_t h = 14695981039346656037ull;
    h = fnv1a_mix(h, static_cast<std::uint64_t>(sc.B));
    for (int j = 0; j < sc.B; ++j) h = fnv1a_mix(h, sc.mu_A[j]);
    for (int j = 0; j < sc.B; ++j) h = fnv1a_mix(h, sc.mu_C[j]);
    for (int i = 0; i < sc.B; ++i)
        for (int j = 0; j < sc.B; ++j) h = fnv1a_mix(h, sc.Sigma_C(i, j));
    for (int j = 0; j < sc.B; ++j) h = fnv1a_mix(h, sc.Sigma_A_diag[j]);
    for (int j = 0; j < sc.B; ++j) h = fnv1a_mix(h, sc.rho[j]);
    return fnv1a_mix(h, sc.m);
}

}  // namespace

Vector TruncationScenario::d_diag() const {
    return (rho.array() * (Sigma_A_diag.array() / Sigma_C.diagonal().array()).sqrt())
        .matrix();
}

Vector TruncationScenario::s_diag() const {
    return ((1.0 - rho.array().square()) * Sigma_A_diag.array()).matrix();
}

Matrix TruncationScenario::sigma_A_full() const {
    const Vector d = d_diag();
    Matrix full = d.asDiagonal() * Sigma_C * d.asDiagonal();
    full.diagonal() += s_diag();
    return full;
}

TruncationScenario random_scenario(int B, std::uint64_t seed, double min_acceptance) {
    if (B < 1 || B > 3) {
        throw std::invalid_argument("random_scenario: B must be 1..3");
    }
    Rng rng(seed);
    TruncationScenario sc;
    sc.B = B;
    Matrix g(B, B);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < B; ++j) g(i, j) = rng.normal();
    sc.Sigma_C = g * g.transpose() + 0.1 * Matrix::Identity(B, B);
    sc.mu_C.resize(B);
    sc.mu_A.resize(B);
    sc.Sigma_A_diag.resize(B);
    sc.rho.resize(B);
    for (int j = 0; j < B; ++j) sc.mu_C[j] = rng.uniform(-1.0, 1.0);
    for (int j = 0; j < B; ++j) sc.mu_A[j] = rng.uniform(-1.0, 1.0);
    for (int j = 0; j < B; ++j) sc.Sigma_A_diag[j] = rng.uniform(0.5, 2.0);
    for (int j = 0; j < B; ++j) sc.rho[j] = rng.uniform(-0.95, 0.95);
    const double sd_max = std::sqrt(sc.Sigma_C.diagonal().maxCoeff());
    sc.m = sc.mu_C.maxCoeff() + rng.uniform(-0.5, 2.0) * sd_max;
    while (acceptance_probability(sc) < min_acceptance) sc.m += 0.25 * sd_max;
    return sc;
}

double acceptance_probability(const TruncationScenario& sc) {
    check_shape(sc);
    return mvn_cdf(Vector::Constant(sc.B, sc.m), sc.mu_C, sc.Sigma_C);
}

Matrix rejection_sample_conditional(const TruncationScenario& sc, int n_samples,
                                    std::uint64_t seed) {
    check_shape(sc);
    if (n_samples < 1) {
        throw std::invalid_argument("rejection_sample_conditional: n_samples must be positive");
    }
    double acceptance;
    if (sc.B <= 3) {
        acceptance = acceptance_probability(sc);
    } else {
        // Pilot estimate; only the guard needs it, not the samples themselves.
        Rng pilot(Rng::derive(seed, 1));
        const Eigen::LLT<Matrix> llt = chol_or_throw(sc.Sigma_C, "rejection_sample_conditional");
        const Matrix chol = llt.matrixL();
        int hits = 0;
        const int pilots = 4000;
        for (int i = 0; i < pilots; ++i) {
            const Vector c = sc.mu_C + chol * pilot.normal_vector(sc.B);
            if (c.maxCoeff() < sc.m) ++hits;
        }
        acceptance = static_cast<double>(hits) / pilots;
    }
    if (!(acceptance >= 1e-3)) {
        throw std::runtime_error(
            "rejection_sample_conditional: acceptance P(max C < m) is about " +
            std::to_string(acceptance) + "; raise m");
    }

    const Eigen::LLT<Matrix> llt = chol_or_throw(sc.Sigma_C, "rejection_sample_conditional");
    const Matrix chol = llt.matrixL();
    const Vector d = sc.d_diag();
    const Vector s_sd = sc.s_diag().cwiseMax(0.0).cwiseSqrt();
    Rng rng(Rng::derive(seed, 2));
    Matrix out(n_samples, sc.B);
    // The guard bounds the expected attempt count by 1000 per sample; the hard
    // cap only exists to catch a pilot estimate that was far too optimistic.
    const long long cap =
        static_cast<long long>(8.0 * n_samples / std::max(acceptance, 1e-3)) + 100000;
    long long attempts = 0;
    int got = 0;
    while (got < n_samples) {
        if (++attempts > cap) {
            throw std::runtime_error(
                "rejection_sample_conditional: acceptance far below its estimate");
        }
        const Vector c = sc.mu_C + chol * rng.normal_vector(sc.B);
        if (!(c.maxCoeff() < sc.m)) continue;
        for (int j = 0; j < sc.B; ++j) {
            out(got, j) = sc.mu_A[j] + d[j] * (c[j] - sc.mu_C[j]) + s_sd[j] * rng.normal();
        }
        ++got;
    }
    return out;
}

double conditional_density(const TruncationScenario& sc, const Vector& a) {
    check_shape(sc);
    if (sc.B > 3) throw std::invalid_argument("conditional_density: B must be 1..3");
    if (a.size() != sc.B) throw std::invalid_argument("conditional_density: a has wrong size");

    const Vector d = sc.d_diag();
    const Vector s = sc.s_diag();
    const double p = acceptance_probability(sc);

    if (sc.B == 1 && std::abs(sc.rho[0]) >= 1.0 - 1e-12) {
        // A is an exact affine image of C, so the event truncates A directly.
        const double c_at_a = sc.mu_C[0] + (a[0] - sc.mu_A[0]) / d[0];
        if (!(c_at_a < sc.m)) return 0.0;
        const double sd_a = std::sqrt(sc.Sigma_A_diag[0]);
        return norm_pdf((a[0] - sc.mu_A[0]) / sd_a) / sd_a / p;
    }
    for (int j = 0; j < sc.B; ++j) {
        if (s[j] < 1e-12 * sc.Sigma_A_diag[j]) {
            throw std::invalid_argument(
                "conditional_density: |rho| too close to 1 for the joint form");
        }
    }

    const double log_marginal = mvn_logpdf(a, sc.mu_A, sc.sigma_A_full());
    // Posterior of C given A = a: precision (Sigma_C)^-1 + D S^-1 D, mean
    // mu_C + cov * D S^-1 (a - mu_A).
    const Matrix eye = Matrix::Identity(sc.B, sc.B);
    const Matrix prec_c = chol_or_throw(sc.Sigma_C, "conditional_density").solve(eye);
    Matrix prec = prec_c;
    prec.diagonal() += (d.array().square() / s.array()).matrix();
    const Matrix cov = chol_or_throw(prec, "conditional_density").solve(eye);
    const Vector shift = (d.array() / s.array() * (a - sc.mu_A).array()).matrix();
    const Vector mean = sc.mu_C + cov * shift;
    const double mass_below = mvn_cdf(Vector::Constant(sc.B, sc.m), mean, cov);
    return std::exp(log_marginal) * mass_below / p;
}

double esg_variance(double /*mu_A_j*/, double Sigma_A_jj, double mu_C_j,
                    double Sigma_C_jj, double rho_j, double m) {
    const double gamma = (m - mu_C_j) / std::sqrt(Sigma_C_jj);
    return Sigma_A_jj * (1.0 - rho_j * rho_j * truncation_factor(gamma));
}

double ig_lower_bound(const TruncationScenario& sc) {
    check_shape(sc);
    const Matrix full = sc.sigma_A_full();
    const Vector sd = full.diagonal().cwiseSqrt();
    const Matrix corr = full.array() / (sd * sd.transpose()).array();
    double shrinkage = 0.0;
    for (int j = 0; j < sc.B; ++j) {
        const double gamma = (sc.m - sc.mu_C[j]) / std::sqrt(sc.Sigma_C(j, j));
        shrinkage += std::log(1.0 - sc.rho[j] * sc.rho[j] * truncation_factor(gamma));
    }
    return 0.5 * logdet_psd(corr, 1e-12) - 0.5 * shrinkage;
}

double knn_entropy(const Matrix& samples, int k) {
    const int n = static_cast<int>(samples.rows());
    const int d = static_cast<int>(samples.cols());
    if (k < 1 || k > 8) throw std::invalid_argument("knn_entropy: k must be 1..8");
    if (n <= k) throw std::invalid_argument("knn_entropy: need more samples than neighbours");

    const double log_ball = 0.5 * d * std::log(kPi) - std::lgamma(0.5 * d + 1.0);
    Vector sq(n);
    double sum_log = 0.0;
    std::vector<double> best(static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i) {
        sq = (samples.rowwise() - samples.row(i)).rowwise().squaredNorm();
        sq[i] = kInf;
        std::fill(best.begin(), best.end(), kInf);
        for (int j = 0; j < n; ++j) {
            const double v = sq[j];
            if (v >= best[k - 1]) continue;
            int slot = k - 1;
            while (slot > 0 && best[slot - 1] > v) {
                best[slot] = best[slot - 1];
                --slot;
            }
            best[slot] = v;
        }
        sum_log += 0.5 * std::log(std::max(best[k - 1], 1e-300));
    }
    return digamma(n) - digamma(k) + log_ball + d * sum_log / n;
}

namespace {

// Half of m's rows, drawn without replacement.
Matrix half_sample(const Matrix& m, Rng& rng, std::vector<int>& idx) {
    const int n = static_cast<int>(m.rows());
    const int half = n / 2;
    idx.resize(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < half; ++i) {
        const int j = i + static_cast<int>(rng.integer(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    Matrix out(half, m.cols());
    for (int i = 0; i < half; ++i) out.row(i) = m.row(idx[i]);
    return out;
}

}  // namespace

InformationGainEstimate mc_information_gain(const TruncationScenario& sc, int n_samples,
                                            std::uint64_t seed) {
    check_shape(sc);
    if (sc.B > 3) throw std::invalid_argument("mc_information_gain: B must be 1..3");
    if (n_samples < 100) {
        throw std::invalid_argument("mc_information_gain: need at least 100 samples");
    }

    const Matrix conditioned = rejection_sample_conditional(sc, n_samples, Rng::derive(seed, 1));

    // Unconditioned draws of A through the same joint mechanism.
    const Matrix chol = chol_or_throw(sc.Sigma_C, "mc_information_gain").matrixL();
    const Vector d = sc.d_diag();
    const Vector s_sd = sc.s_diag().cwiseMax(0.0).cwiseSqrt();
    Rng rng(Rng::derive(seed, 2));
    Matrix open(n_samples, sc.B);
    for (int i = 0; i < n_samples; ++i) {
        const Vector c = sc.mu_C + chol * rng.normal_vector(sc.B);
        for (int j = 0; j < sc.B; ++j) {
            open(i, j) = sc.mu_A[j] + d[j] * (c[j] - sc.mu_C[j]) + s_sd[j] * rng.normal();
        }
    }

    const int k = 3;
    InformationGainEstimate est;
    est.value = knn_entropy(open, k) - knn_entropy(conditioned, k);
    est.n_samples = n_samples;
    est.estimator = kEntropyEstimator;

    const int resamples = 20;
    Rng boot(Rng::derive(seed, 3));
    std::vector<int> idx;
    double mean = 0.0, m2 = 0.0;
    for (int b = 0; b < resamples; ++b) {
        const double diff = knn_entropy(half_sample(open, boot, idx), k) -
                            knn_entropy(half_sample(conditioned, boot, idx), k);
        const double delta = diff - mean;
        mean += delta / (b + 1);
        m2 += delta * (diff - mean);
    }
    const double var_half = m2 / (resamples - 1);
    // Half-sample spread overstates the full-sample error by n / (n/2).
    est.std_error = std::sqrt(var_half * (n_samples / 2) / static_cast<double>(n_samples));
    return est;
}

std::vector<ScenarioRecord> verification_report(const std::vector<int>& Bs, int n_scenarios,
                                                int n_samples, std::uint64_t seed,
                                                double slack_se) {
    std::vector<ScenarioRecord> records;
    records.reserve(Bs.size() * static_cast<std::size_t>(n_scenarios));
    for (int B : Bs) {
        for (int i = 0; i < n_scenarios; ++i) {
            const std::uint64_t stream = static_cast<std::uint64_t>(1000 * B + i);
            const TruncationScenario sc = random_scenario(B, Rng::derive(seed, stream));
            ScenarioRecord rec;
            rec.inputs_hash = scenario_hash(sc);
            rec.B = B;
            rec.lower_bound = ig_lower_bound(sc);
            const InformationGainEstimate est =
                mc_information_gain(sc, n_samples, Rng::derive(seed, 50000 + stream));
            rec.mc_estimate = est.value;
            rec.std_error = est.std_error;
            rec.pass = rec.lower_bound <= rec.mc_estimate + slack_se * rec.std_error;
            records.push_back(rec);
        }
    }
    return records;
}

}  // namespace gibbon
