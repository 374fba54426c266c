#include "gibbon/surrogate.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace gibbon {

namespace {

// Clamp any rounding-level negative eigenvalues to zero.
void repair_psd(Matrix& a) {
    if (a.rows() == 1) {
        if (a(0, 0) < -1e-8) throw std::runtime_error("bundle: covariance block far from PSD");
        a(0, 0) = std::max(0.0, a(0, 0));
        return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.eigenvalues()[0] >= 0.0) return;
    if (es.eigenvalues()[0] < -1e-8 * std::max(1.0, a.diagonal().maxCoeff())) {
        throw std::runtime_error("bundle: covariance block far from PSD");
    }
    Vector ev = es.eigenvalues().cwiseMax(0.0);
    a = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

PredictiveBundle bundle(const Surrogate& model, const std::vector<Candidate>& candidates) {
    const int b = static_cast<int>(candidates.size());
    if (b == 0) throw std::invalid_argument("bundle: empty candidate batch");

    std::vector<Candidate> at_objective(candidates.begin(), candidates.end());
    for (auto& z : at_objective) z.level = 0;

    PredictiveBundle out;
    out.mu_A.resize(b);
    out.mu_C.resize(b);
    out.sigma_A.resize(b, b);
    out.sigma_C.resize(b, b);
    out.rho.resize(b);

    Vector cross(b);
    for (int i = 0; i < b; ++i) {
        out.mu_A[i] = model.posterior_mean(candidates[i]);
        out.mu_C[i] = model.posterior_mean(at_objective[i]);
        cross[i] = model.posterior_cov(candidates[i], at_objective[i]);
        for (int j = 0; j <= i; ++j) {
            const double va = model.posterior_cov(candidates[i], candidates[j]);
            out.sigma_A(i, j) = va;
            out.sigma_A(j, i) = va;
            const double vc = model.posterior_cov(at_objective[i], at_objective[j]);
            out.sigma_C(i, j) = vc;
            out.sigma_C(j, i) = vc;
        }
    }
    repair_psd(out.sigma_A);
    repair_psd(out.sigma_C);
    for (int i = 0; i < b; ++i) {
        out.sigma_A(i, i) += model.observation_noise(candidates[i].level);
    }

    for (int i = 0; i < b; ++i) {
        const double denom = std::sqrt(out.sigma_A(i, i) * out.sigma_C(i, i));
        double r = denom > 1e-300 ? cross[i] / denom : 0.0;
        if (r > kRhoClamp) r = kRhoClamp;
        if (r < -kRhoClamp) r = -kRhoClamp;
        out.rho[i] = r;
    }
    return out;
}

}  // namespace gibbon
