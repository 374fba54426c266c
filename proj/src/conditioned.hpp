#pragma once

// Shared internals for posteriors conditioned on a dataset: input
// normalisation, observation standardisation, the jittered Cholesky factor,
// and the entry/projection prediction paths. Not part of the public API.

#include "gibbon/dataset.hpp"
#include "gibbon/stats.hpp"
#include "gibbon/surrogate.hpp"
#include "gibbon/types.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace gibbon::detail {

inline Vector normalise_point(const Box& box, const Vector& x) {
    if (box.empty()) return x;
    return (x - box.lo).cwiseQuotient(box.hi - box.lo);
}

inline Matrix normalise_columns(const Box& box, const Matrix& pts) {
    if (box.empty()) return pts;
    Matrix out(pts.rows(), pts.cols());
    for (int j = 0; j < pts.cols(); ++j) out.col(j) = normalise_point(box, pts.col(j));
    return out;
}

// KernelT needs:
//   double eval(const Vector& xa, int la, const Vector& xb, int lb) const
//   double prior_var(int level) const
template <class KernelT>
struct Conditioned {
    Box box;
    Matrix Xn;         // d x n, normalised inputs
    IntVector lev;     // n
    Vector ystd;       // standardised observations
    KernelT kern;
    Vector noise;      // per-level variance, standardised units
    double shift = 0.0;
    double scale = 1.0;
    Eigen::LLT<Matrix> llt;
    Vector alpha;      // (K + noise)^-1 ystd
    double jitter = 0.0;
    double lml_std = 0.0;

    int n() const { return static_cast<int>(ystd.size()); }

    void condition() {
        const int m = n();
        Matrix s(m, m);
        double diag_mean = 0.0;
        for (int j = 0; j < m; ++j) {
            for (int i = j; i < m; ++i) {
                const double v = kern.eval(Xn.col(i), lev[i], Xn.col(j), lev[j]);
                s(i, j) = v;
                s(j, i) = v;
            }
            diag_mean += s(j, j);
            s(j, j) += noise[lev[j]];
        }
        diag_mean /= std::max(m, 1);

        // Jitter ladder: plain factorisation first, then 1e-10..1e-4 of the
        // mean kernel diagonal in decade steps.
        jitter = 0.0;
        llt.compute(s);
        if (llt.info() != Eigen::Success) {
            bool ok = false;
            for (double j = 1e-10; j <= 1.0000001e-4; j *= 10.0) {
                Matrix sj = s;
                sj.diagonal().array() += j * diag_mean;
                llt.compute(sj);
                if (llt.info() == Eigen::Success) {
                    jitter = j * diag_mean;
                    ok = true;
                    break;
                }
            }
            if (!ok) {
                throw std::runtime_error(
                    "posterior: covariance factorisation failed after jitter ladder");
            }
        }
        alpha = llt.solve(ystd);
        double logdet = 0.0;
        for (int i = 0; i < m; ++i) logdet += std::log(llt.matrixL()(i, i));
        lml_std = -0.5 * ystd.dot(alpha) - logdet - 0.5 * m * kLog2Pi;
    }

    // Kernels exposing a batched row form get it; others fall back to the
    // entrywise loop (the multi-fidelity kernel branches on level pairs).
    Vector kvec(const Vector& xn, int level) const {
        Vector k(n());
        if constexpr (requires { kern.eval_row(Xn, lev, xn, level, k); }) {
            kern.eval_row(Xn, lev, xn, level, k);
        } else {
            for (int i = 0; i < n(); ++i) k[i] = kern.eval(Xn.col(i), lev[i], xn, level);
        }
        return k;
    }

    double entry_mean(const Candidate& z) const {
        const Vector k = kvec(normalise_point(box, z.x), z.level);
        return shift + scale * k.dot(alpha);
    }

    // Posterior covariance of the latent surface between two candidates,
    // computed as one independent O(n^2) query.
    double entry_cov(const Candidate& a, const Candidate& b) const {
        const bool same = a.level == b.level && a.x.size() == b.x.size() && a.x == b.x;
        const Vector xa = normalise_point(box, a.x);
        const Vector xb = normalise_point(box, b.x);
        const Vector ka = kvec(xa, a.level);
        const Vector kb = same ? ka : kvec(xb, b.level);
        const Vector w = llt.solve(kb);
        double v = kern.eval(xa, a.level, xb, b.level) - ka.dot(w);
        if (same && v < 0.0) v = 0.0;
        return scale * scale * v;
    }

    Projection make_projection(const Candidate& z) const {
        Projection p;
        p.xn = normalise_point(box, z.x);
        p.level = z.level;
        Vector k = kvec(p.xn, z.level);
        p.mean = shift + scale * k.dot(alpha);
        llt.matrixL().solveInPlace(k);
        p.solved = std::move(k);
        return p;
    }

    double projected_cov(const Projection& a, const Projection& b) const {
        double v = kern.eval(a.xn, a.level, b.xn, b.level) - a.solved.dot(b.solved);
        if (&a == &b && v < 0.0) v = 0.0;
        return scale * scale * v;
    }

    // Batched objective-level summary: one triangular solve over all columns.
    void batched_mean_sd(const Matrix& points, int level, Vector& mean, Vector& sd) const {
        const Matrix pn = normalise_columns(box, points);
        const int m = static_cast<int>(pn.cols());
        Matrix cross(n(), m);
        for (int j = 0; j < m; ++j) cross.col(j) = kvec(pn.col(j), level);
        mean = (cross.transpose() * alpha).array() * scale + shift;
        llt.matrixL().solveInPlace(cross);
        sd.resize(m);
        const double pv = kern.prior_var(level);
        for (int j = 0; j < m; ++j) {
            const double v = std::max(0.0, pv - cross.col(j).squaredNorm());
            sd[j] = scale * std::sqrt(v);
        }
    }

    void batched_joint(const Matrix& points, int level, Vector& mean, Matrix& cov) const {
        const Matrix pn = normalise_columns(box, points);
        const int m = static_cast<int>(pn.cols());
        Matrix cross(n(), m);
        for (int j = 0; j < m; ++j) cross.col(j) = kvec(pn.col(j), level);
        mean = (cross.transpose() * alpha).array() * scale + shift;

        Matrix prior(m, m);
        for (int j = 0; j < m; ++j) {
            prior(j, j) = kern.prior_var(level);
            for (int i = j + 1; i < m; ++i) {
                const double v = kern.eval(pn.col(i), level, pn.col(j), level);
                prior(i, j) = v;
                prior(j, i) = v;
            }
        }
        llt.matrixL().solveInPlace(cross);
        cov = prior - cross.transpose() * cross;
        cov = 0.5 * (cov + cov.transpose()).eval();
        for (int j = 0; j < m; ++j) cov(j, j) = std::max(cov(j, j), 0.0);
        cov *= scale * scale;
    }
};

// Standardisation parameters for a set of observations; degenerate spreads
// fall back to unit scale so single points and constant data stay exact.
inline void standardise_params(const Vector& y, double& shift, double& scale) {
    const int m = static_cast<int>(y.size());
    if (m == 0) {
        shift = 0.0;
        scale = 1.0;
        return;
    }
    shift = y.mean();
    const double var = (y.array() - shift).square().sum() / m;
    scale = std::sqrt(var);
    if (!(scale > 1e-12)) scale = 1.0;
}

}  // namespace gibbon::detail
