#include "gibbon/optimize.hpp"

#include "gibbon/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gibbon {

namespace {

inline Vector clamp_to(const Vector& x, const Vector& lo, const Vector& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

// Central difference with box-aware shrinking near the boundary.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                   const Vector& lo, const Vector& hi, double h) {
    Vector g = Vector::Zero(x.size());
    Vector probe = x;
    for (int i = 0; i < x.size(); ++i) {
        const double a = std::max(lo[i], x[i] - h);
        const double b = std::min(hi[i], x[i] + h);
        if (b - a < 1e-300) continue;
        probe[i] = b;
        const double fb = f(probe);
        probe[i] = a;
        const double fa = f(probe);
        probe[i] = x[i];
        g[i] = (fb - fa) / (b - a);
    }
    return g;
}

}  // namespace

AscentResult ascend(const std::function<double(const Vector&)>& f, Vector x0,
                    const Vector& lo, const Vector& hi, const AscentOptions& opts) {
    AscentResult out;
    out.x = clamp_to(x0, lo, hi);
    out.value = f(out.x);
    double step = opts.initial_step;
    const double max_step = 0.5 * (hi - lo).maxCoeff();

    for (; out.iterations < opts.max_iterations; ++out.iterations) {
        const Vector g = fd_gradient(f, out.x, lo, hi, opts.fd_step);
        const double norm = g.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) break;
        const Vector dir = g / norm;

        const double before = out.value;
        bool improved = false;
        while (step >= opts.step_tolerance) {
            const Vector cand = clamp_to(out.x + step * dir, lo, hi);
            if ((cand - out.x).lpNorm<Eigen::Infinity>() < 1e-300) {
                step *= 0.5;
                continue;
            }
            const double fc = f(cand);
            if (fc > out.value) {
                out.x = cand;
                out.value = fc;
                step = std::min(step * 1.6, max_step);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
        if (opts.value_tolerance > 0.0 &&
            out.value - before < opts.value_tolerance * (1.0 + std::abs(out.value))) {
            ++out.iterations;
            break;
        }
    }
    return out;
}

MultistartResult multistart_maximise(const std::function<double(const Vector&)>& f,
                                     const Box& box, int restarts, std::uint64_t seed,
                                     const AscentOptions& opts) {
    if (restarts < 1) throw std::invalid_argument("multistart_maximise: restarts must be >= 1");
    MultistartResult best;
    for (int r = 0; r < restarts; ++r) {
        Rng rng(Rng::derive(seed, r));
        const Vector x0 = rng.uniform_vector(box);
        AscentResult res = ascend(f, x0, box.lo, box.hi, opts);
        if (res.value > best.value || best.x.size() == 0) {
            best.x = res.x;
            best.value = res.value;
        }
    }
    return best;
}

ScanResult scan_maximise(const std::function<double(int)>& f, int count) {
    ScanResult best;
    for (int i = 0; i < count; ++i) {
        const double v = f(i);
        if (i == 0 || v > best.value) {
            best.index = i;
            best.value = v;
        }
    }
    return best;
}

}  // namespace gibbon
