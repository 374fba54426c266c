#include "gibbon/batch_select.hpp"

#include "gibbon/optimize.hpp"
#include "gibbon/rng.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace gibbon {

namespace {

// Stream offsets; picks get 3000 + index so restart draws never depend on
// the requested batch size (greedy prefixes must match across B).
constexpr std::uint64_t kRandomStream = 500;
constexpr std::uint64_t kLipschitzStream = 600;
constexpr std::uint64_t kPickStream = 3000;

constexpr double kLogFloor = 1e-300;

struct PointBest {
    Vector x;
    double value = -kInf;
};

// Maximise a location objective over the space: exhaustive scan on discrete
// candidate sets (lowest index wins ties), multi-start ascent on boxes. The
// ascent runs in unit-cube coordinates so the finite-difference step and
// stopping tolerance are relative to the box width.
PointBest maximise_point(const SearchSpace& space, const std::function<double(const Vector&)>& f,
                         int restarts, std::uint64_t seed) {
    PointBest out;
    if (space.discrete()) {
        const int m = static_cast<int>(space.candidates.cols());
        const ScanResult r = scan_maximise([&](int j) { return f(space.candidates.col(j)); }, m);
        out.x = space.candidates.col(r.index);
        out.value = r.value;
        return out;
    }
    const Vector width = space.box.hi - space.box.lo;
    Box unit;
    unit.lo = Vector::Zero(space.dim());
    unit.hi = Vector::Ones(space.dim());
    const MultistartResult r = multistart_maximise(
        [&](const Vector& u) { return f(space.box.lo + u.cwiseProduct(width)); }, unit, restarts,
        seed);
    out.x = space.box.lo + r.x.cwiseProduct(width);
    out.value = r.value;
    return out;
}

enum class GreedyMode { kStandard, kCostWeighted, kModified };

BatchProposal run_greedy(const AcquisitionContext& ctx, const SearchSpace& space,
                         const SelectOptions& opts, GreedyMode mode) {
    if (ctx.model == nullptr) throw std::invalid_argument("batch selection: model required");
    if (ctx.max_values == nullptr || ctx.max_values->values.size() == 0)
        throw std::invalid_argument("batch selection: max-value samples required");
    if (opts.batch_size < 1) throw std::invalid_argument("batch selection: batch_size must be >= 1");
    validate(space);

    const int fb = opts.final_batch_size > 0 ? opts.final_batch_size : opts.batch_size;
    const double div_weight =
        mode == GreedyMode::kModified ? 1.0 / (static_cast<double>(fb) * fb) : 1.0;

    GibbonBatchScorer scorer(*ctx.model, *ctx.max_values);
    double spent = 0.0;
    for (const Candidate& p : ctx.pending) {
        scorer.push(p);
        spent += space.cost(p.level);
    }

    // A denominator shared by every candidate cannot move the per-pick
    // argmax, so uniform level costs keep the unweighted keys; this is what
    // makes the cost-weighted path bit-identical to greedy there.
    bool uniform = true;
    for (int s = 1; s < space.levels(); ++s) {
        if (space.cost(s) != space.cost(0)) uniform = false;
    }
    const bool weighted = mode == GreedyMode::kCostWeighted && !uniform;

    BatchProposal out;
    for (int pick = 0; pick < opts.batch_size; ++pick) {
        const std::uint64_t pick_seed =
            Rng::derive(opts.seed, kPickStream + static_cast<std::uint64_t>(pick));
        int best_level = -1;
        PointBest best;
        double best_key = -kInf;
        for (int s = 0; s < space.levels(); ++s) {
            const auto value_of = [&](const Vector& x) {
                const Candidate z{x, s};
                if (mode == GreedyMode::kModified) {
                    const GibbonParts p = scorer.score_parts(z);
                    return div_weight * p.diversity + p.quality;
                }
                return scorer.score(z);
            };
            PointBest lb = maximise_point(space, value_of, opts.restarts,
                                          Rng::derive(pick_seed, static_cast<std::uint64_t>(s)));
            const double key = weighted ? lb.value / (spent + space.cost(s)) : lb.value;
            if (best_level < 0 || key > best_key) {
                best_level = s;
                best = std::move(lb);
                best_key = key;
            }
        }
        if (!std::isfinite(best.value)) out.warning = true;
        const Candidate chosen{best.x, best_level};
        scorer.push(chosen);
        spent += space.cost(best_level);
        out.cost += space.cost(best_level);
        out.elements.push_back(chosen);
    }

    out.acquisition_value = mode == GreedyMode::kModified
                                ? gibbon_modified(ctx, out.elements, fb)
                                : gibbon_batch(ctx, out.elements);
    return out;
}

// Shared single-point baseline body; f is the base acquisition at level 0.
BatchProposal single_point(const AcquisitionContext& ctx, const SearchSpace& space,
                           const SelectOptions& opts, const char* name,
                           const std::function<double(const Vector&)>& f) {
    if (ctx.model == nullptr) throw std::invalid_argument("batch selection: model required");
    if (opts.batch_size != 1)
        throw std::invalid_argument(std::string(name) +
                                    " is a single-point strategy; use a penalised variant");
    validate(space);

    const std::uint64_t pick_seed = Rng::derive(opts.seed, kPickStream);
    PointBest best = maximise_point(space, f, opts.restarts, Rng::derive(pick_seed, 0));

    BatchProposal out;
    out.elements.push_back(Candidate{best.x, 0});
    out.acquisition_value = best.value;
    out.cost = space.cost(0);
    out.warning = !std::isfinite(best.value);
    return out;
}

}  // namespace

BatchProposal greedy_batch(const AcquisitionContext& ctx, const SearchSpace& space,
                           const SelectOptions& opts) {
    return run_greedy(ctx, space, opts, GreedyMode::kStandard);
}

BatchProposal cost_weighted_select(const AcquisitionContext& ctx, const SearchSpace& space,
                                   const SelectOptions& opts) {
    return run_greedy(ctx, space, opts, GreedyMode::kCostWeighted);
}

BatchProposal modified_greedy_batch(const AcquisitionContext& ctx, const SearchSpace& space,
                                    const SelectOptions& opts) {
    return run_greedy(ctx, space, opts, GreedyMode::kModified);
}

BatchProposal ei_select(const AcquisitionContext& ctx, const SearchSpace& space,
                        const SelectOptions& opts) {
    return single_point(ctx, space, opts, "ei",
                        [&](const Vector& x) { return expected_improvement(ctx, x); });
}

BatchProposal mes_select(const AcquisitionContext& ctx, const SearchSpace& space,
                         const SelectOptions& opts) {
    if (ctx.max_values == nullptr || ctx.max_values->values.size() == 0)
        throw std::invalid_argument("batch selection: max-value samples required");
    return single_point(ctx, space, opts, "mes", [&](const Vector& x) { return mes(ctx, x); });
}

BatchProposal lp_select(const AcquisitionContext& ctx, const SearchSpace& space,
                        const SelectOptions& opts, bool entropy_base) {
    if (ctx.model == nullptr) throw std::invalid_argument("batch selection: model required");
    if (entropy_base && (ctx.max_values == nullptr || ctx.max_values->values.size() == 0))
        throw std::invalid_argument("batch selection: max-value samples required");
    if (opts.batch_size < 1) throw std::invalid_argument("batch selection: batch_size must be >= 1");
    validate(space);

    const double lipschitz =
        lipschitz_estimate(*ctx.model, space, Rng::derive(opts.seed, kLipschitzStream));
    const auto base = [&](const Vector& x) {
        return entropy_base ? mes(ctx, x) : expected_improvement(ctx, x);
    };

    std::vector<Vector> prev;
    for (const Candidate& p : ctx.pending) prev.push_back(p.x);

    BatchProposal out;
    for (int pick = 0; pick < opts.batch_size; ++pick) {
        // Log-space keeps the product of small repulsion factors ascendable;
        // the argmax is unchanged.
        const auto objective = [&](const Vector& x) {
            double v = std::log(std::max(base(x), kLogFloor));
            for (const Vector& xp : prev) {
                v += std::log(std::max(
                    soft_penaliser(x, xp, lipschitz, ctx.incumbent_value, *ctx.model), kLogFloor));
            }
            return v;
        };
        const std::uint64_t pick_seed =
            Rng::derive(opts.seed, kPickStream + static_cast<std::uint64_t>(pick));
        PointBest best =
            maximise_point(space, objective, opts.restarts, Rng::derive(pick_seed, 0));
        if (!std::isfinite(best.value)) out.warning = true;
        out.elements.push_back(Candidate{best.x, 0});
        out.cost += space.cost(0);
        out.acquisition_value += std::exp(best.value);
        prev.push_back(best.x);
    }
    return out;
}

BatchProposal dpp_explore_select(const AcquisitionContext& ctx, const SearchSpace& space,
                                 const SelectOptions& opts) {
    if (ctx.model == nullptr) throw std::invalid_argument("batch selection: model required");
    if (opts.batch_size < 1) throw std::invalid_argument("batch selection: batch_size must be >= 1");
    validate(space);

    // Empty sample set: the scorer's quality terms vanish and score_parts
    // yields the pure correlation log-determinant.
    MaxValueSamples empty;
    GibbonBatchScorer scorer(*ctx.model, empty);
    for (const Candidate& p : ctx.pending) scorer.push(p);
    const double before = scorer.prefix_value();

    BatchProposal out;
    for (int pick = 0; pick < opts.batch_size; ++pick) {
        const std::uint64_t pick_seed =
            Rng::derive(opts.seed, kPickStream + static_cast<std::uint64_t>(pick));
        const auto objective = [&](const Vector& x) {
            if (pick == 0) return expected_improvement(ctx, x);
            return scorer.score_parts(Candidate{x, 0}).diversity;
        };
        PointBest best =
            maximise_point(space, objective, opts.restarts, Rng::derive(pick_seed, 0));
        if (!std::isfinite(best.value)) out.warning = true;
        const Candidate chosen{best.x, 0};
        scorer.push(chosen);
        out.elements.push_back(chosen);
        out.cost += space.cost(0);
    }
    // Correlation log-determinant of the chosen batch, conditional on pending.
    out.acquisition_value = scorer.prefix_value() - before;
    return out;
}

BatchProposal random_select(const SearchSpace& space, const SelectOptions& opts) {
    if (opts.batch_size < 1) throw std::invalid_argument("batch selection: batch_size must be >= 1");
    validate(space);

    Rng rng(Rng::derive(opts.seed, kRandomStream));
    BatchProposal out;
    for (int pick = 0; pick < opts.batch_size; ++pick) {
        Candidate z;
        z.x = sample_location(space, rng);
        z.level = static_cast<int>(rng.integer(static_cast<std::uint64_t>(space.levels())));
        out.cost += space.cost(z.level);
        out.elements.push_back(std::move(z));
    }
    return out;
}

BatchProposal select_batch(Acquisition acq, const AcquisitionContext& ctx,
                           const SearchSpace& space, const SelectOptions& opts) {
    switch (acq) {
        case Acquisition::kGibbon:
            return cost_weighted_select(ctx, space, opts);
        case Acquisition::kGibbonModified:
            return modified_greedy_batch(ctx, space, opts);
        case Acquisition::kMes:
            return mes_select(ctx, space, opts);
        case Acquisition::kEi:
            return ei_select(ctx, space, opts);
        case Acquisition::kLpEi:
            return lp_select(ctx, space, opts, false);
        case Acquisition::kLpMes:
            return lp_select(ctx, space, opts, true);
        case Acquisition::kDppExplore:
            return dpp_explore_select(ctx, space, opts);
        case Acquisition::kRandom:
            return random_select(space, opts);
    }
    throw std::invalid_argument("batch selection: unknown acquisition");
}

double lipschitz_estimate(const Surrogate& model, const SearchSpace& space, std::uint64_t seed) {
    constexpr int kProbes = 500;
    Rng rng(seed);
    double best = 1e-6;

    if (space.discrete()) {
        // No interior to probe: largest mean slope over random candidate pairs.
        const int m = static_cast<int>(space.candidates.cols());
        if (m < 2) return best;
        Matrix points(space.dim(), 2 * kProbes);
        for (int p = 0; p < 2 * kProbes; ++p) {
            points.col(p) =
                space.candidates.col(static_cast<int>(rng.integer(static_cast<std::uint64_t>(m))));
        }
        Vector mean, sd;
        model.objective_mean_sd(points, mean, sd);
        for (int p = 0; p < kProbes; ++p) {
            const double dist = (points.col(2 * p) - points.col(2 * p + 1)).norm();
            if (dist > 1e-12) best = std::max(best, std::abs(mean[2 * p] - mean[2 * p + 1]) / dist);
        }
        return best;
    }

    const int d = space.dim();
    const Vector h = 1e-5 * (space.box.hi - space.box.lo);
    Matrix points(d, 2 * d * kProbes);
    for (int p = 0; p < kProbes; ++p) {
        const Vector x = rng.uniform_vector(space.box);
        for (int i = 0; i < d; ++i) {
            Vector lo_probe = x, hi_probe = x;
            lo_probe[i] = std::max(space.box.lo[i], x[i] - h[i]);
            hi_probe[i] = std::min(space.box.hi[i], x[i] + h[i]);
            points.col(p * 2 * d + 2 * i) = lo_probe;
            points.col(p * 2 * d + 2 * i + 1) = hi_probe;
        }
    }
    Vector mean, sd;
    model.objective_mean_sd(points, mean, sd);
    for (int p = 0; p < kProbes; ++p) {
        double sq = 0.0;
        for (int i = 0; i < d; ++i) {
            const Vector& a = points.col(p * 2 * d + 2 * i);
            const Vector& b = points.col(p * 2 * d + 2 * i + 1);
            const double gap = (b - a).norm();
            if (gap < 1e-300) continue;
            const double g = (mean[p * 2 * d + 2 * i + 1] - mean[p * 2 * d + 2 * i]) / gap;
            sq += g * g;
        }
        best = std::max(best, std::sqrt(sq));
    }
    return best;
}

}  // namespace gibbon
