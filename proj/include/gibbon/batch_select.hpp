#pragma once

#include "gibbon/acquisition.hpp"
#include "gibbon/search_space.hpp"

#include <cstdint>
#include <vector>

namespace gibbon {

// One selected batch. acquisition_value is recomputed from scratch on the
// final element list, so it is reproducible from the acquisition functions
// alone; cost is the sum of per-element fidelity costs.
struct BatchProposal {
    std::vector<Candidate> elements;
    double acquisition_value = 0.0;
    double cost = 0.0;
    // Set when some pick never saw a finite objective value. The returned
    // element is still the best location the search visited.
    bool warning = false;
};

struct SelectOptions {
    int batch_size = 1;
    // Local-search restarts per pick and fidelity level (continuous spaces).
    int restarts = 10;
    std::uint64_t seed = 0;
    // Diversity reweighting denominator for the modified variant; 0 means
    // batch_size.
    int final_batch_size = 0;
};

// Greedy batch construction: pick i maximises the information score of
// chosen[0..i) + {z} jointly over locations and fidelity levels, by
// multi-start ascent (continuous boxes) or exhaustive scan (discrete
// candidate sets). Elements are appended in selection order. ctx.pending is
// treated as already chosen.
BatchProposal greedy_batch(const AcquisitionContext& ctx, const SearchSpace& space,
                           const SelectOptions& opts);

// Greedy on the cost-weighted score: batch information value divided by
// cumulative fidelity cost. A common cost multiplier cannot move the
// argmax, so with uniform level costs the output matches greedy_batch bit
// for bit under the same seed.
BatchProposal cost_weighted_select(const AcquisitionContext& ctx, const SearchSpace& space,
                                   const SelectOptions& opts);

// Greedy on the reweighted score (diversity / B^2 + quality).
BatchProposal modified_greedy_batch(const AcquisitionContext& ctx, const SearchSpace& space,
                                    const SelectOptions& opts);

// Single-point baselines (batch_size must be 1); level pinned to 0.
BatchProposal ei_select(const AcquisitionContext& ctx, const SearchSpace& space,
                        const SelectOptions& opts);
BatchProposal mes_select(const AcquisitionContext& ctx, const SearchSpace& space,
                         const SelectOptions& opts);

// Locally penalised batch baseline: element 1 maximises the base acquisition
// (improvement or entropy), later elements maximise base times the soft
// repulsion factors around everything chosen so far. Level pinned to 0.
BatchProposal lp_select(const AcquisitionContext& ctx, const SearchSpace& space,
                        const SelectOptions& opts, bool entropy_base);

// Pure-exploration baseline: element 1 maximises expected improvement, the
// rest maximise the predictive-correlation log-determinant of the batch.
// Level pinned to 0.
BatchProposal dpp_explore_select(const AcquisitionContext& ctx, const SearchSpace& space,
                                 const SelectOptions& opts);

// Uniform locations and fidelity levels; consults no model.
BatchProposal random_select(const SearchSpace& space, const SelectOptions& opts);

// Dispatch by acquisition kind. kGibbon routes through the cost-weighted
// path, which degenerates to plain greedy when level costs are uniform.
BatchProposal select_batch(Acquisition acq, const AcquisitionContext& ctx,
                           const SearchSpace& space, const SelectOptions& opts);

// Largest posterior-mean gradient magnitude seen over a random probe of the
// space; the repulsion radius scale for lp_select.
double lipschitz_estimate(const Surrogate& model, const SearchSpace& space, std::uint64_t seed);

}  // namespace gibbon
