#pragma once

#include "gibbon/search_space.hpp"
#include "gibbon/surrogate.hpp"
#include "gibbon/types.hpp"

#include <cstdint>

namespace gibbon {

// Sampled global maxima of the objective surface, the quantity conditioned
// on by the entropy-based acquisitions.
struct MaxValueSamples {
    enum class Method { kGumbel, kExactThompson };

    Vector values;
    int grid_size = 0;
    Method method = Method::kGumbel;
};

// Fits a Gumbel distribution to the approximate max CDF prod_i Phi((y -
// mu_i)/sigma_i) over an N-point grid (independence across grid points) by
// matching its quartiles, then returns M inverse-CDF draws. Discrete spaces
// use the candidate set as the grid and ignore N. Deterministic in seed.
// Draws are floored at (grid max mean) - 5 * (std at that argmax).
MaxValueSamples gumbel_sample(const Surrogate& model, const SearchSpace& space, int M, int N,
                              std::uint64_t seed);

// Draws M joint sample paths of the objective over an N-point grid through a
// dense factorisation and keeps each path's maximum. N is capped at 4096.
MaxValueSamples thompson_sample(const Surrogate& model, const SearchSpace& space, int M, int N,
                                std::uint64_t seed);

}  // namespace gibbon
