#include "gibbon/search_space.hpp"

#include <stdexcept>

namespace gibbon {

void validate(const SearchSpace& space) {
    if (space.discrete()) {
        if (!space.candidates.allFinite()) {
            throw std::invalid_argument("search space: candidate set must be finite");
        }
    } else {
        if (space.box.empty()) {
            throw std::invalid_argument("search space: needs a box or a candidate set");
        }
        if (!space.box.lo.allFinite() || !space.box.hi.allFinite()) {
            throw std::invalid_argument("search space: box bounds must be finite");
        }
        for (int i = 0; i < space.box.dim(); ++i) {
            if (!(space.box.lo[i] < space.box.hi[i])) {
                throw std::invalid_argument("search space: box needs lo < hi per dimension");
            }
        }
    }
    for (int l = 0; l < space.level_costs.size(); ++l) {
        const double c = space.level_costs[l];
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw std::invalid_argument("search space: fidelity costs must be positive");
        }
        // Level 0 is the true objective and the most expensive source.
        if (c > space.level_costs[0]) {
            throw std::invalid_argument("search space: level 0 must carry the largest cost");
        }
    }
}

Vector sample_location(const SearchSpace& space, Rng& rng) {
    if (space.discrete()) {
        const auto j = rng.integer(static_cast<std::uint64_t>(space.candidates.cols()));
        return space.candidates.col(static_cast<int>(j));
    }
    return rng.uniform_vector(space.box);
}

}  // namespace gibbon
