#pragma once

#include "gibbon/rng.hpp"
#include "gibbon/types.hpp"

namespace gibbon {

// Where candidates may be proposed: either a continuous box or an explicit
// candidate set (columns of `candidates`). A non-empty candidate matrix
// switches the space to discrete mode and the box is ignored. Fidelity
// level l costs level_costs[l]; an empty cost vector means a single level
// of unit cost.
struct SearchSpace {
    Box box;
    Matrix candidates;
    Vector level_costs;

    bool discrete() const { return candidates.cols() > 0; }
    int dim() const {
        return discrete() ? static_cast<int>(candidates.rows()) : box.dim();
    }
    int levels() const {
        return level_costs.size() > 0 ? static_cast<int>(level_costs.size()) : 1;
    }
    double cost(int level) const {
        return level_costs.size() > 0 ? level_costs[level] : 1.0;
    }
    double min_cost() const {
        return level_costs.size() > 0 ? level_costs.minCoeff() : 1.0;
    }

    static SearchSpace continuous(Box b) { return SearchSpace{std::move(b), {}, {}}; }
    static SearchSpace discrete_set(Matrix cands) {
        return SearchSpace{{}, std::move(cands), {}};
    }
};

void validate(const SearchSpace& space);

// Uniform draw of a location from the space; discrete spaces pick a column.
Vector sample_location(const SearchSpace& space, Rng& rng);

}  // namespace gibbon
