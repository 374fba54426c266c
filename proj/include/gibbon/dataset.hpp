#pragma once

#include "gibbon/types.hpp"

#include <stdexcept>

namespace gibbon {

// Observed data. Inputs are columns of X; level[i] tags the fidelity each
// observation came from (all zero for single-fidelity problems).
struct Dataset {
    Matrix X;          // d x n
    Vector y;          // n
    IntVector level;   // n; empty means all zero

    int size() const { return static_cast<int>(y.size()); }
    int dim() const { return static_cast<int>(X.rows()); }

    void append(const Vector& x, double value, int lev = 0) {
        const int n = size();
        Matrix nx(x.size(), n + 1);
        if (n > 0) nx.leftCols(n) = X;
        nx.col(n) = x;
        X = std::move(nx);
        y.conservativeResize(n + 1);
        y[n] = value;
        IntVector nl(n + 1);
        if (level.size() == n && n > 0) nl.head(n) = level;
        else nl.head(n).setZero();
        nl[n] = lev;
        level = std::move(nl);
    }
};

inline void validate(const Dataset& d) {
    if (d.y.size() != d.X.cols()) {
        throw std::invalid_argument("dataset: observation count does not match input count");
    }
    if (d.level.size() != 0 && d.level.size() != d.y.size()) {
        throw std::invalid_argument("dataset: fidelity tags do not match observation count");
    }
    if (!d.X.allFinite() || !d.y.allFinite()) {
        throw std::invalid_argument("dataset: non-finite entries");
    }
    for (int i = 0; i < d.level.size(); ++i) {
        if (d.level[i] < 0) throw std::invalid_argument("dataset: negative fidelity tag");
    }
}

}  // namespace gibbon
