#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>

namespace gibbon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::VectorXi;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Axis-aligned box. Inputs are mapped to the unit cube against this box
// before any model sees them; an empty box means the identity map.
struct Box {
    Vector lo;
    Vector hi;

    bool empty() const { return lo.size() == 0; }
    int dim() const { return static_cast<int>(lo.size()); }

    static Box unit(int d) {
        Box b;
        b.lo = Vector::Zero(d);
        b.hi = Vector::Ones(d);
        return b;
    }
};

// A query location: a point in input space plus the fidelity level it is
// evaluated at. Level 0 is the objective itself; higher levels are cheaper
// approximations.
struct Candidate {
    Vector x;
    int level = 0;
};

}  // namespace gibbon
