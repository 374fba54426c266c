#pragma once

#include "gibbon/types.hpp"

#include <cstdint>
#include <functional>

namespace gibbon {

struct AscentOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-6;
    double fd_step = 1e-5;
    double initial_step = 0.1;
    // Also stop once an iteration improves the value by less than
    // value_tolerance * (1 + |value|); 0 disables the check.
    double value_tolerance = 0.0;
};

struct AscentResult {
    Vector x;
    double value = -kInf;
    int iterations = 0;
};

// Maximise f over the box [lo, hi] by projected ascent: central-difference
// gradients, backtracking step halving, growth on success. Stops when the
// step length falls below step_tolerance or the iteration cap is hit.
AscentResult ascend(const std::function<double(const Vector&)>& f, Vector x0,
                    const Vector& lo, const Vector& hi, const AscentOptions& opts);

struct MultistartResult {
    Vector x;
    double value = -kInf;
};

// Uniform-random restarts followed by local ascent; deterministic in seed.
// Ties between restarts resolve to the earliest one.
MultistartResult multistart_maximise(const std::function<double(const Vector&)>& f,
                                     const Box& box, int restarts, std::uint64_t seed,
                                     const AscentOptions& opts = {});

struct ScanResult {
    int index = -1;
    double value = -kInf;
};

// Exhaustive scan over a finite candidate list; ties resolve to the lowest
// index.
ScanResult scan_maximise(const std::function<double(int)>& f, int count);

}  // namespace gibbon
