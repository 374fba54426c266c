#pragma once

#include "gibbon/rng.hpp"
#include "gibbon/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gibbon {

// An analytic objective, oriented so that larger is better. Level 0 is the
// exact function; higher levels are cheaper approximations. noise_variance
// is applied by observe(), never by value().
struct Benchmark {
    std::string name;
    int dim = 0;
    Box domain;
    Vector level_costs;
    double noise_variance = 0.0;
    std::function<double(const Vector&, int)> value;

    int levels() const {
        return level_costs.size() > 0 ? static_cast<int>(level_costs.size()) : 1;
    }
    double truth(const Vector& x) const { return value(x, 0); }
    double observe(const Vector& x, int level, Rng& rng) const;
};

// Copy of b with observation noise sigma2; truth() stays exact.
Benchmark noisy(Benchmark b, double sigma2);

const std::vector<Benchmark>& benchmark_registry();
const Benchmark* find_benchmark(std::string_view name);

// All numeric constants behind the registry, flattened in a fixed order, and
// an FNV-1a digest over their bit patterns. Tests pin the digest so silent
// edits to any constant fail loudly.
std::vector<double> benchmark_constants();
std::uint64_t benchmark_constants_checksum();

struct OptimumRecord {
    double value = -kInf;
    Vector x;
    std::string method;  // how the value was derived
};

// Level-0 optimum located by a deterministic scan-plus-refinement search;
// memoised per benchmark name. Regret reporting uses this value.
const OptimumRecord& benchmark_optimum(const Benchmark& b);

}  // namespace gibbon
