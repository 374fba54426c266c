#pragma once

#include "gibbon/benchmarks.hpp"
#include "gibbon/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gibbon {

// One experiment. Zeros pick defaults derived from the benchmark dimension
// d: grid_size 10000 d, restarts 10, init_size 2d+2 (single-fidelity) or 2d
// locations each observed at every level (multi-fidelity).
struct RunConfig {
    std::string benchmark;
    std::string acquisition = "gibbon";
    int batch_size = 1;
    double budget = 0.0;                    // total evaluation cost units
    std::vector<std::uint64_t> seeds = {0};
    int max_value_samples = 5;
    int grid_size = 0;
    int restarts = 0;
    int init_size = 0;
    std::string out;                        // trace CSV path; empty writes none
    // Measured per-step seconds go into the CSV only when set; otherwise the
    // overhead column is zero so identical configs give byte-identical files.
    bool emit_overhead = false;
};

void validate(const RunConfig& config);

struct TraceRow {
    int iteration = 0;                      // 0 is the initial design
    double cum_cost = 0.0;
    Vector incumbent_x;
    double incumbent_value = 0.0;           // posterior objective mean at the incumbent
    double regret = 0.0;
    double overhead_s = 0.0;                // fit + selection time, never evaluation time
};

struct RegretTrace {
    int run_id = 0;
    std::uint64_t seed = 0;
    std::vector<TraceRow> rows;
    bool truncated = false;
    std::string failure;                    // empty unless truncated
};

// One seed: initial design, then refit / sample maxima / select / evaluate
// until the cheapest possible batch no longer fits the budget. The incumbent
// is the observed input with the highest posterior objective mean. Model-fit
// failures retry with escalating noise; an unrecoverable one truncates the
// trace instead of throwing. Supplying `optimum` skips the scan oracle.
RegretTrace run_single(const Benchmark& bench, const RunConfig& config, std::uint64_t seed,
                       int run_id, const OptimumRecord* optimum = nullptr);

// All seeds in config order; writes the trace CSV when config.out is set.
std::vector<RegretTrace> run(const RunConfig& config);

struct SummaryRow {
    int iteration = 0;
    int count = 0;                          // traces contributing to this row
    double mean_regret = 0.0;
    double se_regret = 0.0;
    double mean_cost = 0.0;
};

// Per-iteration mean and standard error across traces, aligned by iteration
// index; truncated traces contribute to the rows they reached.
std::vector<SummaryRow> aggregate(const std::vector<RegretTrace>& traces);

// Fixed schema: run_id,seed,iteration,cum_cost,incumbent_value,regret,
// overhead_s. LF endings, 17 significant digits.
void write_trace_csv(std::ostream& os, const std::vector<RegretTrace>& traces,
                     bool emit_overhead);
void write_trace_csv(const std::string& path, const std::vector<RegretTrace>& traces,
                     bool emit_overhead);

}  // namespace gibbon
