#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gibbon {

enum class ScalingAxis {
    kTrainingSize,  // sweep n at fixed batch size
    kBatchSize,     // sweep B at fixed training size
};

std::string axis_name(ScalingAxis axis);

struct ProbeOptions {
    int dim = 4;
    int fixed_n = 200;         // training-set size while sweeping B
    int fixed_b = 1;           // batch size while sweeping n
    int max_value_count = 5;
    std::uint64_t seed = 0;
    // Shortest acceptable timed sample; queries are folded back-to-back until
    // one sample takes at least this long, so clock granularity never
    // dominates a measurement.
    double min_sample_s = 0.02;
};

struct ScalingPoint {
    int value = 0;          // the swept quantity (n or B)
    double median_s = 0.0;  // median seconds per query across trials
    double cov = 0.0;       // sample std / mean across trials
    int repetitions = 0;    // queries folded into each timed sample
};

struct ScalingReport {
    ScalingAxis axis = ScalingAxis::kTrainingSize;
    std::vector<ScalingPoint> points;
    // Least-squares slope of log(median_s) against log(value).
    double slope = 0.0;
};

// Times information-based batch-score queries against a synthetic posterior
// conditioned on random data (no hyperparameter search, so only query cost is
// measured). `values` must be strictly increasing with at least four entries;
// `trials` >= 2 independent samples feed the median and spread at each value.
ScalingReport scaling_probe(ScalingAxis axis, const std::vector<int>& values, int trials,
                            const ProbeOptions& opts = {});

// Mean seconds per query for each of `cycles` consecutive blocks of
// `queries_per_cycle` queries against one unchanging posterior. The scorer
// holds no state between queries, so later cycles should run no slower than
// the first; a drifting ratio here means something is accumulating.
std::vector<double> repeated_cycle_times(int cycles, int queries_per_cycle,
                                         const ProbeOptions& opts = {});

// Flat rows "axis,value,median_s,slope"; the report-level slope repeats on
// every row.
void write_scaling_csv(std::ostream& os, const ScalingReport& report);
void write_scaling_csv(const std::string& path, const ScalingReport& report);

}  // namespace gibbon
