#include "gibbon/timing.hpp"

#include "gibbon/acquisition.hpp"
#include "gibbon/dataset.hpp"
#include "gibbon/gp.hpp"
#include "gibbon/kernel.hpp"
#include "gibbon/max_value.hpp"
#include "gibbon/rng.hpp"
#include "gibbon/types.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace gibbon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Posterior conditioned on random inputs in the unit cube with a smooth
// response. Hyperparameters are pinned, so construction is one Cholesky and
// the timed section sees query work only.
GpPosterior make_posterior(int n, int dim, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data;
    data.X.resize(dim, n);
    data.y.resize(n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < dim; ++i) data.X(i, j) = rng.uniform();
        data.y[j] = std::sin(3.0 * data.X.col(j).sum()) + 0.05 * rng.normal();
    }
    data.level = IntVector::Zero(n);
    return GpPosterior(data, Kernel::matern52(1.0, Vector::Constant(dim, 0.35)), 1e-4);
}

std::vector<Candidate> random_batch(int b, int dim, Rng& rng) {
    std::vector<Candidate> batch(b);
    for (auto& z : batch) {
        z.x.resize(dim);
        for (int i = 0; i < dim; ++i) z.x[i] = rng.uniform();
        z.level = 0;
    }
    return batch;
}

struct QueryBench {
    GpPosterior model;
    MaxValueSamples max_values;
    AcquisitionContext ctx;

    // Max-value draws sit just above the response's reachable maximum, the
    // regime the score meets in a real run.
    QueryBench(int n, int dim, int max_value_count, std::uint64_t seed)
        : model(make_posterior(n, dim, seed)) {
        max_values.values.resize(max_value_count);
        for (int i = 0; i < max_value_count; ++i) max_values.values[i] = 1.2 + 0.15 * i;
        ctx.model = &model;
        ctx.max_values = &max_values;
    }

    double query(const std::vector<Candidate>& batch) const {
        return gibbon_batch(ctx, batch);
    }
};

// Seconds for `reps` back-to-back queries. The accumulator leaks into a
// volatile so the calls cannot be elided.
double timed_block(const QueryBench& bench, const std::vector<Candidate>& batch, int reps) {
    double acc = 0.0;
    const auto start = Clock::now();
    for (int r = 0; r < reps; ++r) acc += bench.query(batch);
    const double elapsed = seconds_since(start);
    volatile double guard = acc;
    (void)guard;
    return elapsed;
}

// Doubles the fold count until one sample clears min_sample_s; the probing
// blocks double as warmup.
int calibrate_reps(const QueryBench& bench, const std::vector<Candidate>& batch,
                   double min_sample_s) {
    int reps = 1;
    while (timed_block(bench, batch, reps) < min_sample_s) {
        if (reps > (1 << 24)) break;
        reps *= 2;
    }
    return reps;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void check_probe_args(const std::vector<int>& values, int trials, const ProbeOptions& opts) {
    if (values.size() < 4) throw std::invalid_argument("scaling_probe: need at least 4 values");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 1) throw std::invalid_argument("scaling_probe: values must be positive");
        if (i > 0 && values[i] <= values[i - 1]) {
            throw std::invalid_argument("scaling_probe: values must be strictly increasing");
        }
    }
    if (trials < 2) throw std::invalid_argument("scaling_probe: need at least 2 trials");
    if (opts.dim < 1 || opts.fixed_n < 1 || opts.fixed_b < 1 || opts.max_value_count < 1) {
        throw std::invalid_argument("scaling_probe: sizes must be positive");
    }
    if (!(opts.min_sample_s > 0.0)) {
        throw std::invalid_argument("scaling_probe: min_sample_s must be positive");
    }
}

}  // namespace

std::string axis_name(ScalingAxis axis) {
    return axis == ScalingAxis::kTrainingSize ? "n" : "B";
}

ScalingReport scaling_probe(ScalingAxis axis, const std::vector<int>& values, int trials,
                            const ProbeOptions& opts) {
    check_probe_args(values, trials, opts);

    ScalingReport report;
    report.axis = axis;
    report.points.reserve(values.size());

    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        const int n = axis == ScalingAxis::kTrainingSize ? values[vi] : opts.fixed_n;
        const int b = axis == ScalingAxis::kBatchSize ? values[vi] : opts.fixed_b;
        const std::uint64_t point_seed = Rng::derive(opts.seed, 10 + vi);

        const QueryBench bench(n, opts.dim, opts.max_value_count, point_seed);
        Rng batch_rng(Rng::derive(point_seed, 1));

        const int reps =
            calibrate_reps(bench, random_batch(b, opts.dim, batch_rng), opts.min_sample_s);

        std::vector<double> per_query(trials);
        for (int t = 0; t < trials; ++t) {
            const std::vector<Candidate> batch = random_batch(b, opts.dim, batch_rng);
            per_query[t] = timed_block(bench, batch, reps) / reps;
        }

        double mean = 0.0;
        for (double s : per_query) mean += s;
        mean /= trials;
        double var = 0.0;
        for (double s : per_query) var += (s - mean) * (s - mean);
        var /= trials - 1;

        ScalingPoint pt;
        pt.value = values[vi];
        pt.median_s = median_of(per_query);
        pt.cov = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
        pt.repetitions = reps;
        report.points.push_back(pt);
    }

    // Log-log least squares through the medians.
    const int k = static_cast<int>(report.points.size());
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(k), ly(k);
    for (int i = 0; i < k; ++i) {
        lx[i] = std::log(static_cast<double>(report.points[i].value));
        ly[i] = std::log(report.points[i].median_s);
        mx += lx[i];
        my += ly[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    report.slope = sxy / sxx;
    return report;
}

std::vector<double> repeated_cycle_times(int cycles, int queries_per_cycle,
                                         const ProbeOptions& opts) {
    if (cycles < 1 || queries_per_cycle < 1) {
        throw std::invalid_argument("repeated_cycle_times: counts must be positive");
    }
    const std::uint64_t seed = Rng::derive(opts.seed, 99);
    const QueryBench bench(opts.fixed_n, opts.dim, opts.max_value_count, seed);
    Rng batch_rng(Rng::derive(seed, 1));
    const std::vector<Candidate> batch = random_batch(opts.fixed_b, opts.dim, batch_rng);
    timed_block(bench, batch, std::min(queries_per_cycle, 16));  // warmup

    std::vector<double> out(cycles);
    for (int c = 0; c < cycles; ++c) {
        out[c] = timed_block(bench, batch, queries_per_cycle) / queries_per_cycle;
    }
    return out;
}

void write_scaling_csv(std::ostream& os, const ScalingReport& report) {
    os << "axis,value,median_s,slope\n";
    char line[128];
    for (const ScalingPoint& pt : report.points) {
        std::snprintf(line, sizeof(line), "%s,%d,%.9g,%.9g\n", axis_name(report.axis).c_str(),
                      pt.value, pt.median_s, report.slope);
        os << line;
    }
}

void write_scaling_csv(const std::string& path, const ScalingReport& report) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("timing: cannot open " + path);
    write_scaling_csv(os, report);
    if (!os) throw std::runtime_error("timing: write failed for " + path);
}

}  // namespace gibbon
