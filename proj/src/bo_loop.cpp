#include "gibbon/bo_loop.hpp"

#include "gibbon/batch_select.hpp"
#include "gibbon/gp.hpp"
#include "gibbon/max_value.hpp"
#include "gibbon/mf_gp.hpp"
#include "gibbon/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace gibbon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool needs_max_values(Acquisition a) {
    switch (a) {
        case Acquisition::kGibbon:
        case Acquisition::kGibbonModified:
        case Acquisition::kMes:
        case Acquisition::kLpMes:
            return true;
        default:
            return false;
    }
}

// Strategies that can only propose objective-level points; on a
// multi-fidelity benchmark they run as single-fidelity baselines.
bool level0_only(Acquisition a) {
    switch (a) {
        case Acquisition::kGibbon:
        case Acquisition::kGibbonModified:
        case Acquisition::kRandom:
            return false;
        default:
            return true;
    }
}

void check_shape(const RunConfig& cfg) {
    if (!parse_acquisition(cfg.acquisition).has_value()) {
        throw std::invalid_argument("run config: unknown acquisition '" + cfg.acquisition + "'");
    }
    if (!(cfg.budget > 0.0)) throw std::invalid_argument("run config: budget must be positive");
    if (cfg.batch_size < 1) throw std::invalid_argument("run config: batch size must be >= 1");
    if (cfg.seeds.empty()) throw std::invalid_argument("run config: no seeds");
    if (cfg.max_value_samples < 1) {
        throw std::invalid_argument("run config: need at least one max-value sample");
    }
    if (cfg.grid_size < 0 || cfg.restarts < 0 || cfg.init_size < 0) {
        throw std::invalid_argument("run config: sizes must be nonnegative");
    }
    const Acquisition acq = *parse_acquisition(cfg.acquisition);
    if (cfg.batch_size > 1 && (acq == Acquisition::kMes || acq == Acquisition::kEi)) {
        throw std::invalid_argument("run config: " + cfg.acquisition +
                                    " proposes one point per step; use a penalised variant");
    }
}

struct Models {
    std::optional<GpPosterior> gp;
    std::optional<MfPosterior> mf;

    const Surrogate* active() const {
        if (gp.has_value()) return &*gp;
        if (mf.has_value()) return &*mf;
        return nullptr;
    }
};

// Three passes: warm start, cold restart, fixed inflated noise. Returns
// false with the last reason when all fail.
bool refit(Models& m, const Dataset& data, bool multi, int levels, const Box& box,
           std::uint64_t seed, bool first, std::string* why) {
    for (int attempt = 0; attempt < 3; ++attempt) {
        try {
            if (multi) {
                MfFitOptions o;
                o.restarts = first ? 8 : 3;
                o.seed = Rng::derive(seed, attempt);
                MfKernel warm;
                Vector warm_noise;
                if (attempt == 0 && !first && m.mf.has_value()) {
                    warm = m.mf->internal_kernel();
                    warm_noise = m.mf->internal_noise();
                    o.warm_kernel = &warm;
                    o.warm_noise = warm_noise;
                }
                if (attempt == 2) {
                    o.learn_noise = false;
                    o.noise_variance = 0.1;
                }
                m.mf = MfPosterior::fit(data, levels, o, box);
            } else {
                GpFitOptions o;
                o.restarts = first ? 8 : 3;
                o.seed = Rng::derive(seed, attempt);
                Kernel warm;
                if (attempt == 0 && !first && m.gp.has_value()) {
                    warm = m.gp->internal_kernel();
                    o.warm_kernel = &warm;
                    o.warm_noise = m.gp->internal_noise();
                }
                if (attempt == 2) {
                    o.learn_noise = false;
                    o.noise_variance = 0.1;
                }
                m.gp = GpPosterior::fit(data, o, box);
            }
            return true;
        } catch (const std::exception& e) {
            *why = e.what();
        }
    }
    return false;
}

// Observed input with the highest posterior objective mean; earliest wins a
// tie, so repeated inputs are harmless.
void incumbent_from(const Surrogate& model, const Dataset& data, Vector& x, double& value) {
    Vector mean, sd;
    model.objective_mean_sd(data.X, mean, sd);
    int best = 0;
    for (int i = 1; i < mean.size(); ++i) {
        if (mean[i] > mean[best]) best = i;
    }
    x = data.X.col(best);
    value = mean[best];
}

double regret_of(const OptimumRecord& opt, const Benchmark& bench, const Vector& x) {
    double r = opt.value - bench.truth(x);
    // The optimum comes from a scan oracle; absorb its slack but keep any
    // real undershoot visible.
    if (r < 0.0 && r > -1e-6) r = 0.0;
    return r;
}

void format_double(std::ostream& os, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void validate(const RunConfig& cfg) {
    if (find_benchmark(cfg.benchmark) == nullptr) {
        throw std::invalid_argument("run config: unknown benchmark '" + cfg.benchmark + "'");
    }
    check_shape(cfg);
}

RegretTrace run_single(const Benchmark& bench, const RunConfig& cfg, std::uint64_t seed,
                       int run_id, const OptimumRecord* optimum) {
    check_shape(cfg);
    const Acquisition acq = *parse_acquisition(cfg.acquisition);
    const int d = bench.dim;
    const bool multi = bench.levels() > 1 && !level0_only(acq);
    const int levels = multi ? bench.levels() : 1;

    SearchSpace space;
    space.box = bench.domain;
    space.level_costs =
        multi ? bench.level_costs
              : Vector::Constant(1, bench.level_costs.size() > 0 ? bench.level_costs[0] : 1.0);

    const OptimumRecord& opt = optimum != nullptr ? *optimum : benchmark_optimum(bench);

    const int grid = cfg.grid_size > 0 ? cfg.grid_size : 10000 * d;
    SelectOptions sel;
    sel.batch_size = cfg.batch_size;
    sel.restarts = cfg.restarts > 0 ? cfg.restarts : 10;
    sel.final_batch_size = cfg.batch_size;

    RegretTrace trace;
    trace.run_id = run_id;
    trace.seed = seed;

    Rng design_rng(Rng::derive(seed, 1));
    Rng obs_rng(Rng::derive(seed, 2));

    Dataset data;
    double spent = 0.0;
    const int init = cfg.init_size > 0 ? cfg.init_size : (multi ? 2 * d : 2 * d + 2);
    for (int i = 0; i < init; ++i) {
        const Vector x = design_rng.uniform_vector(bench.domain);
        for (int l = 0; l < levels; ++l) {
            data.append(x, bench.observe(x, l, obs_rng), l);
            spent += space.cost(l);
        }
    }

    Models models;
    std::string why;
    const Clock::time_point t_init = Clock::now();
    if (!refit(models, data, multi, levels, bench.domain, Rng::derive(seed, 3), true, &why)) {
        trace.truncated = true;
        trace.failure = why;
        return trace;
    }
    TraceRow row0;
    row0.iteration = 0;
    row0.cum_cost = spent;
    incumbent_from(*models.active(), data, row0.incumbent_x, row0.incumbent_value);
    row0.regret = regret_of(opt, bench, row0.incumbent_x);
    row0.overhead_s = seconds_since(t_init);
    trace.rows.push_back(row0);

    const double min_batch = cfg.batch_size * space.min_cost();
    for (int k = 1; spent + min_batch <= cfg.budget; ++k) {
        const std::uint64_t step_seed = Rng::derive(seed, 100 + static_cast<std::uint64_t>(k));

        const Clock::time_point t_select = Clock::now();
        MaxValueSamples maxima;
        AcquisitionContext ctx;
        ctx.model = models.active();
        ctx.incumbent_value = trace.rows.back().incumbent_value;
        if (needs_max_values(acq)) {
            maxima = gumbel_sample(*ctx.model, space, cfg.max_value_samples, grid,
                                   Rng::derive(step_seed, 1));
        }
        ctx.max_values = &maxima;
        sel.seed = Rng::derive(step_seed, 2);
        const BatchProposal batch = select_batch(acq, ctx, space, sel);
        const double select_s = seconds_since(t_select);

        for (const Candidate& z : batch.elements) {
            data.append(z.x, bench.observe(z.x, z.level, obs_rng), z.level);
            spent += space.cost(z.level);
        }

        const Clock::time_point t_fit = Clock::now();
        if (!refit(models, data, multi, levels, bench.domain, Rng::derive(step_seed, 3), false,
                   &why)) {
            trace.truncated = true;
            trace.failure = why;
            break;
        }
        TraceRow row;
        row.iteration = k;
        row.cum_cost = spent;
        incumbent_from(*models.active(), data, row.incumbent_x, row.incumbent_value);
        row.regret = regret_of(opt, bench, row.incumbent_x);
        row.overhead_s = select_s + seconds_since(t_fit);
        trace.rows.push_back(row);
    }
    return trace;
}

std::vector<RegretTrace> run(const RunConfig& cfg) {
    validate(cfg);
    const Benchmark* bench = find_benchmark(cfg.benchmark);
    std::vector<RegretTrace> traces;
    traces.reserve(cfg.seeds.size());
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        traces.push_back(run_single(*bench, cfg, cfg.seeds[i], static_cast<int>(i)));
    }
    if (!cfg.out.empty()) write_trace_csv(cfg.out, traces, cfg.emit_overhead);
    return traces;
}

std::vector<SummaryRow> aggregate(const std::vector<RegretTrace>& traces) {
    std::size_t longest = 0;
    for (const RegretTrace& t : traces) longest = std::max(longest, t.rows.size());

    std::vector<SummaryRow> summary;
    summary.reserve(longest);
    for (std::size_t it = 0; it < longest; ++it) {
        SummaryRow row;
        row.iteration = static_cast<int>(it);
        double sum = 0.0, sum_cost = 0.0;
        for (const RegretTrace& t : traces) {
            if (t.rows.size() <= it) continue;
            ++row.count;
            sum += t.rows[it].regret;
            sum_cost += t.rows[it].cum_cost;
        }
        row.mean_regret = sum / row.count;
        row.mean_cost = sum_cost / row.count;
        if (row.count > 1) {
            double ss = 0.0;
            for (const RegretTrace& t : traces) {
                if (t.rows.size() <= it) continue;
                const double dev = t.rows[it].regret - row.mean_regret;
                ss += dev * dev;
            }
            row.se_regret = std::sqrt(ss / (row.count - 1) / row.count);
        }
        summary.push_back(row);
    }
    return summary;
}

void write_trace_csv(std::ostream& os, const std::vector<RegretTrace>& traces,
                     bool emit_overhead) {
    os << "run_id,seed,iteration,cum_cost,incumbent_value,regret,overhead_s\n";
    for (const RegretTrace& t : traces) {
        for (const TraceRow& row : t.rows) {
            os << t.run_id << ',' << t.seed << ',' << row.iteration << ',';
            format_double(os, row.cum_cost);
            os << ',';
            format_double(os, row.incumbent_value);
            os << ',';
            format_double(os, row.regret);
            os << ',';
            format_double(os, emit_overhead ? row.overhead_s : 0.0);
            os << '\n';
        }
    }
}

void write_trace_csv(const std::string& path, const std::vector<RegretTrace>& traces,
                     bool emit_overhead) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open trace file '" + path + "'");
    write_trace_csv(file, traces, emit_overhead);
    if (!file.good()) throw std::runtime_error("failed writing trace file '" + path + "'");
}

}  // namespace gibbon
