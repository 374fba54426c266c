#include "gibbon/benchmarks.hpp"

#include "gibbon/optimize.hpp"
#include "gibbon/stats.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace gibbon {

namespace {

// Every numeric constant used by the registry lives in this block; the
// formulas below read from here and benchmark_constants() flattens it in
// declaration order for the pinned checksum.
namespace table {

constexpr double shekel_beta[10] = {0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5};
constexpr double shekel_a[4][10] = {
    {4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
    {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6},
    {4, 1, 8, 6, 3, 2, 5, 8, 6, 7},
    {4, 1, 8, 6, 7, 9, 3, 1, 2, 3.6},
};

constexpr double ackley_a = 20.0;
constexpr double ackley_b = 0.2;
constexpr double ackley_bound = 32.768;

constexpr double hart6_a[4][6] = {
    {10, 3, 17, 3.5, 1.7, 8},
    {0.05, 10, 17, 0.1, 8, 14},
    {3, 3.5, 1.7, 10, 17, 8},
    {17, 8, 0.05, 10, 0.1, 14},
};
constexpr double hart6_p[4][6] = {
    {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
    {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
    {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
    {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381},
};
// Columns are fidelity levels; level 0 is the exact function.
constexpr double hart6_alpha[4][4] = {
    {1.0, 1.01, 1.02, 1.03},
    {1.2, 1.19, 1.18, 1.17},
    {3.0, 2.9, 2.8, 2.7},
    {3.2, 3.3, 3.4, 3.5},
};

constexpr double hart3_a[4][3] = {
    {3, 10, 30},
    {0.1, 10, 35},
    {3, 10, 30},
    {0.1, 10, 35},
};
constexpr double hart3_p[4][3] = {
    {0.3689, 0.1170, 0.2673},
    {0.4699, 0.4387, 0.7470},
    {0.1091, 0.8732, 0.5547},
    {0.0381, 0.5743, 0.8828},
};
constexpr double hart3_alpha[4][3] = {
    {1.0, 1.01, 1.02},
    {1.2, 1.19, 1.18},
    {3.0, 2.9, 2.8},
    {3.2, 3.3, 3.4},
};

constexpr double currin_num[4] = {2300, 1900, 2092, 60};
constexpr double currin_den[4] = {100, 500, 4, 20};
constexpr double currin_shift = 0.05;

constexpr double borehole_lo[8] = {0.05, 100, 63070, 990, 63.1, 700, 1120, 9855};
constexpr double borehole_hi[8] = {0.15, 50000, 115600, 1110, 116, 820, 1680, 12055};
constexpr double borehole_c1[2] = {2.0 * kPi, 5.0};
constexpr double borehole_c2[2] = {1.0, 1.5};

constexpr double cost_currin[2] = {10, 1};
constexpr double cost_hart3[3] = {100, 10, 1};
constexpr double cost_hart6[4] = {1000, 100, 10, 1};
constexpr double cost_borehole[2] = {10, 1};

constexpr double noise_standard = 0.25;

}  // namespace table

void require_level(int level, int levels, const char* name) {
    if (level < 0 || level >= levels) {
        throw std::invalid_argument(std::string(name) + ": bad fidelity level");
    }
}

double shekel4(const Vector& x, int level) {
    require_level(level, 1, "shekel");
    double sum = 0.0;
    for (int i = 0; i < 10; ++i) {
        double d2 = table::shekel_beta[i];
        for (int j = 0; j < 4; ++j) {
            const double t = x[j] - table::shekel_a[j][i];
            d2 += t * t;
        }
        sum += 1.0 / d2;
    }
    return sum;
}

double ackley4(const Vector& x, int level) {
    require_level(level, 1, "ackley");
    const double rms = std::sqrt(x.squaredNorm() / 4.0);
    double mc = 0.0;
    for (int j = 0; j < 4; ++j) mc += std::cos(2.0 * kPi * x[j]);
    // Grouped so both parentheses vanish exactly at the origin.
    return table::ackley_a * (std::exp(-table::ackley_b * rms) - 1.0) +
           (std::exp(mc / 4.0) - std::exp(1.0));
}

double hartmann6(const Vector& x, int level) {
    require_level(level, 4, "hartmann6");
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        double e = 0.0;
        for (int j = 0; j < 6; ++j) {
            const double t = x[j] - table::hart6_p[i][j];
            e += table::hart6_a[i][j] * t * t;
        }
        sum += table::hart6_alpha[i][level] * std::exp(-e);
    }
    return sum;
}

double hartmann3(const Vector& x, int level) {
    require_level(level, 3, "hartmann3");
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        double e = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double t = x[j] - table::hart3_p[i][j];
            e += table::hart3_a[i][j] * t * t;
        }
        sum += table::hart3_alpha[i][level] * std::exp(-e);
    }
    return sum;
}

double currin_exact(double x1, double x2) {
    // x2 -> 0 limit of 1 - exp(-1/(2 x2)) is 1.
    const double factor = x2 > 0.0 ? 1.0 - std::exp(-1.0 / (2.0 * x2)) : 1.0;
    const double num = table::currin_num[0] * x1 * x1 * x1 + table::currin_num[1] * x1 * x1 +
                       table::currin_num[2] * x1 + table::currin_num[3];
    const double den = table::currin_den[0] * x1 * x1 * x1 + table::currin_den[1] * x1 * x1 +
                       table::currin_den[2] * x1 + table::currin_den[3];
    return factor * num / den;
}

double currin(const Vector& x, int level) {
    require_level(level, 2, "currin");
    if (level == 0) return currin_exact(x[0], x[1]);
    const double s = table::currin_shift;
    const double lo2 = std::max(0.0, x[1] - s);
    return 0.25 * (currin_exact(x[0] + s, x[1] + s) + currin_exact(x[0] + s, lo2) +
                   currin_exact(x[0] - s, x[1] + s) + currin_exact(x[0] - s, lo2));
}

double borehole(const Vector& x, int level) {
    require_level(level, 2, "borehole");
    const double lr = std::log(x[1] / x[0]);
    const double frac = 2.0 * x[6] * x[2] / (lr * x[0] * x[0] * x[7]) + x[2] / x[4];
    return table::borehole_c1[level] * x[2] * (x[3] - x[5]) /
           (lr * (table::borehole_c2[level] + frac));
}

Box box_from(const double* lo, const double* hi, int d) {
    Box b;
    b.lo = Vector(d);
    b.hi = Vector(d);
    for (int i = 0; i < d; ++i) {
        b.lo[i] = lo[i];
        b.hi[i] = hi[i];
    }
    return b;
}

Vector costs_from(const double* c, int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = c[i];
    return v;
}

std::vector<Benchmark> build_registry() {
    std::vector<Benchmark> reg;

    Benchmark shekel;
    shekel.name = "shekel";
    shekel.dim = 4;
    shekel.domain = Box{Vector::Zero(4), Vector::Constant(4, 10.0)};
    shekel.level_costs = Vector::Ones(1);
    shekel.value = [](const Vector& x, int m) { return shekel4(x, m); };
    reg.push_back(shekel);

    Benchmark ackley;
    ackley.name = "ackley";
    ackley.dim = 4;
    ackley.domain = Box{Vector::Constant(4, -table::ackley_bound),
                        Vector::Constant(4, table::ackley_bound)};
    ackley.level_costs = Vector::Ones(1);
    ackley.value = [](const Vector& x, int m) { return ackley4(x, m); };
    reg.push_back(ackley);

    Benchmark hart6;
    hart6.name = "hartmann6";
    hart6.dim = 6;
    hart6.domain = Box::unit(6);
    hart6.level_costs = Vector::Ones(1);
    hart6.value = [](const Vector& x, int m) {
        require_level(m, 1, "hartmann6");
        return hartmann6(x, m);
    };
    reg.push_back(hart6);

    Benchmark an = noisy(ackley, table::noise_standard);
    an.name = "ackley-noisy";
    reg.push_back(an);

    Benchmark hn = noisy(hart6, table::noise_standard);
    hn.name = "hartmann6-noisy";
    reg.push_back(hn);

    Benchmark currin_mf;
    currin_mf.name = "currin-mf";
    currin_mf.dim = 2;
    currin_mf.domain = Box::unit(2);
    currin_mf.level_costs = costs_from(table::cost_currin, 2);
    currin_mf.value = [](const Vector& x, int m) { return currin(x, m); };
    reg.push_back(currin_mf);

    Benchmark h3mf;
    h3mf.name = "hartmann3-mf";
    h3mf.dim = 3;
    h3mf.domain = Box::unit(3);
    h3mf.level_costs = costs_from(table::cost_hart3, 3);
    h3mf.value = [](const Vector& x, int m) { return hartmann3(x, m); };
    reg.push_back(h3mf);

    Benchmark h6mf;
    h6mf.name = "hartmann6-mf";
    h6mf.dim = 6;
    h6mf.domain = Box::unit(6);
    h6mf.level_costs = costs_from(table::cost_hart6, 4);
    h6mf.value = [](const Vector& x, int m) { return hartmann6(x, m); };
    reg.push_back(h6mf);

    Benchmark bore;
    bore.name = "borehole-mf";
    bore.dim = 8;
    bore.domain = box_from(table::borehole_lo, table::borehole_hi, 8);
    bore.level_costs = costs_from(table::cost_borehole, 2);
    bore.value = [](const Vector& x, int m) { return borehole(x, m); };
    reg.push_back(bore);

    return reg;
}

}  // namespace

double Benchmark::observe(const Vector& x, int level, Rng& rng) const {
    double y = value(x, level);
    if (noise_variance > 0.0) y += std::sqrt(noise_variance) * rng.normal();
    return y;
}

Benchmark noisy(Benchmark b, double sigma2) {
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("noisy: variance must be nonnegative");
    b.noise_variance = sigma2;
    return b;
}

const std::vector<Benchmark>& benchmark_registry() {
    static const std::vector<Benchmark> reg = build_registry();
    return reg;
}

const Benchmark* find_benchmark(std::string_view name) {
    for (const Benchmark& b : benchmark_registry()) {
        if (b.name == name) return &b;
    }
    return nullptr;
}

std::vector<double> benchmark_constants() {
    std::vector<double> out;
    const auto push = [&](const double* p, int n) { out.insert(out.end(), p, p + n); };
    push(table::shekel_beta, 10);
    push(&table::shekel_a[0][0], 40);
    out.push_back(table::ackley_a);
    out.push_back(table::ackley_b);
    out.push_back(table::ackley_bound);
    push(&table::hart6_a[0][0], 24);
    push(&table::hart6_p[0][0], 24);
    push(&table::hart6_alpha[0][0], 16);
    push(&table::hart3_a[0][0], 12);
    push(&table::hart3_p[0][0], 12);
    push(&table::hart3_alpha[0][0], 12);
    push(table::currin_num, 4);
    push(table::currin_den, 4);
    out.push_back(table::currin_shift);
    push(table::borehole_lo, 8);
    push(table::borehole_hi, 8);
    push(table::borehole_c1, 2);
    push(table::borehole_c2, 2);
    push(table::cost_currin, 2);
    push(table::cost_hart3, 3);
    push(table::cost_hart6, 4);
    push(table::cost_borehole, 2);
    out.push_back(table::noise_standard);
    return out;
}

std::uint64_t benchmark_constants_checksum() {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
    for (double v : benchmark_constants()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (bits >> (8 * byte)) & 0xffull;
            h *= 1099511628211ull;
        }
    }
    return h;
}

const OptimumRecord& benchmark_optimum(const Benchmark& b) {
    static std::map<std::string, OptimumRecord> cache;
    auto it = cache.find(b.name);
    if (it != cache.end()) return it->second;

    const int d = b.dim;
    const Vector width = b.domain.hi - b.domain.lo;
    const auto truth_at = [&](const Vector& u) {
        return b.truth(b.domain.lo + u.cwiseProduct(width));
    };

    // Deterministic scan plus the box centre (which covers optima that sit
    // on symmetry points the scan is unlikely to hit), then refine the best
    // scan points locally.
    constexpr int kKeep = 32;
    const int n_scan = 20000 * d;
    Rng rng(9001);
    std::vector<std::pair<double, Vector>> best;
    const auto offer = [&](const Vector& u, double v) {
        if (static_cast<int>(best.size()) < kKeep) {
            best.emplace_back(v, u);
            return;
        }
        int worst = 0;
        for (int i = 1; i < kKeep; ++i) {
            if (best[i].first < best[worst].first) worst = i;
        }
        if (v > best[worst].first) best[worst] = {v, u};
    };
    offer(Vector::Constant(d, 0.5), truth_at(Vector::Constant(d, 0.5)));
    for (int t = 0; t < n_scan; ++t) {
        Vector u(d);
        for (int i = 0; i < d; ++i) u[i] = rng.uniform();
        offer(u, truth_at(u));
    }

    AscentOptions opts;
    opts.max_iterations = 500;
    opts.step_tolerance = 1e-9;
    opts.fd_step = 1e-6;
    opts.initial_step = 0.05;
    OptimumRecord rec;
    for (const auto& [v, u] : best) {
        const AscentResult r = ascend(truth_at, u, Vector::Zero(d), Vector::Ones(d), opts);
        if (r.value > rec.value) {
            rec.value = r.value;
            rec.x = b.domain.lo + r.x.cwiseProduct(width);
        }
    }
    rec.method = "uniform-scan(" + std::to_string(n_scan) + ")+centre-probe+refine(" +
                 std::to_string(kKeep) + ")";
    return cache.emplace(b.name, std::move(rec)).first->second;
}

}  // namespace gibbon
