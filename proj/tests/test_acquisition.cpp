#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gibbon/acquisition.hpp"
#include "gibbon/gp.hpp"
#include "gibbon/mf_gp.hpp"
#include "gibbon/rng.hpp"
#include "gibbon/stats.hpp"

#include <cmath>
#include <vector>

using namespace gibbon;

namespace {

GpPosterior toy_model(int n, double noise, std::uint64_t seed = 3) {
    Rng rng(seed);
    Dataset data;
    data.X.resize(2, 0);
    for (int i = 0; i < n; ++i) {
        const Vector x = rng.uniform_vector(Box::unit(2));
        data.append(x, std::sin(3.0 * x[0]) + 0.5 * std::cos(2.0 * x[1]), 0);
    }
    return GpPosterior(data, Kernel::matern52(1.0, Vector::Constant(2, 0.4)), noise);
}

MfPosterior toy_mf_model(double mix0, std::uint64_t seed = 4) {
    Rng rng(seed);
    Dataset data;
    data.X.resize(2, 0);
    for (int i = 0; i < 10; ++i) {
        const Vector x = rng.uniform_vector(Box::unit(2));
        data.append(x, rng.normal(), static_cast<int>(i % 2));
    }
    MfKernel k;
    k.spatial = Kernel::matern52(1.0, Vector::Constant(2, 0.4));
    k.delta_variance = Vector::Constant(2, 0.7);
    k.mixing = Vector::Constant(1, mix0);
    Vector noise(2);
    noise << 0.01, 0.04;
    return MfPosterior(data, k, noise);
}

MaxValueSamples fixed_samples(std::initializer_list<double> vals) {
    MaxValueSamples mv;
    mv.values.resize(static_cast<int>(vals.size()));
    int i = 0;
    for (double v : vals) mv.values[i++] = v;
    mv.method = MaxValueSamples::Method::kGumbel;
    return mv;
}

Candidate at(double a, double b, int level = 0) {
    Vector x(2);
    x << a, b;
    return Candidate{x, level};
}

}  // namespace

TEST_CASE("uninformative correlation gives zero information") {
    const MfPosterior model = toy_mf_model(0.0);
    const MaxValueSamples mv = fixed_samples({0.5, 1.5, -0.3});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};
    // A level-1 observation with zero mixing says nothing about the objective.
    CHECK(std::abs(gibbon_batch(ctx, {at(0.3, 0.7, 1)})) < 1e-12);
    CHECK(gibbon_batch(ctx, {at(0.3, 0.7, 0)}) > 1e-4);
}

TEST_CASE("a threshold far above the posterior carries no constraint") {
    const GpPosterior model = toy_model(8, 0.0);
    const MaxValueSamples mv = fixed_samples({500.0});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};
    CHECK(gibbon_batch(ctx, {at(0.5, 0.5)}) >= 0.0);
    CHECK(gibbon_batch(ctx, {at(0.5, 0.5)}) < 1e-10);
}

TEST_CASE("duplicating a candidate collapses the diversity term") {
    const GpPosterior model = toy_model(8, 1e-4);
    const MaxValueSamples mv = fixed_samples({1.2});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};
    const Candidate z = at(0.42, 0.58);
    const double single = gibbon_batch(ctx, {z});
    const double doubled = gibbon_batch(ctx, {z, z});
    CHECK(doubled < single);
    CHECK(gibbon_batch(ctx, {z, at(0.9, 0.1)}) > doubled);
}

TEST_CASE("noiseless single candidate at the mean threshold hits the closed form") {
    const GpPosterior model = toy_model(8, 0.0);
    const Candidate z = at(0.77, 0.23);
    const double mu = model.posterior_mean(z);
    const MaxValueSamples mv = fixed_samples({mu});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};

    // rho clamps to 1 - 1e-9 and gamma = 0, so the score reduces to
    // -0.5 log(1 - rho^2 * 2/pi) exactly.
    const double rho = kRhoClamp;
    const double expected = -0.5 * std::log1p(-rho * rho * (2.0 / kPi));
    CHECK(gibbon_batch(ctx, {z}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("modified variant only reweights the diversity term") {
    const GpPosterior model = toy_model(10, 1e-4);
    const MaxValueSamples mv = fixed_samples({1.0, 1.4});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};

    const Candidate z = at(0.3, 0.3);
    CHECK(gibbon_modified(ctx, {z}, 1) == doctest::Approx(gibbon_batch(ctx, {z})).epsilon(1e-14));

    // Pair separated by hundreds of lengthscales: |R| = 1 exactly, so the
    // reweighting has nothing to act on.
    const std::vector<Candidate> apart{at(-50.0, -50.0), at(50.0, 50.0)};
    CHECK(gibbon_modified(ctx, apart, 2) == doctest::Approx(gibbon_batch(ctx, apart)).epsilon(1e-9));

    // Near-duplicate large batch: the shrunk penalty raises the value.
    std::vector<Candidate> tight;
    for (int i = 0; i < 5; ++i) tight.push_back(at(0.5 + 1e-4 * i, 0.5));
    CHECK(gibbon_modified(ctx, tight, 5) > gibbon_batch(ctx, tight));
}

TEST_CASE("decomposition recombines to the joint score") {
    const GpPosterior model = toy_model(10, 1e-3);
    const MaxValueSamples mv = fixed_samples({0.9, 1.1, 1.3});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};

    const std::vector<Candidate> batch{at(0.2, 0.8), at(0.6, 0.4), at(0.9, 0.9)};
    const GibbonParts parts = gibbon_decomposed(ctx, batch);
    CHECK(parts.diversity + parts.quality == doctest::Approx(gibbon_batch(ctx, batch)).epsilon(1e-12));

    double singles = 0.0;
    for (const Candidate& z : batch) singles += gibbon_single(model, mv, z);
    CHECK(parts.quality == doctest::Approx(singles).epsilon(1e-9));

    const GibbonParts one = gibbon_decomposed(ctx, {at(0.5, 0.5)});
    CHECK(one.diversity == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("entropy score limits") {
    const GpPosterior model = toy_model(8, 0.0);
    Vector x(2);
    x << 0.66, 0.33;

    const MaxValueSamples far = fixed_samples({500.0});
    AcquisitionContext ctx{&model, &far, {}, 0.0};
    CHECK(mes(ctx, x) >= 0.0);
    CHECK(mes(ctx, x) < 1e-10);

    Vector mu, sd;
    model.objective_mean_sd(x, mu, sd);
    const MaxValueSamples at_mean = fixed_samples({mu[0]});
    AcquisitionContext ctx2{&model, &at_mean, {}, 0.0};
    CHECK(mes(ctx2, x) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("noiseless scalar forms match high precision references") {
    struct Ref {
        double u, gibbon_v, mes_v;
    };
    // 60-digit reference evaluations of the two scalar forms.
    const Ref refs[] = {
        {-6.0, 1.86510835757295035, 2.26132113634090892},
        {-2.0, 1.08455578671046249, 1.40996880085919107},
        {-0.5, 6.57488669591125285e-01, 8.90642319001602512e-01},
        {0.0, 5.06152766938626875e-01, 6.93147180559945310e-01},
        {0.5, 3.60592870709852908e-01, 4.96236523747914771e-01},
        {2.0, 6.02641793796880043e-02, 7.82607720079534497e-02},
        {6.0, 1.82276489181583863e-08, 1.92142362129774034e-08},
    };
    for (const Ref& r : refs) {
        const auto [g, m] = degenerate_pair(r.u);
        CHECK(g == doctest::Approx(r.gibbon_v).epsilon(1e-12));
        CHECK(m == doctest::Approx(r.mes_v).epsilon(1e-12));
        CHECK(g <= m);
    }

    // Both forms decay to zero and decrease strictly over a wide sweep.
    double prev_g = kInf, prev_m = kInf;
    for (int i = 0; i <= 1000; ++i) {
        const double u = -6.0 + 12.0 * i / 1000.0;
        const auto [g, m] = degenerate_pair(u);
        CHECK(g <= m + 1e-15);
        CHECK(g < prev_g);
        CHECK(m < prev_m);
        prev_g = g;
        prev_m = m;
    }
    const auto [g_inf, m_inf] = degenerate_pair(37.0);
    CHECK(g_inf < 1e-200);
    CHECK(m_inf < 1e-200);
}

TEST_CASE("lower bound on the entropy score holds across thresholds") {
    const GpPosterior model = toy_model(8, 0.0);
    const Candidate z = at(0.77, 0.23);
    Matrix x(2, 1);
    x.col(0) = z.x;
    Vector mu, sd;
    model.objective_mean_sd(x, mu, sd);
    REQUIRE(sd[0] > 1e-3);

    for (int i = -8; i <= 8; ++i) {
        const MaxValueSamples mv = fixed_samples({mu[0] + i * sd[0]});
        AcquisitionContext ctx{&model, &mv, {}, 0.0};
        CHECK(gibbon_batch(ctx, {z}) <= mes(ctx, z.x) + 1e-6);
    }
}

TEST_CASE("improvement baseline closed form and monte carlo") {
    const GpPosterior model = toy_model(10, 1e-2);
    Vector x(2);
    x << 0.35, 0.65;
    Vector mu, sd;
    model.objective_mean_sd(x, mu, sd);

    AcquisitionContext ctx{&model, nullptr, {}, mu[0]};
    CHECK(expected_improvement(ctx, x) == doctest::Approx(sd[0] * norm_pdf(0.0)).epsilon(1e-12));

    ctx.incumbent_value = mu[0] + 0.4;
    const double ei = expected_improvement(ctx, x);
    Rng rng(99);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = mu[0] + sd[0] * rng.normal();
        const double imp = std::max(y - ctx.incumbent_value, 0.0);
        sum += imp;
        sum2 += imp * imp;
    }
    const double mc = sum / n;
    const double se = std::sqrt((sum2 / n - mc * mc) / n);
    CHECK(std::abs(ei - mc) < 3.0 * se);
}

TEST_CASE("soft penaliser range and monotonicity") {
    const GpPosterior model = toy_model(10, 1e-2);
    Vector xp(2);
    xp << 0.5, 0.5;
    Vector mu, sd;
    model.objective_mean_sd(xp, mu, sd);

    CHECK(soft_penaliser(xp, xp, 2.0, mu[0], model) == doctest::Approx(0.5).epsilon(1e-12));

    Vector far(2);
    far << 500.0, 500.0;
    CHECK(soft_penaliser(far, xp, 2.0, mu[0], model) == doctest::Approx(1.0).epsilon(1e-12));

    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        Vector x = xp;
        x[0] += 0.02 * i;
        const double p = soft_penaliser(x, xp, 2.0, mu[0] + 0.5, model);
        CHECK(p >= prev - 1e-12);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        prev = p;
    }
}

TEST_CASE("correlation penaliser matches the bundle determinant") {
    // Noiseless observations: duplicating a point makes the correlation
    // exactly singular (noise would decorrelate repeated measurements).
    const GpPosterior model = toy_model(10, 0.0);
    AcquisitionContext ctx{&model, nullptr, {}, 0.0};
    Vector x(2);
    x << 0.25, 0.75;
    CHECK(correlation_penaliser(ctx, x) == 1.0);

    ctx.pending = {at(0.4, 0.4), at(0.8, 0.2)};
    const double pen = correlation_penaliser(ctx, x);
    CHECK(pen > 0.0);
    CHECK(pen <= 1.0 + 1e-12);

    // Duplicating a pending element collapses the determinant.
    const double dup = correlation_penaliser(ctx, ctx.pending[0].x);
    CHECK(dup < 1e-6);

    // Self-consistency against a direct bundle evaluation.
    std::vector<Candidate> batch = ctx.pending;
    batch.push_back(Candidate{x, 0});
    const PredictiveBundle b = bundle(model, batch);
    Matrix r(3, 3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            r(i, j) = b.sigma_A(i, j) / std::sqrt(b.sigma_A(i, i) * b.sigma_A(j, j));
        }
    }
    CHECK(pen == doctest::Approx(std::exp(logdet_psd(r, 1e-9))).epsilon(1e-10));
}

TEST_CASE("batch score equals the log determinant of the weighted kernel") {
    const GpPosterior model = toy_model(10, 1e-3);
    const MaxValueSamples mv = fixed_samples({1.0, 1.3});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};

    const Candidate z = at(0.6, 0.2);
    CHECK(dpp_logdet(ctx, {z}) == doctest::Approx(gibbon_single(model, mv, z)).epsilon(1e-10));

    const std::vector<Candidate> apart{at(-50.0, -50.0), at(50.0, 50.0)};
    double singles = 0.0;
    for (const Candidate& c : apart) singles += gibbon_single(model, mv, c);
    CHECK(dpp_logdet(ctx, apart) == doctest::Approx(singles).epsilon(1e-8));

    Rng rng(15);
    for (int t = 0; t < 5; ++t) {
        std::vector<Candidate> batch;
        for (int i = 0; i < 3; ++i) batch.push_back({rng.uniform_vector(Box::unit(2)), 0});
        CHECK(std::abs(gibbon_batch(ctx, batch) - dpp_logdet(ctx, batch)) < 1e-10);
    }
}

TEST_CASE("score is invariant to candidate order and penalises duplicates") {
    const GpPosterior model = toy_model(10, 1e-3);
    const MaxValueSamples mv = fixed_samples({0.8, 1.2});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};

    const std::vector<Candidate> batch{at(0.2, 0.3), at(0.7, 0.6), at(0.5, 0.9)};
    const std::vector<Candidate> swapped{batch[2], batch[0], batch[1]};
    CHECK(gibbon_batch(ctx, batch) == doctest::Approx(gibbon_batch(ctx, swapped)).epsilon(1e-12));

    std::vector<Candidate> extended = batch;
    extended.push_back(batch[1]);
    CHECK(gibbon_batch(ctx, extended) <= gibbon_batch(ctx, batch) + 1e-12);
}

TEST_CASE("incremental scorer tracks the cold evaluation") {
    const MfPosterior model = toy_mf_model(0.8);
    const MaxValueSamples mv = fixed_samples({0.7, 1.1, 1.6});
    AcquisitionContext ctx{&model, &mv, {}, 0.0};

    GibbonBatchScorer scorer(model, mv);
    std::vector<Candidate> chosen;
    Rng rng(44);
    for (int step = 0; step < 4; ++step) {
        const Candidate z{rng.uniform_vector(Box::unit(2)), static_cast<int>(step % 2)};
        std::vector<Candidate> with = chosen;
        with.push_back(z);
        CHECK(scorer.score(z) == doctest::Approx(gibbon_batch(ctx, with)).epsilon(1e-9));
        scorer.push(z);
        chosen = with;
        CHECK(scorer.prefix_value() == doctest::Approx(gibbon_batch(ctx, chosen)).epsilon(1e-9));
    }
}

TEST_CASE("acquisition names round trip") {
    for (Acquisition a : {Acquisition::kGibbon, Acquisition::kGibbonModified, Acquisition::kMes,
                          Acquisition::kEi, Acquisition::kLpEi, Acquisition::kLpMes,
                          Acquisition::kDppExplore, Acquisition::kRandom}) {
        auto parsed = parse_acquisition(acquisition_name(a));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == a);
    }
    CHECK(!parse_acquisition("entropy-search").has_value());
}
