#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "support.hpp"

using namespace monotest;
using Catch::Approx;

TEST_CASE("upper quantile convention") {
    const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
    CHECK(quantile_upper(v, 0.75) == 3.0);
    CHECK(quantile_upper(v, 1.0) == 4.0);
    CHECK(quantile_upper(v, 0.5) == 2.0);
    CHECK(quantile_upper(v, 0.01) == 1.0);

    std::vector<double> b(500);
    std::iota(b.begin(), b.end(), 1.0);
    std::shuffle(b.begin(), b.end(), std::mt19937_64(3));
    CHECK(quantile_upper(b, 0.9) == 450.0);
    CHECK(quantile_upper(b, 0.99) == 495.0);
    CHECK_THROWS_AS(quantile_upper(std::vector<double>{}, 0.5), Error);
    CHECK_THROWS_AS(quantile_upper(v, 0.0), Error);
}

TEST_CASE("add-one p-value") {
    std::vector<double> draws(499, 0.0);
    for (std::size_t b = 0; b < 49; ++b) draws[b] = 2.0;
    CHECK(p_value(1.0, draws) == 0.1);
    CHECK(p_value(5.0, draws) == 1.0 / 500.0);
    CHECK(p_value(-std::numeric_limits<double>::max(), draws) == 1.0);
    CHECK(p_value(2.0, draws) == 0.1); // ties count as exceedances
}

TEST_CASE("boot config validation") {
    BootConfig ok;
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.method == CriticalMethod::step_down);
    CHECK(ok.B == 500);
    CHECK_THROWS_AS((BootConfig{0.0, 0.01, 10, 0}.validate()), Error);
    CHECK_THROWS_AS((BootConfig{1.0, 0.01, 10, 0}.validate()), Error);
    CHECK_THROWS_AS((BootConfig{0.1, 0.1, 10, 0}.validate()), Error);
    CHECK_THROWS_AS((BootConfig{0.1, 0.0, 10, 0}.validate()), Error);
    CHECK_THROWS_AS((BootConfig{0.1, 0.01, 0, 0}.validate()), Error);
    for (auto m : {CriticalMethod::plug_in, CriticalMethod::one_step, CriticalMethod::step_down})
        CHECK(critical_method_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(critical_method_from_string("XX"), Error);
}

TEST_CASE("single scale with equal sigma: median of T* is near zero") {
    std::mt19937_64 rng(8);
    const auto x = fixture::uniform(rng, 80);
    const auto y = fixture::normal(rng, 80);
    const double loc[] = {0.0}, bw[] = {0.8};
    const auto set = build_custom_set(loc, bw);
    const SigmaEstimate sigma{std::vector<double>(80, 1.0), SigmaMethod::rice, 0.0};
    BootConfig cfg;
    cfg.alpha = 0.5;
    cfg.gamma = 0.01;
    cfg.B = 2000;
    cfg.seed = 4;
    const TestRun run(Sample(x, y), set, sigma, cfg);
    CHECK(std::abs(run.pi.value) <= 0.1);
    // t*_b is exactly N(0,1) under equal sigma; its sd should be close to one
    double m = 0.0, v = 0.0;
    for (double t : run.pi.maxima) m += t;
    m /= 2000.0;
    for (double t : run.pi.maxima) v += (t - m) * (t - m);
    CHECK(std::sqrt(v / 1999.0) == Approx(1.0).margin(0.06));
}

namespace {

struct Fixture {
    Sample sample;
    ScaleSet set;
    SigmaEstimate sigma;
};

Fixture noisy(std::uint64_t seed, std::size_t n, double slope) {
    std::mt19937_64 rng(seed);
    const auto x = fixture::uniform(rng, n);
    const auto e = fixture::normal(rng, n, 0.1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = slope * x[i] - 0.6 * oracle::epan(2.0 * x[i]) + e[i];
    Sample s(x, y);
    auto set = build_basic_set(s.x);
    auto sig = rice_global(s);
    return {std::move(s), std::move(set), std::move(sig)};
}

} // namespace

TEST_CASE("identical seeds give identical critical values") {
    const auto f = noisy(1, 120, 0.0);
    BootConfig cfg;
    cfg.B = 300;
    cfg.seed = 77;
    const TestRun a(f.sample, f.set, f.sigma, cfg), b(f.sample, f.set, f.sigma, cfg);
    CHECK(a.pi.value == b.pi.value);
    CHECK(a.os.selected == b.os.selected);
    CHECK(a.sd.selected == b.sd.selected);
    CHECK(a.sd.maxima == b.sd.maxima);
    cfg.threads = 3;
    const TestRun c(f.sample, f.set, f.sigma, cfg);
    CHECK(c.boot.matrix() == a.boot.matrix());
    CHECK(c.sd.value == a.sd.value);
    cfg.seed = 78;
    const TestRun d(f.sample, f.set, f.sigma, cfg);
    CHECK(d.pi.maxima != a.pi.maxima);
}

TEST_CASE("step-down sets shrink and the iteration count is bounded") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = noisy(100 + seed, 150, 0.2);
        BootConfig cfg;
        cfg.B = 200;
        cfg.seed = seed;
        const TestRun run(f.sample, f.set, f.sigma, cfg);
        CHECK(run.sd.iterations >= 1);
        CHECK(run.sd.iterations <= f.set.size());
        CHECK(std::includes(run.os.selected.begin(), run.os.selected.end(), run.sd.selected.begin(),
                            run.sd.selected.end()));
        CHECK(run.sd.value <= run.os.value);
        CHECK(run.os.value <= run.pi.value);
        const auto rep = run.report(cfg, f.sigma.values);
        CHECK(rep.reject == (rep.T > rep.critical_value));
        CHECK(rep.critical_value == run.sd.value);
        CHECK(rep.p_value == p_value(run.field.T, run.sd.maxima));
    }
}

TEST_CASE("flat regression keeps every scale in the one-step set") {
    std::mt19937_64 rng(12);
    const auto x = fixture::uniform(rng, 150);
    const auto y = fixture::normal(rng, 150, 0.05);
    const Sample s(x, y);
    const auto set = build_basic_set(s.x);
    BootConfig cfg;
    cfg.B = 300;
    cfg.seed = 3;
    const TestRun run(s, set, rice_global(s), cfg);
    CHECK(run.os.selected == run.field.active_ids);
    CHECK(run.os.value == run.pi.value);
}

TEST_CASE("empty selection falls back to one scale") {
    // steep increasing line with tiny sigma: every t(s) is far below -2 c^PI
    std::vector<double> x(60), y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        x[i] = -1.0 + 2.0 * static_cast<double>(i) / 59.0;
        y[i] = 10.0 * x[i] + ((i % 2) ? 1e-3 : -1e-3);
    }
    const Sample s(x, y);
    const auto set = build_basic_set(s.x);
    const SigmaEstimate tiny{std::vector<double>(60, 1e-3), SigmaMethod::rice, 0.0};
    BootConfig cfg;
    cfg.B = 200;
    cfg.seed = 9;
    const TestRun run(s, set, tiny, cfg);
    REQUIRE(run.os.selected.size() == 1);
    REQUIRE(run.sd.selected.size() == 1);
    CHECK(run.field.T < 0.0);
    const TestRun again(s, set, tiny, cfg);
    CHECK(again.os.selected == run.os.selected);

    cfg.argmax_fallback = true;
    const TestRun am(s, set, tiny, cfg);
    REQUIRE(am.os.selected.size() == 1);
    CHECK(am.os.selected[0] == am.field.argmax);
    CHECK(am.sd.selected == am.os.selected);
    CHECK(am.sd.value <= am.pi.value);
}

TEST_CASE("T does not depend on the row order") {
    const auto f = noisy(5, 90, 0.1);
    std::vector<std::size_t> perm(90);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));
    std::vector<double> xp(90), yp(90);
    for (std::size_t i = 0; i < 90; ++i) {
        xp[i] = f.sample.x[perm[i]];
        yp[i] = f.sample.y[perm[i]];
    }
    const Sample p(xp, yp);
    const auto fa = studentized_field(f.sample, f.set, f.sigma);
    const auto fb = studentized_field(p, build_basic_set(p.x), rice_global(p));
    CHECK(fa.T == Approx(fb.T).epsilon(1e-12));
}

TEST_CASE("mismatched sigma length is a data error") {
    const auto f = noisy(2, 30, 0.0);
    SigmaEstimate bad{std::vector<double>(29, 1.0), SigmaMethod::rice, 0.0};
    CHECK_THROWS_AS(TestRun(f.sample, f.set, bad, BootConfig{}), Error);
}
