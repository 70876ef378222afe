#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace monotest;
using Catch::Approx;

TEST_CASE("global Rice estimator") {
    const Sample flat({0.1, 0.5, 0.9}, {2.0, 2.0, 2.0});
    for (double v : rice_global(flat).values) CHECK(v == 0.0);

    const Sample s({0.0, 1.0, 2.0, 3.0}, {0.0, 2.0, 0.0, 2.0});
    const auto r = rice_global(s);
    CHECK(r.values.size() == 4);
    CHECK(r.values[0] == Approx(std::sqrt(12.0 / 8.0)).epsilon(1e-15));
    CHECK(r.values[0] == Approx(1.22474487).epsilon(1e-8));

    // order of rows does not matter; sorting is by X
    const Sample shuffled({3.0, 0.0, 2.0, 1.0}, {2.0, 0.0, 0.0, 2.0});
    CHECK(rice_global(shuffled).values[0] == r.values[0]);

    std::vector<double> g(101);
    for (int i = 0; i <= 100; ++i) g[static_cast<std::size_t>(i)] = i / 100.0;
    CHECK(rice_global(Sample(g, g)).values[0] == Approx(std::sqrt(100 * 0.0001 / 202)).epsilon(1e-12));
    CHECK(rice_global(Sample(g, g)).values[0] == Approx(0.0070360).epsilon(1e-4));
    CHECK_THROWS_AS(rice_global(Sample({1.0}, {1.0})), Error);
}

TEST_CASE("local Rice estimator") {
    const Sample flat({0.1, 0.5, 0.9}, {2.0, 2.0, 2.0});
    for (double v : rice_local(flat, 0.3).values) CHECK(v == 0.0);

    std::mt19937_64 rng(2);
    const auto x = fixture::uniform(rng, 300);
    const auto y = fixture::normal(rng, 300);
    const Sample s(x, y);
    const auto wide = rice_local(s, 5.0);
    const double global = rice_global(s).values[0];
    for (double v : wide.values) CHECK(v == Approx(global).epsilon(1e-12));

    // brute-force J(i) on a small instance
    const auto xs = fixture::uniform(rng, 40);
    const auto ys = fixture::normal(rng, 40);
    const double bn = 0.3;
    const auto loc = rice_local(Sample(xs, ys), bn);
    const auto order = sort_order(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::size_t count = 0;
        double ss = 0.0;
        for (std::size_t p = 0; p < order.size(); ++p) {
            const bool in_p = std::abs(xs[order[p]] - xs[i]) <= bn;
            count += in_p;
            if (in_p && p + 1 < order.size() && std::abs(xs[order[p + 1]] - xs[i]) <= bn) {
                const double d = ys[order[p + 1]] - ys[order[p]];
                ss += d * d;
            }
        }
        CHECK(loc.values[i] == Approx(std::sqrt(ss / (2.0 * count))).epsilon(1e-12));
    }
    CHECK_THROWS_AS(rice_local(s, 0.0), Error);
}

TEST_CASE("local Rice tracks a heteroscedastic sigma(x)") {
    int good = 0;
    for (int r = 0; r < 100; ++r) {
        std::mt19937_64 rng(1000 + r);
        const auto x = fixture::uniform(rng, 2000);
        std::normal_distribution<double> nd;
        std::vector<double> y(2000);
        for (std::size_t i = 0; i < 2000; ++i) y[i] = std::sin(x[i]) + 0.05 * (1.0 + x[i]) * nd(rng);
        const auto est = rice_local(Sample(x, y), 0.1);
        double worst = 0.0;
        for (std::size_t i = 0; i < 2000; ++i) worst = std::max(worst, std::abs(est.values[i] - 0.05 * (1.0 + x[i])));
        good += worst <= 0.02;
    }
    CHECK(good >= 95);
}

TEST_CASE("residual sigma") {
    const Sample s({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0});
    for (double v : residual_sigma(s, [](double x) { return 1.0 + 2.0 * x; }).values) CHECK(v == 0.0);
    const auto neg = residual_sigma(s, [](double x) { return 2.0 + 2.0 * x; });
    for (double v : neg.values) CHECK(v == -1.0);

    int good = 0;
    for (int r = 0; r < 100; ++r) {
        std::mt19937_64 rng(50 + r);
        const auto x = fixture::uniform(rng, 500);
        const auto e = fixture::normal(rng, 500, 0.05);
        std::vector<double> y(500);
        for (std::size_t i = 0; i < 500; ++i) y[i] = x[i] * x[i] * x[i] - x[i] + e[i];
        const auto res = residual_sigma_poly(Sample(x, y), 3);
        double m = 0.0, v = 0.0;
        for (double d : res.values) m += d;
        m /= 500.0;
        for (double d : res.values) v += (d - m) * (d - m);
        const double sd = std::sqrt(v / 499.0);
        good += sd >= 0.03 && sd <= 0.07;
    }
    CHECK(good >= 95);
}

TEST_CASE("two-step polynomial variance") {
    std::vector<double> x(50), y(50);
    for (std::size_t i = 0; i < 50; ++i) {
        x[i] = static_cast<double>(i) / 49.0;
        y[i] = 1.0 + 2.0 * x[i];
    }
    const auto z = two_step_poly_variance(Sample(x, y), 1);
    const double floor = std::sqrt(variance_floor(y));
    for (double v : z.values) CHECK(v == Approx(floor).epsilon(1e-12));

    int good = 0;
    for (int r = 0; r < 100; ++r) {
        std::mt19937_64 rng(700 + r);
        const auto xr = fixture::uniform(rng, 1000);
        const auto e = fixture::normal(rng, 1000, 0.1);
        std::vector<double> yr(1000);
        for (std::size_t i = 0; i < 1000; ++i) yr[i] = 0.5 * xr[i] + e[i];
        const auto est = two_step_poly_variance(Sample(xr, yr), 1);
        double m = 0.0;
        for (double v : est.values) m += v;
        m /= 1000.0;
        good += m >= 0.08 && m <= 0.12;
    }
    CHECK(good >= 95);
    CHECK(variance_floor(std::vector<double>{3.0, 3.0}) == 1e-12);
}

TEST_CASE("sigma estimators are translation invariant and scale linearly") {
    std::mt19937_64 rng(31);
    const auto x = fixture::uniform(rng, 200);
    const auto y = fixture::normal(rng, 200);
    std::vector<double> shifted(y), scaled(y);
    for (auto& v : shifted) v += 7.5;
    for (auto& v : scaled) v *= 3.0;
    const Sample a(x, y), b(x, shifted), c(x, scaled);

    auto same = [](const SigmaEstimate& p, const SigmaEstimate& q, double factor) {
        for (std::size_t i = 0; i < p.size(); ++i)
            if (std::abs(q.values[i] - factor * p.values[i]) > 1e-10 * (1.0 + std::abs(p.values[i]))) return false;
        return true;
    };
    CHECK(same(rice_global(a), rice_global(b), 1.0));
    CHECK(same(rice_local(a, 0.2), rice_local(b, 0.2), 1.0));
    CHECK(same(residual_sigma_poly(a, 5), residual_sigma_poly(b, 5), 1.0));
    CHECK(same(two_step_poly_variance(a, 2), two_step_poly_variance(b, 2), 1.0));
    CHECK(same(rice_global(a), rice_global(c), 3.0));
    CHECK(same(rice_local(a, 0.2), rice_local(c, 0.2), 3.0));
    CHECK(same(residual_sigma_poly(a, 5), residual_sigma_poly(c, 5), 3.0));
    CHECK(same(two_step_poly_variance(a, 2), two_step_poly_variance(c, 2), 3.0));
    for (double v : two_step_poly_variance(a, 3).values) CHECK(v >= 0.0);
}

TEST_CASE("sigma method names") {
    for (auto m : {SigmaMethod::rice, SigmaMethod::local_rice, SigmaMethod::residual, SigmaMethod::two_step_poly})
        CHECK(sigma_method_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(sigma_method_from_string("mad"), Error);
}
