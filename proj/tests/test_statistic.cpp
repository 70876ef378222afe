#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace monotest;
using Catch::Approx;

namespace {

constexpr double q = 0.31640625; // K(-0.5) K(0.5) = 0.5625^2

const Scale kMid{0.5, 1.0, 0.0, {}, 0.0};

ScaleSet singleton(const Scale& s) {
    ScaleSet set;
    set.scales = {s};
    return set;
}

} // namespace

TEST_CASE("weights for the two-point design") {
    const Sample s({0.0, 1.0}, {1.0, 0.0});
    const auto w = weights_w(s, kMid);
    CHECK(w[0] == q);
    CHECK(w[1] == -q);
    const auto wn = weights_w_naive(s, kMid);
    CHECK(wn[0] == q);
    CHECK(wn[1] == -q);

    const Sample tied({0.3, 0.3, 0.3}, {1.0, 2.0, 3.0});
    for (double v : weights_w(tied, Scale{0.3, 1.0, 0.0, {}, 0.0})) CHECK(v == 0.0);
    for (double v : weights_w(tied, Scale{0.3, 1.0, 1.0, {}, 0.0})) CHECK(v == 0.0);
}

TEST_CASE("test function b") {
    const Sample dec({0.0, 1.0}, {1.0, 0.0});
    const Sample inc({0.0, 1.0}, {0.0, 1.0});
    const Sample flat({0.0, 1.0}, {2.0, 2.0});
    CHECK(test_function_b(dec, kMid) == q);
    CHECK(test_function_b(inc, kMid) == -q);
    CHECK(test_function_b(flat, kMid) == 0.0);
    CHECK(oracle::b_double_sum(dec.x, dec.y, 0.5, 1.0, 0.0) == q);
}

TEST_CASE("b equals the pairwise double sum on random data") {
    std::mt19937_64 rng(3);
    for (int r = 0; r < 30; ++r) {
        const std::size_t n = 5 + static_cast<std::size_t>(r) * 5;
        const auto x = fixture::uniform(rng, n);
        const auto y = fixture::normal(rng, n);
        const Scale s{x[0], 0.2 + 0.05 * r, r % 2 ? 1.0 : 0.0, {}, 0.0};
        const double fast = test_function_b(Sample(x, y), s);
        const double slow = oracle::b_double_sum(x, y, s.x, s.h, s.k);
        CHECK(std::abs(fast - slow) <= 1e-10 * (1.0 + std::abs(slow)));
    }
}

TEST_CASE("fast weights agree with the naive loop") {
    std::mt19937_64 rng(19);
    for (int r = 0; r < 60; ++r) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng() % 199);
        auto x = fixture::uniform(rng, n);
        if (r % 4 == 0) // ties
            for (auto& v : x) v = std::round(v * 8.0) / 8.0;
        const double k = r % 3 == 0 ? 0.0 : (r % 3 == 1 ? 1.0 : 1.5);
        const Kernel& K = r % 5 == 0 ? kUniform : kEpanechnikov;
        const Scale s{x[rng() % n], 0.05 + 0.9 * (static_cast<double>(rng() % 1000) / 1000.0), k, {}, 0.0};
        const Sample smp(x, std::vector<double>(n, 0.0));
        const auto fast = weights_w(smp, s, K);
        const auto slow = oracle::w_loop(x, s.x, s.h, s.k, K.eval);
        double wmax = 0.0, dev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            wmax = std::max(wmax, std::abs(slow[i]));
            dev = std::max(dev, std::abs(fast[i] - slow[i]));
        }
        CHECK(dev <= 1e-10 * (1.0 + wmax));
    }
}

TEST_CASE("variance estimate") {
    const std::vector<double> w{q, -q}, one{1.0, 1.0}, zero{0.0, 0.0};
    CHECK(variance_hat(w, one) == Approx(0.20022583).epsilon(1e-8));
    CHECK(variance_hat(w, one) == 2.0 * q * q);
    CHECK(variance_hat(w, zero) == 0.0);
    const std::vector<double> neg{-1.0, 1.0};
    CHECK(variance_hat(w, neg) == variance_hat(w, one));

    std::mt19937_64 rng(8);
    const auto x = fixture::uniform(rng, 150);
    const auto sig = fixture::normal(rng, 150, 0.3);
    const Scale s{0.1, 0.4, 0.0, {}, 0.0};
    const double fast = variance_hat(weights_w(Sample(x, x), s), sig);
    const double slow = oracle::V_loop(oracle::w_loop(x, s.x, s.h, s.k), sig);
    CHECK(oracle::rel_dev(fast, slow) <= 1e-12);
}

TEST_CASE("studentized field, two-point design") {
    const Sample s({0.0, 1.0}, {1.0, 0.0});
    const SigmaEstimate sig{{1.0, 1.0}, SigmaMethod::rice, 0.0};
    const auto f = studentized_field(s, singleton(kMid), sig);
    CHECK(f.T == Approx(0.70710678).epsilon(1e-8));
    CHECK(f.T == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    REQUIRE(f.active_ids.size() == 1);
    CHECK(sensitivity_A(s, singleton(kMid), sig.values) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("constant Y gives T = 0; scale weights scale t") {
    std::mt19937_64 rng(4);
    const auto x = fixture::uniform(rng, 80);
    const Sample s(x, std::vector<double>(80, 3.25));
    auto set = build_basic_set(x);
    const SigmaEstimate sig{std::vector<double>(80, 0.5), SigmaMethod::rice, 0.0};
    const auto f = studentized_field(s, set, sig);
    CHECK(f.T == 0.0);

    const Sample noisy(x, fixture::normal(rng, 80));
    const auto f1 = studentized_field(noisy, set, sig);
    set.scale_weights.assign(set.size(), 2.0);
    const auto f2 = studentized_field(noisy, set, sig);
    CHECK(f2.T == 2.0 * f1.T);
    for (std::size_t i = 0; i < set.size(); ++i)
        if (f1.scales[i].active) CHECK(f2.scales[i].t == 2.0 * f1.scales[i].t);
}

TEST_CASE("degenerate variance") {
    const Sample s({0.0, 1.0, 2.0}, {1.0, 0.0, 3.0});
    const SigmaEstimate zero{{0.0, 0.0, 0.0}, SigmaMethod::rice, 0.0};
    CHECK_THROWS_MATCHES(studentized_field(s, build_basic_set(s.x), zero), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::degenerate_variance;
                         }));
    // a window holding a single point is inactive and excluded from T
    const Sample far({0.0, 0.01, 5.0}, {0.0, 1.0, 9.0});
    ScaleSet set;
    set.scales = {Scale{5.0, 0.5, 0.0, {}, 0.0}, Scale{0.005, 0.5, 0.0, {}, 0.0}};
    const SigmaEstimate one{{1.0, 1.0, 1.0}, SigmaMethod::rice, 0.0};
    const auto f = studentized_field(far, set, one);
    CHECK_FALSE(f.scales[0].active);
    CHECK(f.scales[1].active);
    CHECK(f.T == f.scales[1].t);
}

TEST_CASE("sensitivity A_n against direct enumeration") {
    std::mt19937_64 rng(12);
    const auto x = fixture::uniform(rng, 50);
    const auto sig = fixture::normal(rng, 50, 0.2);
    const auto set = build_basic_set(x);
    const double a = sensitivity_A(Sample(x, fixture::normal(rng, 50)), set, sig);
    const double a2 = sensitivity_A(Sample(x, fixture::normal(rng, 50)), set, sig);
    CHECK(a == a2);

    double brute = 0.0;
    std::vector<double> vs;
    for (const auto& s : set.scales) vs.push_back(oracle::V_loop(oracle::w_loop(x, s.x, s.h, s.k), sig));
    const double vmax = *std::max_element(vs.begin(), vs.end());
    for (std::size_t k = 0; k < set.size(); ++k) {
        if (!(vs[k] > 1e-12 * vmax)) continue;
        const auto w = oracle::w_loop(x, set.scales[k].x, set.scales[k].h, 0.0);
        for (double v : w) brute = std::max(brute, std::abs(v) / std::sqrt(vs[k]));
    }
    CHECK(oracle::rel_dev(a, brute) <= 1e-12);
}

TEST_CASE("local-in-z field") {
    std::mt19937_64 rng(21);
    const std::size_t n = 120;
    const auto x = fixture::uniform(rng, n);
    const auto y = fixture::normal(rng, n);
    const SigmaEstimate sig{std::vector<double>(n, 1.0), SigmaMethod::rice, 0.0};
    const auto xset = build_basic_set(x);

    SECTION("constant z reduces to the univariate field") {
        const Eigen::MatrixXd z = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), 1, 0.7);
        const std::vector<std::vector<double>> cells{{0.7}};
        const double bw[] = {0.3};
        const auto zset = build_z_local_set(xset, cells, bw);
        const auto uni = studentized_field(Sample(x, y), xset, sig);
        const auto multi = multivariate_field(Sample(x, y, z), zset, sig);
        for (std::size_t s = 0; s < xset.size(); ++s)
            CHECK(std::abs(multi.scales[s].t - uni.scales[s].t) <= 1e-12 * (1.0 + std::abs(uni.scales[s].t)));
    }

    SECTION("observations outside the z window drop out") {
        Eigen::MatrixXd z(static_cast<Eigen::Index>(n), 1);
        std::vector<double> xk, yk;
        for (std::size_t i = 0; i < n; ++i) {
            const bool keep = i % 3 != 0;
            z(static_cast<Eigen::Index>(i), 0) = keep ? 0.0 : 5.0;
            if (keep) {
                xk.push_back(x[i]);
                yk.push_back(y[i]);
            }
        }
        const std::vector<std::vector<double>> cells{{0.0}};
        const double bw[] = {1.0}; // Kbar = 0.75 on kept rows, 0 on the rest
        const auto zset = build_z_local_set(xset, cells, bw);
        const auto multi = multivariate_field(Sample(x, y, z), zset, sig);
        ScaleSet kept_set = xset;
        const auto uni = studentized_field(Sample(xk, yk), kept_set,
                                           SigmaEstimate{std::vector<double>(xk.size(), 1.0), SigmaMethod::rice, 0.0});
        for (std::size_t s = 0; s < xset.size(); ++s) {
            if (!uni.scales[s].active) continue;
            CHECK(std::abs(multi.scales[s].t - uni.scales[s].t) <= 1e-10 * (1.0 + std::abs(uni.scales[s].t)));
        }
    }

    SECTION("random z against a quadruple-product loop") {
        const auto zv = fixture::uniform(rng, n);
        Eigen::MatrixXd z(static_cast<Eigen::Index>(n), 1);
        for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i), 0) = zv[i];
        const std::vector<std::vector<double>> cells{{-0.3}, {0.4}};
        const double bw[] = {0.6};
        const auto zset = build_z_local_set(xset, cells, bw);
        const auto multi = multivariate_field(Sample(x, y, z), zset, sig);
        for (std::size_t s = 0; s < zset.size(); s += 7) {
            const auto& sc = zset.scales[s];
            double b = 0.0;
            std::vector<double> w(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double Qij = oracle::Q(x[i], x[j], sc.x, sc.h, 0.0) *
                                       oracle::epan((zv[i] - sc.z_loc[0]) / sc.z_bw) *
                                       oracle::epan((zv[j] - sc.z_loc[0]) / sc.z_bw);
                    b += 0.5 * (y[i] - y[j]) * oracle::sgn(x[j] - x[i]) * Qij;
                    w[i] += oracle::sgn(x[j] - x[i]) * Qij;
                }
            const double V = oracle::V_loop(w, sig.values);
            if (!multi.scales[s].active) continue;
            CHECK(oracle::rel_dev(multi.scales[s].t, b / std::sqrt(V)) <= 1e-10);
        }
    }
}
