#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace monotest;
using Catch::Approx;

TEST_CASE("exact polynomial data are reproduced") {
    std::mt19937_64 rng(1);
    const auto x = fixture::uniform(rng, 60, -3.0, 5.0);
    std::vector<double> lin(60), cub(60);
    for (std::size_t i = 0; i < 60; ++i) {
        lin[i] = 2.0 - 0.5 * x[i];
        cub[i] = 1.0 + x[i] - 2.0 * x[i] * x[i] + 0.25 * x[i] * x[i] * x[i];
    }
    for (int d = 1; d <= 6; ++d) {
        const auto fit = poly_series_fit(x, lin, d);
        for (std::size_t i = 0; i < 60; ++i) CHECK(std::abs(fit.fitted[i] - lin[i]) <= 1e-10);
    }
    const auto fit = poly_series_fit(x, cub, 3);
    for (std::size_t i = 0; i < 60; ++i) CHECK(std::abs(fit.fitted[i] - cub[i]) <= 1e-9);
    CHECK(fit.predictor(0.5) == Approx(1.0 + 0.5 - 0.5 + 0.25 * 0.125).epsilon(1e-12));
}

TEST_CASE("three points, degree two interpolates") {
    const std::vector<double> x{0.0, 1.0, 3.0}, y{2.0, -1.0, 4.0};
    const auto fit = poly_series_fit(x, y, 2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(fit.fitted[i] - y[i]) <= 1e-12);
}

TEST_CASE("rank deficiency is reported") {
    const std::vector<double> x{1.0, 1.0, 2.0, 2.0}, y{1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_MATCHES(poly_series_fit(x, y, 2), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.kind() == ErrorKind::rank_deficient &&
                                    std::string(e.what()).find("condition") != std::string::npos;
                         }));
    CHECK_THROWS_AS(poly_series_fit(x, y, 4), Error);
}

TEST_CASE("default series degrees") {
    CHECK(default_series_degree(100) == 5);
    CHECK(default_series_degree(101) == 6);
    CHECK(default_series_degree(200) == 6);
    CHECK(default_series_degree(201) == 8);
    CHECK(default_series_degree(500) == 8);
}

TEST_CASE("multivariate basis has bounded total degree") {
    Eigen::MatrixXd v(10, 2);
    v.setRandom();
    CHECK(PolyBasis(v, 2).size() == 6);           // 1, a, b, a^2, ab, b^2
    CHECK(PolyBasis(v, 2, false).size() == 5);
    CHECK(PolyBasis(v, 3).size() == 10);
    Eigen::MatrixXd w(10, 3);
    w.setRandom();
    CHECK(PolyBasis(w, 2).size() == 10);
}
