#pragma once

// Independent brute-force oracles and random fixtures for the test suite.
// Nothing here calls the fast paths under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "monotest.hpp"

namespace oracle {

inline double epan(double t) { return std::abs(t) < 1.0 ? 0.75 * (1.0 - t * t) : 0.0; }

inline double sgn(double v) { return (v > 0) - (v < 0); }

inline double Q(double a, double b, double x, double h, double k, double (*K)(double) = epan) {
    const double d = k == 0.0 ? 1.0 : std::pow(std::abs(a - b), k);
    return d * K((a - x) / h) * K((b - x) / h);
}

/// (1/2) sum_i sum_j (Y_i - Y_j) sign(X_j - X_i) Q_ij
inline double b_double_sum(const std::vector<double>& x, const std::vector<double>& y, double cx, double h, double k,
                           double (*K)(double) = epan) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            acc += (y[i] - y[j]) * sgn(x[j] - x[i]) * Q(x[i], x[j], cx, h, k, K);
    return 0.5 * acc;
}

inline std::vector<double> w_loop(const std::vector<double>& x, double cx, double h, double k,
                                  double (*K)(double) = epan) {
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) w[i] += sgn(x[j] - x[i]) * Q(x[i], x[j], cx, h, k, K);
    return w;
}

inline double V_loop(const std::vector<double>& w, const std::vector<double>& sigma) {
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) v += sigma[i] * sigma[i] * w[i] * w[i];
    return v;
}

inline double rel_dev(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

} // namespace oracle

namespace fixture {

inline std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& e : v) e = d(rng);
    return v;
}

inline std::vector<double> normal(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(n);
    for (auto& e : v) e = d(rng);
    return v;
}

} // namespace fixture
