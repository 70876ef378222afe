#pragma once

// Estimators of the conditional standard deviation sigma_i = sd(eps_i | X_i).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "sample.hpp"
#include "series.hpp"

namespace monotest {

enum class SigmaMethod { rice, local_rice, residual, two_step_poly };

inline std::string_view to_string(SigmaMethod m) noexcept {
    switch (m) {
    case SigmaMethod::rice: return "rice";
    case SigmaMethod::local_rice: return "local-rice";
    case SigmaMethod::residual: return "residual";
    case SigmaMethod::two_step_poly: return "two-step-poly";
    }
    return "?";
}

inline SigmaMethod sigma_method_from_string(std::string_view s) {
    if (s == "rice") return SigmaMethod::rice;
    if (s == "local-rice") return SigmaMethod::local_rice;
    if (s == "residual") return SigmaMethod::residual;
    if (s == "two-step-poly") return SigmaMethod::two_step_poly;
    detail::fail(ErrorKind::invalid_argument, "unknown sigma method '" + std::string(s) + "'");
}

/// Per-observation sigma-hat in original observation order. Only the residual
/// method produces signed values; the test only ever uses their squares.
struct SigmaEstimate {
    std::vector<double> values;
    SigmaMethod method = SigmaMethod::rice;
    double param = 0.0; ///< local-Rice bandwidth or polynomial degree

    std::size_t size() const noexcept { return values.size(); }
};

namespace detail {

inline std::vector<double> sorted_y(const Sample& sample, const std::vector<std::size_t>& order) {
    std::vector<double> ys(order.size());
    for (std::size_t p = 0; p < order.size(); ++p) ys[p] = sample.y[order[p]];
    return ys;
}

inline double sum_sq_diffs(const std::vector<double>& ys) {
    double acc = 0.0;
    for (std::size_t p = 0; p + 1 < ys.size(); ++p) {
        const double d = ys[p + 1] - ys[p];
        acc += d * d;
    }
    return acc;
}

} // namespace detail

/// Rice's difference estimator, replicated for every observation.
inline SigmaEstimate rice_global(const Sample& sample) {
    if (sample.size() < 2) detail::fail(ErrorKind::data, "rice: need at least two observations");
    const auto ys = detail::sorted_y(sample, sort_order(sample.x));
    const double n = static_cast<double>(ys.size());
    const double sigma = std::sqrt(detail::sum_sq_diffs(ys) / (2.0 * n));
    return {std::vector<double>(ys.size(), sigma), SigmaMethod::rice, 0.0};
}

/// (max X - min X) * (log n / n)^(1/3)
inline double default_local_rice_bandwidth(const Sample& sample) {
    const auto [lo, hi] = std::minmax_element(sample.x.begin(), sample.x.end());
    const double n = static_cast<double>(sample.size());
    return (*hi - *lo) * std::cbrt(std::log(n) / n);
}

/// Local version of Rice's estimator: J(i) = {j : |X_j - X_i| <= b_n} in sorted
/// order, squared successive differences inside J(i), normalized by 2|J(i)|.
inline SigmaEstimate rice_local(const Sample& sample, double bandwidth) {
    detail::require(std::isfinite(bandwidth) && bandwidth > 0.0, "local rice: bandwidth must be positive");
    if (sample.size() < 2) detail::fail(ErrorKind::data, "local rice: need at least two observations");
    const auto order = sort_order(sample.x);
    const std::size_t n = order.size();
    std::vector<double> xs(n);
    for (std::size_t p = 0; p < n; ++p) xs[p] = sample.x[order[p]];
    const auto ys = detail::sorted_y(sample, order);

    // prefix[p] = sum of squared differences (ys[q+1] - ys[q])^2 for q < p
    std::vector<double> prefix(n, 0.0);
    for (std::size_t p = 1; p < n; ++p) {
        const double d = ys[p] - ys[p - 1];
        prefix[p] = prefix[p - 1] + d * d;
    }

    std::vector<double> out(n);
    for (std::size_t p = 0; p < n; ++p) {
        const auto lo = static_cast<std::size_t>(
            std::lower_bound(xs.begin(), xs.end(), xs[p] - bandwidth) - xs.begin());
        const auto hi = static_cast<std::size_t>(
            std::upper_bound(xs.begin(), xs.end(), xs[p] + bandwidth) - xs.begin());
        // pairs (q, q+1) with lo <= q and q+1 < hi
        const double ss = prefix[hi - 1] - prefix[lo];
        out[order[p]] = std::sqrt(ss / (2.0 * static_cast<double>(hi - lo)));
    }
    return {std::move(out), SigmaMethod::local_rice, bandwidth};
}

/// Signed residuals Y_i - f_hat(X_i).
inline SigmaEstimate residual_sigma(const Sample& sample, const std::function<double(double)>& f_hat,
                                    double param = 0.0) {
    std::vector<double> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) out[i] = sample.y[i] - f_hat(sample.x[i]);
    return {std::move(out), SigmaMethod::residual, param};
}

/// Residuals from a polynomial series fit of the given degree.
inline SigmaEstimate residual_sigma_poly(const Sample& sample, int degree) {
    const auto fit = poly_series_fit(sample.x, sample.y, degree);
    std::vector<double> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) out[i] = sample.y[i] - fit.fitted[i];
    return {std::move(out), SigmaMethod::residual, static_cast<double>(degree)};
}

/// 1e-12 times the sample variance of Y (or 1 when Y is constant).
inline double variance_floor(std::span<const double> y) {
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double var = y.size() > 1 ? ss / (n - 1.0) : 0.0;
    return 1e-12 * (var > 0.0 ? var : 1.0);
}

/// Two-step polynomial method: OLS residuals of Y on a polynomial in X, then
/// squared residuals projected on the same polynomial; projections below the
/// variance floor are clamped to it.
inline SigmaEstimate two_step_poly_variance(const Sample& sample, int degree) {
    detail::require(degree >= 1, "two-step variance: degree must be at least 1");
    if (sample.size() <= static_cast<std::size_t>(degree))
        detail::fail(ErrorKind::rank_deficient, "two-step variance: need more observations than the degree");
    const auto basis = PolyBasis::univariate(sample.x, degree);
    const Eigen::MatrixXd A = basis.design(sample.x);
    const auto first = least_squares(A, to_vector(sample.y), "two-step variance, mean step");
    const Eigen::VectorXd resid2 = (to_vector(sample.y) - first.fitted).array().square();
    const auto second = least_squares(A, resid2, "two-step variance, variance step");

    const double floor = variance_floor(sample.y);
    std::vector<double> out(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i)
        out[i] = std::sqrt(std::max(second.fitted(static_cast<Eigen::Index>(i)), floor));
    return {std::move(out), SigmaMethod::two_step_poly, static_cast<double>(degree)};
}

} // namespace monotest
