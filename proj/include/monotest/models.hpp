#pragma once

// Adapters reducing richer models to the univariate problem {X_i, Ytilde_i}:
// partially linear (Robinson), separately additive, endogenous covariate
// (control function) and sample selection (propensity score).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "sample.hpp"
#include "series.hpp"

namespace monotest {

enum class Adjustment { partial_linear, additive, endogenous, selection };

inline std::string_view to_string(Adjustment a) noexcept {
    switch (a) {
    case Adjustment::partial_linear: return "partial-linear";
    case Adjustment::additive: return "additive";
    case Adjustment::endogenous: return "endogenous";
    case Adjustment::selection: return "selection";
    }
    return "?";
}

/// Estimated nuisance objects; unused members stay empty.
struct Nuisance {
    Eigen::VectorXd beta;                                     ///< partial-linear coefficients
    std::function<double(double)> f_hat;                      ///< series estimate of f
    std::function<double(std::span<const double>)> g_hat;     ///< additive component being removed
    std::function<double(double)> lambda_hat;                 ///< selection correction
    std::vector<double> z_hat;                                ///< estimated control function
    std::vector<double> p_hat;                                ///< clamped propensity scores, all rows
    std::vector<std::string> warnings;
};

struct AdjustedSample {
    Sample base;                        ///< x and adjusted y (retained rows only)
    Adjustment adjustment = Adjustment::partial_linear;
    Nuisance nuisance;
    std::vector<std::size_t> retained;  ///< original row indices kept, in order
};

inline constexpr double kPropensityClamp = 1e-3;

namespace detail {

inline double range_of(std::span<const double> v) {
    if (v.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

// OLS of y on [1 | F | G] where F and G carry no constant. A rank failure is
// attributed to the first block whose addition breaks full column rank.
struct TwoBlockFit {
    double intercept = 0.0;
    Eigen::VectorXd beta_f, beta_g;
};

inline TwoBlockFit fit_two_blocks(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G, const Eigen::VectorXd& y,
                                  const std::string& f_name, const std::string& g_name) {
    const Eigen::Index n = F.rows();
    Eigen::MatrixXd A1(n, 1 + F.cols());
    A1 << Eigen::VectorXd::Ones(n), F;
    least_squares(A1, y, f_name + " block");
    Eigen::MatrixXd A(n, 1 + F.cols() + G.cols());
    A << Eigen::VectorXd::Ones(n), F, G;
    const auto fit = least_squares(A, y, g_name + " block");
    TwoBlockFit out;
    out.intercept = fit.coef(0);
    out.beta_f = fit.coef.segment(1, F.cols());
    out.beta_g = fit.coef.tail(G.cols());
    return out;
}

} // namespace detail

/// Robinson's estimator: partial X out of Y and each column of Z with a
/// polynomial series in X, regress residual on residual, subtract Z beta-hat.
inline AdjustedSample partial_linear_adjust(const Sample& sample, int first_stage_degree = 3) {
    sample.validate();
    if (!sample.has_z()) detail::fail(ErrorKind::data, "partial-linear model needs controls z");
    const auto n = static_cast<Eigen::Index>(sample.size());
    const Eigen::Index d = sample.z.cols();
    if (sample.size() <= static_cast<std::size_t>(first_stage_degree + 1 + d))
        detail::fail(ErrorKind::data, "partial-linear model: too few observations");

    const auto basis = PolyBasis::univariate(sample.x, first_stage_degree);
    const Eigen::MatrixXd A = basis.design(sample.x);
    const Eigen::VectorXd y = to_vector(sample.y);

    const Eigen::VectorXd y_res = y - least_squares(A, y, "partial-linear first stage").fitted;
    Eigen::MatrixXd z_res(n, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const Eigen::VectorXd zc = sample.z.col(c);
        z_res.col(c) = zc - least_squares(A, zc, "partial-linear first stage").fitted;
        const double scale = (zc.array() - zc.mean()).matrix().norm() + zc.norm();
        if (!(z_res.col(c).norm() > 1e-9 * scale))
            detail::fail(ErrorKind::rank_deficient, "collinear controls after partialling-out (column " +
                                                        std::to_string(c) + " is explained by x)");
    }

    Eigen::VectorXd beta;
    try {
        beta = least_squares(z_res, y_res, "partial-linear second stage").coef;
    } catch (const Error&) {
        detail::fail(ErrorKind::rank_deficient, "collinear controls after partialling-out");
    }

    AdjustedSample out;
    out.adjustment = Adjustment::partial_linear;
    out.nuisance.beta = beta;
    const Eigen::VectorXd y_tilde = y - sample.z * beta;
    out.base = Sample(sample.x, to_std(y_tilde), sample.z);
    out.retained = detail::all_rows(sample.size());
    return out;
}

/// Ytilde_i = Y_i - g_hat(Z_i) for a given estimate of the additive component.
inline AdjustedSample additive_adjust(const Sample& sample,
                                      const std::function<double(std::span<const double>)>& g_hat) {
    sample.validate();
    if (!sample.has_z()) detail::fail(ErrorKind::data, "additive model needs covariates z");
    std::vector<double> y_tilde(sample.size());
    std::vector<double> row(static_cast<std::size_t>(sample.z.cols()));
    for (std::size_t i = 0; i < sample.size(); ++i) {
        for (Eigen::Index c = 0; c < sample.z.cols(); ++c)
            row[static_cast<std::size_t>(c)] = sample.z(static_cast<Eigen::Index>(i), c);
        y_tilde[i] = sample.y[i] - g_hat(row);
    }
    AdjustedSample out;
    out.adjustment = Adjustment::additive;
    out.nuisance.g_hat = g_hat;
    out.base = Sample(sample.x, std::move(y_tilde), sample.z);
    out.retained = detail::all_rows(sample.size());
    return out;
}

/// Series estimate of the additive component g in Y = f(X) + g(Z) + eps,
/// with one shared intercept; g_hat is normalized to g_hat(0) = 0.
inline std::function<double(std::span<const double>)> additive_series_g(const Sample& sample, int L = 4) {
    sample.validate();
    if (!sample.has_z()) detail::fail(ErrorKind::data, "additive model needs covariates z");
    const auto fb = PolyBasis::univariate(sample.x, L, false);
    const PolyBasis gb(sample.z, L, false);
    const auto fit = detail::fit_two_blocks(fb.design(sample.x), gb.design(sample.z), to_vector(sample.y), "f", "g");
    const std::vector<double> zero(static_cast<std::size_t>(sample.z.cols()), 0.0);
    const double g0 = gb.row(zero).dot(fit.beta_g);
    return [gb, beta = fit.beta_g, g0](std::span<const double> z) { return gb.row(z).dot(beta) - g0; };
}

struct EndogenousParams {
    int first_stage_degree = 3;
    int L = 4;
};

/// Control-function adapter for Y = f(X) + W, X = lambda(U) + Z: estimate
/// Zhat = X - E[X|U], fit Y on r^L(X) and r^L(Zhat) jointly, remove g_hat(Zhat).
/// g_hat is normalized to g_hat(0) = 0 (the control function has mean zero).
inline AdjustedSample endogenous_adjust(std::span<const double> x, const Eigen::MatrixXd& u,
                                        std::span<const double> y, const EndogenousParams& params = {}) {
    const std::size_t n = x.size();
    if (y.size() != n || static_cast<std::size_t>(u.rows()) != n)
        detail::fail(ErrorKind::data, "endogenous model: x, u and y lengths differ");
    if (u.cols() == 0) detail::fail(ErrorKind::data, "endogenous model needs instruments u");
    detail::require(params.L >= 1 && params.first_stage_degree >= 1, "endogenous model: degrees must be >= 1");

    const PolyBasis first(u, params.first_stage_degree);
    const Eigen::VectorXd xv = to_vector(x);
    const Eigen::VectorXd z_hat = xv - least_squares(first.design(u), xv, "endogenous first stage").fitted;
    const auto zh = to_std(z_hat);
    if (!(detail::range_of(zh) > 1e-8 * detail::range_of(x)))
        detail::fail(ErrorKind::rank_deficient,
                     "g block: estimated control function has no variation (x is explained by u)");

    const auto fb = PolyBasis::univariate(x, params.L, false);
    const auto gb = PolyBasis::univariate(zh, params.L, false);
    const auto fit = detail::fit_two_blocks(fb.design(x), gb.design(zh), to_vector(y), "f", "g");

    const double zero[1] = {0.0};
    const double g0 = gb.row(zero).dot(fit.beta_g);
    auto g_hat = [gb, beta = fit.beta_g, g0](std::span<const double> z) { return gb.row(z).dot(beta) - g0; };
    auto f_hat = [fb, beta = fit.beta_f, c = fit.intercept + g0](double v) {
        const double pt[1] = {v};
        return c + fb.row(pt).dot(beta);
    };

    AdjustedSample out;
    out.adjustment = Adjustment::endogenous;
    std::vector<double> y_tilde(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pt[1] = {zh[i]};
        y_tilde[i] = y[i] - g_hat(pt);
    }
    out.base = Sample(std::vector<double>(x.begin(), x.end()), std::move(y_tilde));
    out.nuisance.g_hat = g_hat;
    out.nuisance.f_hat = f_hat;
    out.nuisance.z_hat = zh;
    out.retained = detail::all_rows(n);
    return out;
}

struct SelectionParams {
    int pscore_degree = 2;
    int L = 4;
};

/// Sample-selection adapter: propensity score by a linear-probability
/// polynomial series in (X, Z), clamped to [1e-3, 1 - 1e-3]; on the D = 1 rows,
/// Y is fitted on r^L(X) and r^L(Phat) jointly and lambda_hat(Phat) removed.
/// lambda_hat is centered to mean zero over the retained rows.
inline AdjustedSample selection_adjust(std::span<const double> x, const Eigen::MatrixXd& z,
                                       std::span<const double> d, std::span<const double> y,
                                       const SelectionParams& params = {}) {
    const std::size_t n = x.size();
    if (y.size() != n || d.size() != n || (z.cols() > 0 && static_cast<std::size_t>(z.rows()) != n))
        detail::fail(ErrorKind::data, "selection model: x, z, d and y lengths differ");
    detail::require(params.L >= 1 && params.pscore_degree >= 1, "selection model: degrees must be >= 1");
    for (double v : d)
        if (v != 0.0 && v != 1.0) detail::fail(ErrorKind::data, "selection indicator must be 0 or 1");

    Eigen::MatrixXd xz(static_cast<Eigen::Index>(n), 1 + z.cols());
    xz.col(0) = to_vector(x);
    if (z.cols() > 0) xz.rightCols(z.cols()) = z;
    const PolyBasis pbasis(xz, params.pscore_degree);
    const auto pfit = least_squares(pbasis.design(xz), to_vector(d), "propensity score");
    std::vector<double> p_hat(n);
    for (std::size_t i = 0; i < n; ++i)
        p_hat[i] = std::clamp(pfit.fitted(static_cast<Eigen::Index>(i)), kPropensityClamp, 1.0 - kPropensityClamp);

    AdjustedSample out;
    out.adjustment = Adjustment::selection;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] == 1.0) out.retained.push_back(i);
    if (out.retained.empty()) detail::fail(ErrorKind::data, "selection model: no observations with d = 1");
    const std::size_t m = out.retained.size();
    std::vector<double> xr(m), yr(m), pr(m);
    for (std::size_t r = 0; r < m; ++r) {
        xr[r] = x[out.retained[r]];
        yr[r] = y[out.retained[r]];
        pr[r] = p_hat[out.retained[r]];
    }

    std::function<double(double)> lambda_hat = [](double) { return 0.0; };
    if (!(detail::range_of(pr) > 1e-8)) {
        out.nuisance.warnings.emplace_back("propensity score is constant on the selected rows; no selection correction");
    } else {
        const auto fb = PolyBasis::univariate(xr, params.L, false);
        const auto lb = PolyBasis::univariate(pr, params.L, false);
        const auto fit = detail::fit_two_blocks(fb.design(xr), lb.design(pr), to_vector(yr), "f", "lambda");
        double mean = 0.0;
        const Eigen::VectorXd lv = lb.design(pr) * fit.beta_g;
        mean = lv.mean();
        lambda_hat = [lb, beta = fit.beta_g, mean](double p) {
            const double pt[1] = {p};
            return lb.row(pt).dot(beta) - mean;
        };
        out.nuisance.f_hat = [fb, beta = fit.beta_f, c = fit.intercept + mean](double v) {
            const double pt[1] = {v};
            return c + fb.row(pt).dot(beta);
        };
    }

    std::vector<double> y_tilde(m);
    for (std::size_t r = 0; r < m; ++r) y_tilde[r] = yr[r] - lambda_hat(pr[r]);
    out.base = Sample(std::move(xr), std::move(y_tilde));
    out.nuisance.lambda_hat = lambda_hat;
    out.nuisance.p_hat = std::move(p_hat);
    return out;
}

} // namespace monotest
