#pragma once

// Polynomial series least squares. Regressors are rescaled to [-1, 1] over
// the observed range and expanded in Legendre polynomials (products of them
// for several variables, total degree bounded), then solved by Householder QR.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace monotest {

inline constexpr double kRankTolerance = 1e-10;

/// Tensor Legendre basis of bounded total degree in d variables.
class PolyBasis {
public:
    PolyBasis() = default;

    /// `vars` is n x d; ranges are taken from its columns.
    PolyBasis(const Eigen::MatrixXd& vars, int degree, bool intercept = true) : degree_(degree) {
        detail::require(degree >= 0, "polynomial degree must be nonnegative");
        const auto d = static_cast<std::size_t>(vars.cols());
        detail::require(d > 0, "polynomial basis needs at least one variable");
        lo_.resize(d);
        hi_.resize(d);
        for (std::size_t c = 0; c < d; ++c) {
            lo_[c] = vars.rows() > 0 ? vars.col(c).minCoeff() : 0.0;
            hi_[c] = vars.rows() > 0 ? vars.col(c).maxCoeff() : 0.0;
        }
        std::vector<int> idx(d, 0);
        enumerate_terms(idx, 0, degree, intercept);
        std::stable_sort(terms_.begin(), terms_.end(), [](const auto& a, const auto& b) {
            return total(a) < total(b);
        });
    }

    static PolyBasis univariate(std::span<const double> x, int degree, bool intercept = true) {
        return PolyBasis(column(x), degree, intercept);
    }

    std::size_t size() const noexcept { return terms_.size(); }
    std::size_t dims() const noexcept { return lo_.size(); }
    int degree() const noexcept { return degree_; }

    /// One design row at `point` (length d).
    Eigen::RowVectorXd row(std::span<const double> point) const {
        const std::size_t d = dims();
        std::vector<std::vector<double>> leg(d);
        for (std::size_t c = 0; c < d; ++c) leg[c] = legendre(rescale(c, point[c]), degree_);
        Eigen::RowVectorXd r(static_cast<Eigen::Index>(terms_.size()));
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            double v = 1.0;
            for (std::size_t c = 0; c < d; ++c) v *= leg[c][terms_[t][c]];
            r(static_cast<Eigen::Index>(t)) = v;
        }
        return r;
    }

    Eigen::MatrixXd design(const Eigen::MatrixXd& vars) const {
        detail::require(static_cast<std::size_t>(vars.cols()) == dims(), "design: dimension mismatch");
        Eigen::MatrixXd A(vars.rows(), static_cast<Eigen::Index>(size()));
        std::vector<double> point(dims());
        for (Eigen::Index i = 0; i < vars.rows(); ++i) {
            for (std::size_t c = 0; c < dims(); ++c) point[c] = vars(i, static_cast<Eigen::Index>(c));
            A.row(i) = row(point);
        }
        return A;
    }

    Eigen::MatrixXd design(std::span<const double> x) const { return design(column(x)); }

    static Eigen::MatrixXd column(std::span<const double> x) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(x.size()), 1);
        for (std::size_t i = 0; i < x.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = x[i];
        return m;
    }

private:
    static int total(const std::vector<int>& t) {
        int s = 0;
        for (int v : t) s += v;
        return s;
    }

    void enumerate_terms(std::vector<int>& idx, std::size_t c, int remaining, bool intercept) {
        if (c == idx.size()) {
            if (intercept || total(idx) > 0) terms_.push_back(idx);
            return;
        }
        for (int e = 0; e <= remaining; ++e) {
            idx[c] = e;
            enumerate_terms(idx, c + 1, remaining - e, intercept);
        }
        idx[c] = 0;
    }

    double rescale(std::size_t c, double v) const {
        const double width = hi_[c] - lo_[c];
        return width > 0.0 ? (2.0 * v - (lo_[c] + hi_[c])) / width : 0.0;
    }

    static std::vector<double> legendre(double t, int degree) {
        std::vector<double> p(static_cast<std::size_t>(degree) + 1);
        p[0] = 1.0;
        if (degree >= 1) p[1] = t;
        for (int k = 1; k < degree; ++k)
            p[k + 1] = ((2.0 * k + 1.0) * t * p[k] - k * p[k - 1]) / (k + 1.0);
        return p;
    }

    int degree_ = 0;
    std::vector<double> lo_, hi_;
    std::vector<std::vector<int>> terms_;
};

struct LeastSquaresFit {
    Eigen::VectorXd coef;
    Eigen::VectorXd fitted;
    double condition = 1.0; ///< max|R_ii| / min|R_ii| of the QR factor
};

/// OLS of y on the columns of A. Throws rank_deficient (mentioning `label`)
/// when a diagonal entry of R falls below kRankTolerance relative to the largest.
inline LeastSquaresFit least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                                     const std::string& label = "series regression") {
    if (A.rows() < A.cols())
        detail::fail(ErrorKind::rank_deficient, label + ": " + std::to_string(A.rows()) +
                                                    " observations for " + std::to_string(A.cols()) +
                                                    " parameters");
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::VectorXd diag = qr.matrixQR().diagonal().cwiseAbs();
    const double dmax = diag.size() ? diag.maxCoeff() : 0.0;
    const double dmin = diag.size() ? diag.minCoeff() : 0.0;
    if (diag.size() && !(dmin > kRankTolerance * dmax)) {
        std::ostringstream msg;
        msg << label << ": design is rank deficient (condition estimate "
            << (dmin > 0.0 ? dmax / dmin : INFINITY) << ")";
        detail::fail(ErrorKind::rank_deficient, msg.str());
    }
    LeastSquaresFit fit;
    fit.coef = qr.solve(y);
    fit.fitted = A * fit.coef;
    fit.condition = diag.size() ? dmax / dmin : 1.0;
    return fit;
}

inline Eigen::VectorXd to_vector(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

/// Fitted univariate polynomial series, callable as a predictor.
class PolySeries {
public:
    PolySeries() = default;
    PolySeries(PolyBasis basis, Eigen::VectorXd coef) : basis_(std::move(basis)), coef_(std::move(coef)) {}

    double operator()(double x) const {
        const double pt[1] = {x};
        return basis_.row(pt).dot(coef_);
    }

    const PolyBasis& basis() const noexcept { return basis_; }
    const Eigen::VectorXd& coefficients() const noexcept { return coef_; }

private:
    PolyBasis basis_;
    Eigen::VectorXd coef_;
};

struct SeriesFit {
    PolySeries predictor;
    std::vector<double> fitted;
    double condition = 1.0;
};

inline SeriesFit poly_series_fit(std::span<const double> x, std::span<const double> y, int degree) {
    detail::require(x.size() == y.size(), "poly_series_fit: x and y lengths differ");
    detail::require(degree >= 0, "poly_series_fit: degree must be nonnegative");
    if (x.size() <= static_cast<std::size_t>(degree))
        detail::fail(ErrorKind::rank_deficient, "poly_series_fit: need more observations than the degree");
    auto basis = PolyBasis::univariate(x, degree);
    const auto fit = least_squares(basis.design(x), to_vector(y), "polynomial series fit");
    return {PolySeries(std::move(basis), fit.coef), to_std(fit.fitted), fit.condition};
}

/// Series degree used for the residual-based sigma in the simulation designs:
/// 5 up to n = 100, 6 up to n = 200, 8 beyond.
inline int default_series_degree(std::size_t n) noexcept {
    if (n <= 100) return 5;
    if (n <= 200) return 6;
    return 8;
}

} // namespace monotest
