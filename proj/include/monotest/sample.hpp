#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace monotest {

/// Paired observations (X_i, Y_i) with optional extra covariates Z (n x d).
struct Sample {
    std::vector<double> x;
    std::vector<double> y;
    Eigen::MatrixXd z; ///< n x d, zero columns when absent

    Sample() = default;
    Sample(std::vector<double> x_, std::vector<double> y_, Eigen::MatrixXd z_ = {})
        : x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {}

    std::size_t size() const noexcept { return x.size(); }
    bool has_z() const noexcept { return z.cols() > 0; }

    void validate() const {
        if (x.size() != y.size())
            detail::fail(ErrorKind::data, "x and y lengths differ (" + std::to_string(x.size()) + " vs " +
                                              std::to_string(y.size()) + ")");
        if (x.size() < 2) detail::fail(ErrorKind::data, "need at least two observations");
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
                detail::fail(ErrorKind::data, "non-finite value at observation " + std::to_string(i));
        if (has_z()) {
            if (static_cast<std::size_t>(z.rows()) != x.size())
                detail::fail(ErrorKind::data, "z must have one row per observation");
            if (!z.allFinite()) detail::fail(ErrorKind::data, "non-finite value in z");
        }
    }

    Sample with_y(std::vector<double> new_y) const { return Sample(x, std::move(new_y), z); }
};

/// Stable ordering of a sample by X (ties keep original index order).
inline std::vector<std::size_t> sort_order(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    return order;
}

/// X-only precomputation shared by every scale and every response vector.
class SortedDesign {
public:
    SortedDesign() = default;

    explicit SortedDesign(const Sample& sample) : order_(sort_order(sample.x)) {
        xs_.reserve(order_.size());
        for (std::size_t i : order_) xs_.push_back(sample.x[i]);
        if (sample.has_z()) {
            zs_.resize(sample.z.rows(), sample.z.cols());
            for (std::size_t p = 0; p < order_.size(); ++p) zs_.row(p) = sample.z.row(order_[p]);
        }
    }

    std::size_t size() const noexcept { return order_.size(); }
    const std::vector<std::size_t>& order() const noexcept { return order_; }
    const std::vector<double>& xs() const noexcept { return xs_; }
    const Eigen::MatrixXd& zs() const noexcept { return zs_; }

    /// Sorted positions [lo, hi) that may lie strictly inside (center - h, center + h).
    /// Slightly over-inclusive; callers evaluate the kernel on every position.
    std::pair<std::size_t, std::size_t> window(double center, double h) const {
        const double pad = h * (1.0 + 1e-12);
        const auto lo = std::lower_bound(xs_.begin(), xs_.end(), center - pad);
        const auto hi = std::upper_bound(lo, xs_.end(), center + pad);
        return {static_cast<std::size_t>(lo - xs_.begin()), static_cast<std::size_t>(hi - xs_.begin())};
    }

    std::vector<double> to_sorted(std::span<const double> original) const {
        std::vector<double> out(order_.size());
        for (std::size_t p = 0; p < order_.size(); ++p) out[p] = original[order_[p]];
        return out;
    }

    std::vector<double> to_original(std::span<const double> sorted) const {
        std::vector<double> out(order_.size());
        for (std::size_t p = 0; p < order_.size(); ++p) out[order_[p]] = sorted[p];
        return out;
    }

private:
    std::vector<std::size_t> order_;
    std::vector<double> xs_;
    Eigen::MatrixXd zs_;
};

} // namespace monotest
