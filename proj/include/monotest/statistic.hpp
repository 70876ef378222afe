#pragma once

// Test functions b(s), variances V(s) and the studentized field
// t(s) = w(s) * b(s) / sqrt(V(s)), T = max_s t(s).
//
// Everything is expressed through the per-scale weights
//     w_i(s) = sum_j sign(X_j - X_i) Q(X_i, X_j, s),
// because b(s) = sum_i Y_i w_i(s) and V(s) = sum_i sigma_i^2 w_i(s)^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"
#include "sample.hpp"
#include "scales.hpp"
#include "sigma.hpp"

namespace monotest {

inline constexpr double kVarianceRelTol = 1e-12;
inline constexpr double kVarianceAbsFloor = 1e-300;

inline double sign(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Nonzero part of w(s): values for sorted positions [lo, hi).
struct ScaleWeights {
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::vector<double> w;
};

namespace detail {

// Kernel values g_p = K((X_p - x)/h) [* Kbar((Z_p - z)/l)] over a window.
inline std::vector<double> window_kernel(const SortedDesign& design, const Scale& s, const Kernel& kernel,
                                         const Kernel* z_kernel, std::size_t lo, std::size_t hi) {
    const auto& xs = design.xs();
    const auto& zs = design.zs();
    std::vector<double> g(hi - lo);
    std::vector<double> zrow(static_cast<std::size_t>(zs.cols()));
    for (std::size_t p = lo; p < hi; ++p) {
        double v = kernel((xs[p] - s.x) / s.h);
        if (v != 0.0 && s.has_z()) {
            for (Eigen::Index c = 0; c < zs.cols(); ++c)
                zrow[static_cast<std::size_t>(c)] = zs(static_cast<Eigen::Index>(p), c);
            v *= z_kernel_factor(zrow, s.z_loc, s.z_bw, *z_kernel);
        }
        g[p - lo] = v;
    }
    return g;
}

} // namespace detail

/// Weights for one scale in sorted order. k = 0 and k = 1 use prefix sums
/// (O(m) in the window size m); other exponents use the direct O(m^2) sum.
inline ScaleWeights compute_scale_weights(const SortedDesign& design, const Scale& s, const Kernel& kernel,
                                          const Kernel* z_kernel = nullptr) {
    const auto [lo, hi] = design.window(s.x, s.h);
    ScaleWeights out{lo, hi, std::vector<double>(hi - lo, 0.0)};
    if (hi <= lo) return out;
    const auto g = detail::window_kernel(design, s, kernel, z_kernel, lo, hi);
    const auto& xs = design.xs();
    const std::size_t m = hi - lo;
    auto& w = out.w;

    if (s.k == 0.0) {
        // w_p = g_p * (sum_{X_q > X_p} g_q - sum_{X_q < X_p} g_q); ties excluded
        std::vector<double> prefix(m + 1, 0.0);
        for (std::size_t q = 0; q < m; ++q) prefix[q + 1] = prefix[q] + g[q];
        const double total = prefix[m];
        std::size_t a = 0;
        while (a < m) {
            std::size_t b = a + 1;
            while (b < m && xs[lo + b] == xs[lo + a]) ++b;
            const double below = prefix[a];
            const double above = total - prefix[b];
            for (std::size_t q = a; q < b; ++q) w[q] = g[q] * (above - below);
            a = b;
        }
    } else if (s.k == 1.0) {
        // sign(X_q - X_p) |X_q - X_p| = X_q - X_p, so w_p = g_p (sum g_q d_q - d_p sum g_q)
        double sg = 0.0, sgd = 0.0;
        for (std::size_t q = 0; q < m; ++q) {
            sg += g[q];
            sgd += g[q] * (xs[lo + q] - s.x);
        }
        for (std::size_t q = 0; q < m; ++q) w[q] = g[q] * (sgd - (xs[lo + q] - s.x) * sg);
    } else {
        for (std::size_t p = 0; p < m; ++p) {
            if (g[p] == 0.0) continue;
            double acc = 0.0;
            for (std::size_t q = 0; q < m; ++q) {
                const double d = xs[lo + q] - xs[lo + p];
                if (d != 0.0) acc += sign(d) * std::pow(std::abs(d), s.k) * g[q];
            }
            w[p] = g[p] * acc;
        }
    }
    return out;
}

/// Direct double loop over all pairs with an arbitrary symmetric Q(i, j).
/// Returns w in original observation order.
template <class PairWeight>
std::vector<double> weights_w_naive(std::span<const double> x, PairWeight&& q) {
    const std::size_t n = x.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += sign(x[j] - x[i]) * q(i, j);
        w[i] = acc;
    }
    return w;
}

inline std::vector<double> weights_w_naive(const Sample& sample, const Scale& s,
                                           const Kernel& kernel = kEpanechnikov) {
    return weights_w_naive(sample.x, [&](std::size_t i, std::size_t j) {
        return kernel_Q(sample.x[i], sample.x[j], s, kernel);
    });
}

/// Fast-path weights for one scale, original observation order.
inline std::vector<double> weights_w(const Sample& sample, const Scale& s, const Kernel& kernel = kEpanechnikov,
                                     const Kernel* z_kernel = nullptr) {
    sample.validate();
    const SortedDesign design(sample);
    const auto row = compute_scale_weights(design, s, kernel, z_kernel);
    std::vector<double> sorted(sample.size(), 0.0);
    std::copy(row.w.begin(), row.w.end(), sorted.begin() + static_cast<std::ptrdiff_t>(row.lo));
    return design.to_original(sorted);
}

/// b(s) = (1/2) sum_{i,j} (Y_i - Y_j) sign(X_j - X_i) Q(X_i, X_j, s) = sum_i Y_i w_i(s).
inline double test_function_b(std::span<const double> y, std::span<const double> w) {
    detail::require(y.size() == w.size(), "test_function_b: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * w[i];
    return acc;
}

inline double test_function_b(const Sample& sample, const Scale& s, const Kernel& kernel = kEpanechnikov) {
    return test_function_b(sample.y, weights_w(sample, s, kernel));
}

/// V(s) = sum_i sigma_i^2 w_i(s)^2
inline double variance_hat(std::span<const double> w, std::span<const double> sigma) {
    detail::require(w.size() == sigma.size(), "variance_hat: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += sigma[i] * sigma[i] * w[i] * w[i];
    return acc;
}

/// Weights of every scale in a set, computed once per design and reused for
/// the observed statistic and all bootstrap draws.
class WeightTable {
public:
    WeightTable() = default;

    WeightTable(const Sample& sample, const ScaleSet& set, unsigned threads = 1)
        : design_((sample.validate(), SortedDesign(sample))) {
        set.validate();
        const bool any_z = std::any_of(set.scales.begin(), set.scales.end(), [](const Scale& s) { return s.has_z(); });
        if (any_z) {
            if (!sample.has_z()) detail::fail(ErrorKind::data, "z-local scales need a sample with z");
            if (set.scales.front().z_loc.size() != static_cast<std::size_t>(sample.z.cols()))
                detail::fail(ErrorKind::data, "z-local scales and sample z disagree on dimension");
        }
        weights_.resize(set.size());
        scale_weights_.resize(set.size());
        const Kernel* zk = set.z_kernel ? &*set.z_kernel : nullptr;
        detail::parallel_for(set.size(), threads, [&](std::size_t s) {
            weights_[s] = compute_scale_weights(design_, set.scales[s], set.kernel, zk);
            scale_weights_[s] = set.weight(s);
        });
    }

    std::size_t size() const noexcept { return weights_.size(); }
    std::size_t n() const noexcept { return design_.size(); }
    const SortedDesign& design() const noexcept { return design_; }
    const ScaleWeights& row(std::size_t s) const { return weights_[s]; }
    double scale_weight(std::size_t s) const { return scale_weights_[s]; }

    /// Full weight vector for scale s in original observation order.
    std::vector<double> weights(std::size_t s) const {
        std::vector<double> sorted(n(), 0.0);
        const auto& r = weights_[s];
        std::copy(r.w.begin(), r.w.end(), sorted.begin() + static_cast<std::ptrdiff_t>(r.lo));
        return design_.to_original(sorted);
    }

    double dot(std::size_t s, std::span<const double> v_sorted) const {
        const auto& r = weights_[s];
        double acc = 0.0;
        for (std::size_t q = 0; q < r.w.size(); ++q) acc += r.w[q] * v_sorted[r.lo + q];
        return acc;
    }

    /// sum_q w_q (v_q - v_first) over the window. Equal to dot() since the
    /// weights sum to zero, but exactly 0 when v is constant on the window.
    double dot_centered(std::size_t s, std::span<const double> v_sorted) const {
        const auto& r = weights_[s];
        if (r.w.empty()) return 0.0;
        const double ref = v_sorted[r.lo];
        double acc = 0.0;
        for (std::size_t q = 0; q < r.w.size(); ++q) acc += r.w[q] * (v_sorted[r.lo + q] - ref);
        return acc;
    }

    double variance(std::size_t s, std::span<const double> sigma_sorted) const {
        const auto& r = weights_[s];
        double acc = 0.0;
        for (std::size_t q = 0; q < r.w.size(); ++q) {
            const double a = sigma_sorted[r.lo + q] * r.w[q];
            acc += a * a;
        }
        return acc;
    }

    /// sum of window sizes, the cost of one pass over all scales
    std::size_t total_support() const noexcept {
        std::size_t acc = 0;
        for (const auto& r : weights_) acc += r.w.size();
        return acc;
    }

private:
    SortedDesign design_;
    std::vector<ScaleWeights> weights_;
    std::vector<double> scale_weights_;
};

struct ScaleStat {
    double b = 0.0;
    double v_hat = 0.0;
    double t = -std::numeric_limits<double>::infinity();
    bool active = false;
};

struct StudentizedField {
    std::vector<ScaleStat> scales;
    std::vector<std::size_t> active_ids;
    double T = -std::numeric_limits<double>::infinity();
    std::size_t argmax = 0;
};

/// Variance threshold below which a scale is inactive.
inline double variance_threshold(std::span<const double> v) {
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, x);
    return std::max(kVarianceRelTol * vmax, kVarianceAbsFloor);
}

inline StudentizedField studentized_field(const WeightTable& table, std::span<const double> y,
                                          std::span<const double> sigma) {
    detail::require(y.size() == table.n(), "studentized_field: y length differs from design");
    detail::require(sigma.size() == table.n(), "studentized_field: sigma length differs from design");
    // b is taken from differences Y_p - Y_lo inside each window: Y -> Y + c is
    // then bit-exact whenever those differences are, and flat windows give 0.
    const auto ys = table.design().to_sorted(y);
    const auto ss = table.design().to_sorted(sigma);

    StudentizedField field;
    field.scales.resize(table.size());
    std::vector<double> v(table.size());
    for (std::size_t s = 0; s < table.size(); ++s) v[s] = table.variance(s, ss);
    const double tau = variance_threshold(v);

    for (std::size_t s = 0; s < table.size(); ++s) {
        auto& st = field.scales[s];
        st.b = table.dot_centered(s, ys);
        st.v_hat = v[s];
        if (v[s] > tau) {
            st.active = true;
            st.t = table.scale_weight(s) * st.b / std::sqrt(v[s]);
            field.active_ids.push_back(s);
            if (st.t > field.T || field.active_ids.size() == 1) {
                field.T = st.t;
                field.argmax = s;
            }
        }
    }
    if (field.active_ids.empty())
        detail::fail(ErrorKind::degenerate_variance, "degenerate variance on every scale");
    return field;
}

inline StudentizedField studentized_field(const Sample& sample, const ScaleSet& set, const SigmaEstimate& sigma) {
    detail::require(sigma.size() == sample.size(), "sigma estimate length differs from sample");
    const WeightTable table(sample, set);
    return studentized_field(table, sample.y, sigma.values);
}

/// Local-in-z field: every scale must carry (z_loc, z_bw) and the set a z kernel.
inline StudentizedField multivariate_field(const Sample& sample, const ScaleSet& set, const SigmaEstimate& sigma) {
    if (!sample.has_z()) detail::fail(ErrorKind::data, "multivariate field needs a sample with z");
    detail::require(set.z_kernel.has_value(), "multivariate field needs a z kernel");
    for (const auto& s : set.scales) {
        detail::require(s.has_z(), "multivariate field: every scale must be z-local");
        if (s.z_loc.size() != static_cast<std::size_t>(sample.z.cols()))
            detail::fail(ErrorKind::data, "z location dimension differs from sample z");
    }
    return studentized_field(sample, set, sigma);
}

/// A_n = max over active s of max_i |w_i(s)| / sqrt(V(s)), with V built from `sigma`.
inline double sensitivity_A(const WeightTable& table, std::span<const double> sigma) {
    detail::require(sigma.size() == table.n(), "sensitivity_A: sigma length differs from design");
    const auto ss = table.design().to_sorted(sigma);
    std::vector<double> v(table.size());
    for (std::size_t s = 0; s < table.size(); ++s) v[s] = table.variance(s, ss);
    const double tau = variance_threshold(v);
    double a = 0.0;
    bool any = false;
    for (std::size_t s = 0; s < table.size(); ++s) {
        if (!(v[s] > tau)) continue;
        any = true;
        const double root = std::sqrt(v[s]);
        for (double w : table.row(s).w) a = std::max(a, std::abs(w) / root);
    }
    if (!any) detail::fail(ErrorKind::degenerate_variance, "degenerate variance on every scale");
    return a;
}

inline double sensitivity_A(const Sample& sample, const ScaleSet& set, std::span<const double> sigma) {
    return sensitivity_A(WeightTable(sample, set), sigma);
}

} // namespace monotest
