#pragma once

// Kernels, kernel weighting functions Q(x1, x2, s) and constructors for the
// sets of scales the test statistic maximizes over.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace monotest {

inline double epanechnikov(double t) noexcept {
    return std::abs(t) < 1.0 ? 0.75 * (1.0 - t * t) : 0.0;
}

inline double uniform_kernel(double t) noexcept {
    return std::abs(t) < 1.0 ? 1.0 : 0.0;
}

/// A nonnegative kernel supported on [-1, 1].
struct Kernel {
    double (*eval)(double) = &epanechnikov;
    std::string_view name = "epanechnikov";

    double operator()(double t) const noexcept { return eval(t); }
    static constexpr double support_radius = 1.0;

    friend bool operator==(const Kernel& a, const Kernel& b) noexcept { return a.eval == b.eval; }
};

inline constexpr Kernel kEpanechnikov{&epanechnikov, "epanechnikov"};
inline constexpr Kernel kUniform{&uniform_kernel, "uniform"};

inline Kernel kernel_by_name(std::string_view name) {
    if (name == kEpanechnikov.name) return kEpanechnikov;
    if (name == kUniform.name) return kUniform;
    detail::fail(ErrorKind::invalid_argument, "unknown kernel '" + std::string(name) + "'");
}

/// One weighting function: location x, bandwidth h, distance exponent k and,
/// for local-in-z statistics, a z-location with its own bandwidth.
struct Scale {
    double x = 0.0;
    double h = 1.0;
    double k = 0.0;
    std::vector<double> z_loc; ///< empty unless z-local
    double z_bw = 0.0;

    bool has_z() const noexcept { return !z_loc.empty(); }

    void validate() const {
        detail::require(std::isfinite(x), "scale location must be finite");
        detail::require(std::isfinite(h) && h > 0.0, "scale bandwidth must be positive");
        detail::require(std::isfinite(k) && k >= 0.0, "scale exponent k must be nonnegative");
        if (has_z()) {
            detail::require(std::isfinite(z_bw) && z_bw > 0.0, "z bandwidth must be positive");
            for (double v : z_loc) detail::require(std::isfinite(v), "z location must be finite");
        }
    }
};

struct ScaleSet {
    std::vector<Scale> scales;
    Kernel kernel = kEpanechnikov;
    std::optional<Kernel> z_kernel;
    std::vector<double> scale_weights; ///< one per scale; all 1 by default

    std::size_t size() const noexcept { return scales.size(); }

    double weight(std::size_t s) const noexcept {
        return scale_weights.empty() ? 1.0 : scale_weights[s];
    }

    void validate() const {
        detail::require(!scales.empty(), "scale set is empty");
        detail::require(scale_weights.empty() || scale_weights.size() == scales.size(),
                        "scale_weights must have one entry per scale");
        for (double w : scale_weights)
            detail::require(std::isfinite(w) && w > 0.0, "scale weights must be positive and finite");
        for (const auto& s : scales) {
            s.validate();
            if (s.has_z()) {
                detail::require(z_kernel.has_value(), "z-local scales need a z kernel");
                detail::require(s.z_loc.size() == scales.front().z_loc.size(),
                                "z-local scales disagree on dimension");
            }
        }
    }
};

/// |x1 - x2|^k K((x1 - x)/h) K((x2 - x)/h)
inline double kernel_Q(double x1, double x2, const Scale& s, const Kernel& kernel = kEpanechnikov) {
    const double k1 = kernel((x1 - s.x) / s.h);
    if (k1 == 0.0) return 0.0;
    const double k2 = kernel((x2 - s.x) / s.h);
    const double dist = s.k == 0.0 ? 1.0 : std::pow(std::abs(x1 - x2), s.k);
    return dist * (k1 * k2);
}

/// Product kernel over the coordinates of (z - center) / bw.
inline double z_kernel_factor(std::span<const double> z, std::span<const double> center, double bw,
                              const Kernel& kernel) {
    double f = 1.0;
    for (std::size_t c = 0; c < z.size() && f != 0.0; ++c) f *= kernel((z[c] - center[c]) / bw);
    return f;
}

/// Sum of kernel weighting functions anchored at several peaks sharing (h, k).
inline double multi_peak_Q(double x1, double x2, std::span<const double> peaks, double h, double k,
                           const Kernel& kernel = kEpanechnikov) {
    detail::require(!peaks.empty(), "multi_peak_Q needs at least one peak");
    detail::require(h > 0.0, "bandwidth must be positive");
    const double dist = k == 0.0 ? 1.0 : std::pow(std::abs(x1 - x2), k);
    double acc = 0.0;
    for (double p : peaks) acc += kernel((x1 - p) / h) * kernel((x2 - p) / h);
    return dist * acc;
}

struct BasicSetParams {
    double u = 0.5;      ///< geometric bandwidth ratio
    double shrink = 0.4; ///< h_min = shrink * h_max * (log n / n)^(1/3)
    double k = 0.0;
    std::optional<double> h_max; ///< overrides max|Xi - Xj| / 2 when set
};

/// Bandwidth ladder h_max * u^l, l = 0, 1, ..., down to h_min.
inline std::vector<double> bandwidth_ladder(double h_max, std::size_t n, double u, double shrink) {
    const double nd = static_cast<double>(n);
    const double h_min = shrink * h_max * std::cbrt(std::log(nd) / nd);
    std::vector<double> H{h_max};
    for (int l = 1;; ++l) {
        const double h = h_max * std::pow(u, l);
        if (h < h_min) break;
        H.push_back(h);
    }
    return H;
}

/// Every distinct observed location crossed with the bandwidth ladder.
inline ScaleSet build_basic_set(std::span<const double> x, const BasicSetParams& params = {},
                                const Kernel& kernel = kEpanechnikov) {
    detail::require(params.u > 0.0 && params.u < 1.0, "u must lie in (0, 1)");
    detail::require(params.shrink > 0.0, "shrink must be positive");
    if (x.size() < 2) detail::fail(ErrorKind::data, "no positive bandwidth: need at least two observations");

    std::vector<double> locs(x.begin(), x.end());
    std::sort(locs.begin(), locs.end());
    locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
    const double h_max = params.h_max.value_or((locs.back() - locs.front()) / 2.0);
    if (!(h_max > 0.0)) detail::fail(ErrorKind::data, "no positive bandwidth: all X values are equal");

    ScaleSet set;
    set.kernel = kernel;
    for (double h : bandwidth_ladder(h_max, x.size(), params.u, params.shrink))
        for (double loc : locs) set.scales.push_back(Scale{loc, h, params.k, {}, 0.0});
    return set;
}

inline ScaleSet build_custom_set(std::span<const double> locations, std::span<const double> bandwidths,
                                 double k = 0.0, const Kernel& kernel = kEpanechnikov) {
    detail::require(!locations.empty(), "custom scale set needs at least one location");
    detail::require(!bandwidths.empty(), "custom scale set needs at least one bandwidth");
    ScaleSet set;
    set.kernel = kernel;
    for (double h : bandwidths)
        for (double loc : locations) {
            Scale s{loc, h, k, {}, 0.0};
            s.validate();
            set.scales.push_back(std::move(s));
        }
    return set;
}

/// Crosses every x-scale with every z-cell. A z-cell is (z_locs[c], z_bws[c]);
/// a single bandwidth is shared by all cells.
inline ScaleSet build_z_local_set(const ScaleSet& x_scales, const std::vector<std::vector<double>>& z_locs,
                                  std::span<const double> z_bws, const Kernel& z_kernel = kEpanechnikov) {
    detail::require(!x_scales.scales.empty(), "x scale set is empty");
    detail::require(!z_locs.empty(), "need at least one z location");
    detail::require(z_bws.size() == 1 || z_bws.size() == z_locs.size(),
                    "z bandwidths: give one shared value or one per z location");
    const std::size_t d = z_locs.front().size();
    detail::require(d > 0, "z locations must be non-empty vectors");
    for (const auto& z : z_locs)
        if (z.size() != d) detail::fail(ErrorKind::invalid_argument, "z locations disagree on dimension");
    for (double bw : z_bws) detail::require(std::isfinite(bw) && bw > 0.0, "z bandwidth must be positive");

    ScaleSet set;
    set.kernel = x_scales.kernel;
    set.z_kernel = z_kernel;
    for (std::size_t s = 0; s < x_scales.size(); ++s)
        for (std::size_t c = 0; c < z_locs.size(); ++c) {
            Scale scale = x_scales.scales[s];
            scale.z_loc = z_locs[c];
            scale.z_bw = z_bws.size() == 1 ? z_bws[0] : z_bws[c];
            set.scales.push_back(std::move(scale));
            if (!x_scales.scale_weights.empty()) set.scale_weights.push_back(x_scales.scale_weights[s]);
        }
    return set;
}

/// Union of two sets over the same kernel (used for mixed-k sets).
inline ScaleSet merge_sets(const ScaleSet& a, const ScaleSet& b) {
    detail::require(a.kernel == b.kernel, "cannot merge scale sets with different kernels");
    ScaleSet out = a;
    out.scales.insert(out.scales.end(), b.scales.begin(), b.scales.end());
    if (!a.scale_weights.empty() || !b.scale_weights.empty()) {
        out.scale_weights.clear();
        for (std::size_t s = 0; s < a.size(); ++s) out.scale_weights.push_back(a.weight(s));
        for (std::size_t s = 0; s < b.size(); ++s) out.scale_weights.push_back(b.weight(s));
    }
    if (!out.z_kernel) out.z_kernel = b.z_kernel;
    return out;
}

} // namespace monotest
