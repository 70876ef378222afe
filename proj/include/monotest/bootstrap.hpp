#pragma once

// Wild-bootstrap critical values. One multiplier panel {eps_{i,b}} is drawn
// per run and shared by the plug-in, one-step and step-down stages, so the
// selected sets are nested and c^SD <= c^OS <= c^PI holds draw by draw.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sample.hpp"
#include "scales.hpp"
#include "sigma.hpp"
#include "statistic.hpp"

namespace monotest {

enum class CriticalMethod { plug_in, one_step, step_down };

inline std::string_view to_string(CriticalMethod m) noexcept {
    switch (m) {
    case CriticalMethod::plug_in: return "PI";
    case CriticalMethod::one_step: return "OS";
    case CriticalMethod::step_down: return "SD";
    }
    return "?";
}

inline CriticalMethod critical_method_from_string(std::string_view s) {
    std::string u(s);
    for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (u == "PI") return CriticalMethod::plug_in;
    if (u == "OS") return CriticalMethod::one_step;
    if (u == "SD") return CriticalMethod::step_down;
    detail::fail(ErrorKind::invalid_argument, "unknown critical value method '" + std::string(s) + "'");
}

struct BootConfig {
    double alpha = 0.1;
    double gamma = 0.01; ///< truncation level of the selection step
    std::size_t B = 500;
    std::uint64_t seed = 0;
    CriticalMethod method = CriticalMethod::step_down;
    bool argmax_fallback = false; ///< empty selection keeps the argmax scale instead of a random one
    unsigned threads = 1;

    void validate() const {
        detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
        detail::require(gamma > 0.0 && gamma < alpha, "gamma must lie in (0, alpha)");
        detail::require(B >= 1, "need at least one bootstrap draw");
        detail::require(B <= std::numeric_limits<std::uint32_t>::max(), "too many bootstrap draws");
    }
};

/// Standard normal multipliers eps_{i,b}, a pure function of (seed, i, b).
class WildPanel {
public:
    WildPanel(std::size_t n, std::size_t B, std::uint64_t seed, std::vector<double> sigma = {})
        : eps_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(B)), sigma_(std::move(sigma)) {
        detail::require(B >= 1, "need at least one bootstrap draw");
        detail::require(sigma_.empty() || sigma_.size() == n, "sigma length differs from panel size");
        const Philox4x32 gen(seed);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<std::uint32_t>(i);
            for (std::size_t b = 0; b < B; b += 2) {
                const auto block = gen({ii, static_cast<std::uint32_t>(b >> 1), 0u,
                                        static_cast<std::uint32_t>(StreamDomain::multipliers)});
                const auto [e0, e1] = detail::normal_pair(block);
                eps_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = e0;
                if (b + 1 < B) eps_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b + 1)) = e1;
            }
        }
    }

    std::size_t n() const noexcept { return static_cast<std::size_t>(eps_.rows()); }
    std::size_t draws() const noexcept { return static_cast<std::size_t>(eps_.cols()); }
    const Eigen::MatrixXd& epsilon() const noexcept { return eps_; }
    double epsilon(std::size_t i, std::size_t b) const {
        return eps_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
    }

    /// Y*_{i,b} = sigma_i eps_{i,b}
    double ystar(std::size_t i, std::size_t b) const { return sigma_.empty() ? 0.0 : sigma_[i] * epsilon(i, b); }

    Eigen::MatrixXd ystar() const {
        Eigen::MatrixXd out = eps_;
        for (std::size_t i = 0; i < n(); ++i) out.row(static_cast<Eigen::Index>(i)) *= sigma_.empty() ? 0.0 : sigma_[i];
        return out;
    }

private:
    Eigen::MatrixXd eps_; // n x B
    std::vector<double> sigma_;
};

inline WildPanel wild_panel(const SigmaEstimate& sigma, std::size_t n, std::size_t B, std::uint64_t seed) {
    detail::require(sigma.size() == n, "sigma length differs from n");
    return WildPanel(n, B, seed, sigma.values);
}

/// The ceil(level * B)-th smallest value; level = 1 gives the maximum.
inline double quantile_upper(std::span<const double> values, double level) {
    if (values.empty()) detail::fail(ErrorKind::invalid_argument, "quantile of an empty sequence");
    detail::require(level > 0.0 && level <= 1.0, "quantile level must lie in (0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double B = static_cast<double>(sorted.size());
    // the 1e-9 slack keeps e.g. 0.9 * 500 = 450.00000000000006 at 450
    auto rank = static_cast<std::size_t>(std::ceil(level * B - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

/// (1 + #{b : T*_b >= T}) / (B + 1)
inline double p_value(double T, std::span<const double> boot_maxima) {
    std::size_t exceed = 0;
    for (double m : boot_maxima)
        if (m >= T) ++exceed;
    return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(boot_maxima.size()) + 1.0);
}

/// t*_b(s) = scale_weight(s) * sum_i w_i(s) sigma_i eps_{i,b} / sqrt(V(s)) for
/// every active scale and draw. Rows of inactive scales hold -inf.
class BootMatrix {
public:
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    BootMatrix(const WeightTable& table, const StudentizedField& field, const WildPanel& panel,
               std::span<const double> sigma, unsigned threads = 1) {
        detail::require(panel.n() == table.n(), "panel size differs from design");
        detail::require(sigma.size() == table.n(), "sigma length differs from design");
        const std::size_t n = table.n();
        const auto B = static_cast<Eigen::Index>(panel.draws());
        const auto& order = table.design().order();

        // scaled multipliers in sorted order, one column per observation
        Eigen::MatrixXd E(B, static_cast<Eigen::Index>(n));
        for (std::size_t p = 0; p < n; ++p)
            E.col(static_cast<Eigen::Index>(p)) =
                sigma[order[p]] * panel.epsilon().row(static_cast<Eigen::Index>(order[p])).transpose();

        draws_.setConstant(static_cast<Eigen::Index>(table.size()), B, -std::numeric_limits<double>::infinity());
        const auto& active = field.active_ids;
        detail::parallel_for(active.size(), threads, [&](std::size_t a) {
            const std::size_t s = active[a];
            const auto& r = table.row(s);
            const double coef = table.scale_weight(s) / std::sqrt(field.scales[s].v_hat);
            const Eigen::Map<const Eigen::VectorXd> w(r.w.data(), static_cast<Eigen::Index>(r.w.size()));
            const Eigen::VectorXd t = coef * (E.middleCols(static_cast<Eigen::Index>(r.lo), w.size()) * w);
            draws_.row(static_cast<Eigen::Index>(s)) = t.transpose();
        });
    }

    std::size_t scales() const noexcept { return static_cast<std::size_t>(draws_.rows()); }
    std::size_t draws() const noexcept { return static_cast<std::size_t>(draws_.cols()); }
    const Matrix& matrix() const noexcept { return draws_; }

    /// T*_b = max over `subset` of t*_b(s), for every draw b.
    std::vector<double> maxima(std::span<const std::size_t> subset) const {
        std::vector<double> mx(draws(), -std::numeric_limits<double>::infinity());
        for (std::size_t s : subset) {
            const double* row = draws_.row(static_cast<Eigen::Index>(s)).data();
            for (std::size_t b = 0; b < mx.size(); ++b) mx[b] = std::max(mx[b], row[b]);
        }
        return mx;
    }

private:
    Matrix draws_;
};

struct CriticalValue {
    CriticalMethod method = CriticalMethod::plug_in;
    double value = 0.0;
    std::vector<std::size_t> selected; ///< scales entering the simulated maximum
    std::vector<double> maxima;        ///< T*_b over `selected`
    std::size_t iterations = 0;        ///< step-down filtering passes
};

namespace detail {

inline std::vector<std::size_t> fallback_scale(const StudentizedField& field, std::span<const std::size_t> pool,
                                               const BootConfig& cfg, std::uint32_t stage) {
    if (cfg.argmax_fallback) {
        std::size_t best = pool.front();
        for (std::size_t s : pool)
            if (field.scales[s].t > field.scales[best].t) best = s;
        return {best};
    }
    CounterStream stream(cfg.seed, StreamDomain::selection_fallback, stage);
    return {pool[stream.below(pool.size())]};
}

inline std::vector<std::size_t> filter_above(const StudentizedField& field, std::span<const std::size_t> pool,
                                             double threshold) {
    std::vector<std::size_t> out;
    for (std::size_t s : pool)
        if (field.scales[s].t > threshold) out.push_back(s);
    return out;
}

} // namespace detail

inline CriticalValue critical_plugin(const StudentizedField& field, const BootMatrix& boot, const BootConfig& cfg) {
    CriticalValue cv;
    cv.method = CriticalMethod::plug_in;
    cv.selected = field.active_ids;
    cv.maxima = boot.maxima(cv.selected);
    cv.value = quantile_upper(cv.maxima, 1.0 - cfg.alpha);
    return cv;
}

inline CriticalValue critical_onestep(const StudentizedField& field, const BootMatrix& boot, const BootConfig& cfg) {
    const double c_pi_gamma = quantile_upper(boot.maxima(field.active_ids), 1.0 - cfg.gamma);
    CriticalValue cv;
    cv.method = CriticalMethod::one_step;
    cv.selected = detail::filter_above(field, field.active_ids, -2.0 * c_pi_gamma);
    if (cv.selected.empty()) cv.selected = detail::fallback_scale(field, field.active_ids, cfg, 0);
    cv.maxima = boot.maxima(cv.selected);
    cv.value = quantile_upper(cv.maxima, 1.0 - cfg.alpha);
    return cv;
}

inline CriticalValue critical_stepdown(const StudentizedField& field, const BootMatrix& boot, const BootConfig& cfg) {
    const double c_pi_gamma = quantile_upper(boot.maxima(field.active_ids), 1.0 - cfg.gamma);
    std::vector<std::size_t> current = detail::filter_above(field, field.active_ids, -2.0 * c_pi_gamma);
    if (current.empty()) current = detail::fallback_scale(field, field.active_ids, cfg, 0);
    double c_level = quantile_upper(boot.maxima(current), 1.0 - cfg.gamma);

    CriticalValue cv;
    cv.method = CriticalMethod::step_down;
    for (std::uint32_t stage = 1;; ++stage) {
        ++cv.iterations;
        auto next = detail::filter_above(field, current, -c_pi_gamma - c_level);
        if (next.empty()) next = detail::fallback_scale(field, current, cfg, stage);
        if (next == current) break;
        current = std::move(next);
        c_level = quantile_upper(boot.maxima(current), 1.0 - cfg.gamma);
    }
    cv.selected = std::move(current);
    cv.maxima = boot.maxima(cv.selected);
    cv.value = quantile_upper(cv.maxima, 1.0 - cfg.alpha);
    return cv;
}

inline CriticalValue critical_value(const StudentizedField& field, const BootMatrix& boot, const BootConfig& cfg) {
    switch (cfg.method) {
    case CriticalMethod::plug_in: return critical_plugin(field, boot, cfg);
    case CriticalMethod::one_step: return critical_onestep(field, boot, cfg);
    case CriticalMethod::step_down: return critical_stepdown(field, boot, cfg);
    }
    return critical_plugin(field, boot, cfg);
}

struct TestReport {
    double T = 0.0;
    CriticalMethod method = CriticalMethod::step_down;
    double critical_value = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double c_pi = 0.0, c_os = 0.0, c_sd = 0.0;
    std::size_t n = 0;
    std::size_t p_scales = 0;      ///< |S_n|
    std::size_t active_scales = 0; ///< scales with non-degenerate variance
    std::size_t selected_os = 0;
    std::size_t selected_sd = 0;
    std::size_t stepdown_iterations = 0;
    double A_n = 0.0;
    double alpha = 0.1, gamma = 0.01;
    std::size_t B = 0;
    std::uint64_t seed = 0;
};

/// Everything one test run needs, built once: weights, field and bootstrap draws.
struct TestRun {
    WeightTable table;
    StudentizedField field;
    BootMatrix boot;
    CriticalValue pi, os, sd;

    TestRun(const Sample& sample, const ScaleSet& set, const SigmaEstimate& sigma, const BootConfig& cfg)
        : table((cfg.validate(), WeightTable(sample, set, cfg.threads))),
          field(studentized_field(table, sample.y, checked(sigma, sample).values)),
          boot(table, field, wild_panel(sigma, sample.size(), cfg.B, cfg.seed), sigma.values, cfg.threads),
          pi(critical_plugin(field, boot, cfg)),
          os(critical_onestep(field, boot, cfg)),
          sd(critical_stepdown(field, boot, cfg)) {}

    const CriticalValue& chosen(CriticalMethod m) const {
        return m == CriticalMethod::plug_in ? pi : (m == CriticalMethod::one_step ? os : sd);
    }

    TestReport report(const BootConfig& cfg, std::span<const double> sigma) const {
        TestReport r;
        const auto& cv = chosen(cfg.method);
        r.T = field.T;
        r.method = cfg.method;
        r.critical_value = cv.value;
        r.p_value = p_value(field.T, cv.maxima);
        r.reject = field.T > cv.value;
        r.c_pi = pi.value;
        r.c_os = os.value;
        r.c_sd = sd.value;
        r.n = table.n();
        r.p_scales = table.size();
        r.active_scales = field.active_ids.size();
        r.selected_os = os.selected.size();
        r.selected_sd = sd.selected.size();
        r.stepdown_iterations = sd.iterations;
        r.A_n = sensitivity_A(table, sigma);
        r.alpha = cfg.alpha;
        r.gamma = cfg.gamma;
        r.B = cfg.B;
        r.seed = cfg.seed;
        return r;
    }

private:
    static const SigmaEstimate& checked(const SigmaEstimate& sigma, const Sample& sample) {
        if (sigma.size() != sample.size()) detail::fail(ErrorKind::data, "sigma estimate length differs from sample");
        for (double v : sigma.values)
            if (!std::isfinite(v)) detail::fail(ErrorKind::data, "sigma estimate is not finite");
        return sigma;
    }
};

inline TestReport run_monotonicity_test(const Sample& sample, const ScaleSet& set, const SigmaEstimate& sigma,
                                        const BootConfig& cfg) {
    const TestRun run(sample, set, sigma, cfg);
    return run.report(cfg, sigma.values);
}

/// Convenience entry points computing everything from raw inputs.
inline CriticalValue critical_plugin(const Sample& sample, const SigmaEstimate& sigma, const ScaleSet& set,
                                     const BootConfig& cfg) {
    return TestRun(sample, set, sigma, cfg).pi;
}
inline CriticalValue critical_onestep(const Sample& sample, const SigmaEstimate& sigma, const ScaleSet& set,
                                      const BootConfig& cfg) {
    return TestRun(sample, set, sigma, cfg).os;
}
inline CriticalValue critical_stepdown(const Sample& sample, const SigmaEstimate& sigma, const ScaleSet& set,
                                       const BootConfig& cfg) {
    return TestRun(sample, set, sigma, cfg).sd;
}

} // namespace monotest
