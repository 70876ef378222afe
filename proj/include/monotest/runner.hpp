#pragma once

// End-to-end pipeline behind the command line: load, adapt, estimate sigma,
// build scales, test, and serialize a versioned JSON report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bootstrap.hpp"
#include "error.hpp"
#include "io.hpp"
#include "models.hpp"
#include "sample.hpp"
#include "scales.hpp"
#include "series.hpp"
#include "sigma.hpp"
#include "statistic.hpp"

namespace monotest {

inline constexpr std::string_view kReportSchema = "monotest/1";

enum class Model { simple, partial_linear, additive, nonparametric_z, endogenous, selection };

inline std::string_view to_string(Model m) noexcept {
    switch (m) {
    case Model::simple: return "simple";
    case Model::partial_linear: return "partial-linear";
    case Model::additive: return "additive";
    case Model::nonparametric_z: return "nonparametric-z";
    case Model::endogenous: return "endogenous";
    case Model::selection: return "selection";
    }
    return "?";
}

inline Model model_from_string(std::string_view s) {
    for (Model m : {Model::simple, Model::partial_linear, Model::additive, Model::nonparametric_z, Model::endogenous,
                    Model::selection})
        if (s == to_string(m)) return m;
    detail::fail(ErrorKind::invalid_argument, "unknown model '" + std::string(s) + "'");
}

struct RunConfig {
    std::string input;
    std::string x_col = "x", y_col = "y";
    std::vector<std::string> z_cols, u_cols;
    std::string d_col;
    Model model = Model::simple;
    SigmaMethod sigma = SigmaMethod::rice;
    std::optional<int> sigma_degree;   ///< residual / two-step-poly degree
    std::optional<double> sigma_bw;    ///< local-Rice bandwidth
    CriticalMethod cv = CriticalMethod::step_down;
    double alpha = 0.1, gamma = 0.01;
    std::size_t B = 500;
    std::uint64_t seed = 0;
    double k = 0.0;
    std::string kernel = "epanechnikov";
    std::vector<double> h_set;         ///< custom bandwidths (locations stay at the observed X)
    std::optional<double> h_max;
    double u = 0.5, shrink = 0.4;
    std::optional<double> z_bw;        ///< nonparametric-z cell bandwidth
    int L = 4, first_stage_degree = 3, pscore_degree = 2;
    bool argmax_fallback = false;
    std::size_t threads = 1;

    BootConfig boot() const {
        BootConfig b;
        b.alpha = alpha;
        b.gamma = gamma;
        b.B = B;
        b.seed = seed;
        b.method = cv;
        b.argmax_fallback = argmax_fallback;
        b.threads = threads;
        return b;
    }
};

/// Inputs to the test after any model adjustment.
struct Prepared {
    Sample sample;
    ScaleSet set;
    SigmaEstimate sigma;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<double> quartiles(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> q;
    for (double p : {0.25, 0.5, 0.75}) {
        const double pos = p * static_cast<double>(v.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        q.push_back(i + 1 < v.size() ? v[i] + frac * (v[i + 1] - v[i]) : v[i]);
    }
    q.erase(std::unique(q.begin(), q.end()), q.end());
    return q;
}

// Product grid of per-coordinate quartiles.
inline std::vector<std::vector<double>> quartile_grid(const Eigen::MatrixXd& z) {
    std::vector<std::vector<double>> grid{{}};
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const Eigen::VectorXd col = z.col(c);
        const auto q = quartiles(std::vector<double>(col.data(), col.data() + col.size()));
        std::vector<std::vector<double>> next;
        for (const auto& g : grid)
            for (double v : q) {
                auto e = g;
                e.push_back(v);
                next.push_back(std::move(e));
            }
        grid = std::move(next);
    }
    return grid;
}

inline SigmaEstimate estimate_sigma(const Sample& s, const RunConfig& cfg) {
    switch (cfg.sigma) {
    case SigmaMethod::rice: return rice_global(s);
    case SigmaMethod::local_rice: return rice_local(s, cfg.sigma_bw.value_or(default_local_rice_bandwidth(s)));
    case SigmaMethod::residual:
        return residual_sigma_poly(s, cfg.sigma_degree.value_or(default_series_degree(s.size())));
    case SigmaMethod::two_step_poly: return two_step_poly_variance(s, cfg.sigma_degree.value_or(2));
    }
    return rice_global(s);
}

inline Eigen::MatrixXd matrix_of(const CsvColumns& t, std::size_t first, std::size_t count) {
    return count ? columns_matrix(t, first, count) : Eigen::MatrixXd();
}

} // namespace detail

inline Prepared prepare(const RunConfig& cfg) {
    std::vector<std::string> cols{cfg.x_col, cfg.y_col};
    const bool needs_z = cfg.model == Model::partial_linear || cfg.model == Model::additive ||
                         cfg.model == Model::nonparametric_z;
    if (needs_z && cfg.z_cols.empty())
        detail::fail(ErrorKind::data, "model '" + std::string(to_string(cfg.model)) + "' needs --z-cols");
    if (cfg.model == Model::endogenous && cfg.u_cols.empty())
        detail::fail(ErrorKind::data, "model 'endogenous' needs --u-cols");
    if (cfg.model == Model::selection && cfg.d_col.empty())
        detail::fail(ErrorKind::data, "model 'selection' needs --d-col");
    const std::size_t z0 = cols.size();
    cols.insert(cols.end(), cfg.z_cols.begin(), cfg.z_cols.end());
    const std::size_t u0 = cols.size();
    cols.insert(cols.end(), cfg.u_cols.begin(), cfg.u_cols.end());
    const std::size_t d0 = cols.size();
    if (!cfg.d_col.empty()) cols.push_back(cfg.d_col);
    const auto t = read_csv(cfg.input, cols);

    Prepared out;
    const Eigen::MatrixXd z = detail::matrix_of(t, z0, cfg.z_cols.size());
    const Eigen::MatrixXd u = detail::matrix_of(t, u0, cfg.u_cols.size());
    const Sample raw(t[0], t[1], z);

    switch (cfg.model) {
    case Model::simple: out.sample = Sample(t[0], t[1]); break;
    case Model::partial_linear: out.sample = partial_linear_adjust(raw, cfg.first_stage_degree).base; break;
    case Model::additive: out.sample = additive_adjust(raw, additive_series_g(raw, cfg.L)).base; break;
    case Model::nonparametric_z: out.sample = raw; break;
    case Model::endogenous:
        out.sample = endogenous_adjust(t[0], u, t[1], {cfg.first_stage_degree, cfg.L}).base;
        break;
    case Model::selection: {
        auto adj = selection_adjust(t[0], z, t[d0], t[1], {cfg.pscore_degree, cfg.L});
        out.warnings = adj.nuisance.warnings;
        out.sample = std::move(adj.base);
        break;
    }
    }
    if (cfg.model != Model::nonparametric_z) out.sample.z = Eigen::MatrixXd();
    out.sample.validate();

    const Kernel kernel = kernel_by_name(cfg.kernel);
    if (cfg.h_set.empty()) {
        BasicSetParams p;
        p.u = cfg.u;
        p.shrink = cfg.shrink;
        p.k = cfg.k;
        p.h_max = cfg.h_max;
        out.set = build_basic_set(out.sample.x, p, kernel);
    } else {
        std::vector<double> locs = out.sample.x;
        std::sort(locs.begin(), locs.end());
        locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
        out.set = build_custom_set(locs, cfg.h_set, cfg.k, kernel);
    }
    if (cfg.model == Model::nonparametric_z) {
        double bw = 0.0;
        if (cfg.z_bw) {
            bw = *cfg.z_bw;
        } else {
            for (Eigen::Index c = 0; c < z.cols(); ++c) bw = std::max(bw, z.col(c).maxCoeff() - z.col(c).minCoeff());
            bw /= 2.0;
        }
        if (!(bw > 0.0)) detail::fail(ErrorKind::data, "z columns are constant; no positive z bandwidth");
        const double bws[1] = {bw};
        out.set = build_z_local_set(out.set, detail::quartile_grid(z), bws, kernel);
    }
    out.sigma = detail::estimate_sigma(out.sample, cfg);
    return out;
}

namespace detail {

inline std::string json_number(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

// Ordered object writer; numbers keep 17 significant digits.
class JsonObject {
public:
    JsonObject& num(std::string_view key, double v) { return raw(key, json_number(v)); }
    JsonObject& integer(std::string_view key, std::uint64_t v) { return raw(key, std::to_string(v)); }
    JsonObject& str(std::string_view key, std::string_view v) { return raw(key, json_string(v)); }
    JsonObject& raw(std::string_view key, const std::string& v) {
        body_ << (first_ ? "" : ",\n") << "  " << json_string(key) << ": " << v;
        first_ = false;
        return *this;
    }
    std::string str() const { return "{\n" + body_.str() + "\n}\n"; }

private:
    std::ostringstream body_;
    bool first_ = true;
};

inline std::string json_array(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + json_string(items[i]);
    return out + "]";
}

} // namespace detail

inline std::string report_json(const TestReport& r, const RunConfig& cfg, const std::vector<std::string>& warnings) {
    detail::JsonObject o;
    o.str("schema", kReportSchema)
        .num("T", r.T)
        .str("method", to_string(r.method))
        .num("critical_value", r.critical_value)
        .num("p_value", r.p_value)
        .num("alpha", r.alpha)
        .num("gamma", r.gamma)
        .integer("B", r.B)
        .integer("seed", r.seed)
        .integer("n", r.n)
        .integer("p_scales", r.p_scales)
        .integer("selected_os", r.selected_os)
        .integer("selected_sd", r.selected_sd)
        .integer("stepdown_iterations", r.stepdown_iterations)
        .num("A_n", r.A_n)
        .str("sigma_method", to_string(cfg.sigma))
        .str("model", to_string(cfg.model))
        .raw("warnings", detail::json_array(warnings));
    return o.str();
}

inline std::string error_json(const Error& e) {
    std::string kind;
    switch (e.kind()) {
    case ErrorKind::invalid_argument: kind = "invalid_argument"; break;
    case ErrorKind::data: kind = "data"; break;
    case ErrorKind::degenerate_variance: kind = "degenerate_variance"; break;
    case ErrorKind::rank_deficient: kind = "rank_deficient"; break;
    }
    detail::JsonObject o;
    o.str("schema", kReportSchema).str("error", kind).str("message", e.what());
    return o.str();
}

/// 0 on success, 3 for degenerate variance, 2 for every other input problem.
inline int exit_code(const Error& e) noexcept { return e.kind() == ErrorKind::degenerate_variance ? 3 : 2; }

struct RunOutcome {
    int code = 0;
    std::string json;
};

inline RunOutcome run_test(const RunConfig& cfg) {
    try {
        const auto prep = prepare(cfg);
        const auto report = run_monotonicity_test(prep.sample, prep.set, prep.sigma, cfg.boot());
        return {0, report_json(report, cfg, prep.warnings)};
    } catch (const Error& e) {
        return {exit_code(e), error_json(e)};
    }
}

/// Scale set and A_n; Y enters only through sigma estimation.
inline RunOutcome run_diag(const RunConfig& cfg) {
    try {
        const auto prep = prepare(cfg);
        const WeightTable table(prep.sample, prep.set, cfg.threads);
        const double a = sensitivity_A(table, prep.sigma.values);
        std::string scales = "[";
        for (std::size_t s = 0; s < prep.set.size(); ++s) {
            const auto& sc = prep.set.scales[s];
            scales += (s ? ",\n    " : "\n    ");
            scales += "{\"x\": " + detail::json_number(sc.x) + ", \"h\": " + detail::json_number(sc.h);
            if (sc.has_z()) {
                scales += ", \"z\": [";
                for (std::size_t c = 0; c < sc.z_loc.size(); ++c)
                    scales += (c ? ", " : "") + detail::json_number(sc.z_loc[c]);
                scales += "], \"z_bw\": " + detail::json_number(sc.z_bw);
            }
            scales += "}";
        }
        scales += prep.set.size() ? "\n  ]" : "]";
        detail::JsonObject o;
        o.str("schema", kReportSchema)
            .integer("n", prep.sample.size())
            .integer("p_scales", prep.set.size())
            .num("A_n", a)
            .str("sigma_method", to_string(cfg.sigma))
            .str("model", to_string(cfg.model))
            .str("kernel", prep.set.kernel.name)
            .num("k", cfg.k)
            .raw("warnings", detail::json_array(prep.warnings))
            .raw("scales", scales);
        return {0, o.str()};
    } catch (const Error& e) {
        return {exit_code(e), error_json(e)};
    }
}

} // namespace monotest
