#pragma once

// Monte Carlo harness: f(x) = c1 x - c2 phi(c3 x), X ~ U[-1, 1], normal or
// uniform noise, rejection frequencies for each (sigma, critical value) pair.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "bootstrap.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sample.hpp"
#include "scales.hpp"
#include "series.hpp"
#include "sigma.hpp"

namespace monotest {

enum class Noise { normal, uniform };

inline std::string_view to_string(Noise n) noexcept { return n == Noise::normal ? "normal" : "uniform"; }

inline Noise noise_from_string(std::string_view s) {
    if (s == "normal") return Noise::normal;
    if (s == "uniform") return Noise::uniform;
    detail::fail(ErrorKind::invalid_argument, "unknown noise '" + std::string(s) + "'");
}

inline double normal_density(double t) noexcept {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

struct McDesign {
    int case_id = 1;
    std::size_t n = 100;
    Noise noise = Noise::normal;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, sigma = 0.05;

    static McDesign make(int case_id, std::size_t n, Noise noise = Noise::normal) {
        McDesign d;
        d.case_id = case_id;
        d.n = n;
        d.noise = noise;
        switch (case_id) {
        case 1: d.c1 = 0.0, d.c2 = 0.0, d.c3 = 0.0, d.sigma = 0.05; break;
        case 2: d.c1 = 1.0, d.c2 = 4.0, d.c3 = 1.0, d.sigma = 0.05; break;
        case 3: d.c1 = 1.0, d.c2 = 1.2, d.c3 = 5.0, d.sigma = 0.05; break;
        case 4: d.c1 = 1.0, d.c2 = 1.5, d.c3 = 4.0, d.sigma = 0.1; break;
        default: detail::fail(ErrorKind::invalid_argument, "case must be 1, 2, 3 or 4");
        }
        return d;
    }

    double f(double x) const noexcept { return c1 * x - c2 * normal_density(c3 * x); }

    void validate() const {
        detail::require(n >= 2, "design needs n >= 2");
        detail::require(std::isfinite(sigma) && sigma >= 0.0, "design noise level must be nonnegative");
    }
};

inline Sample gen_design(const McDesign& design, std::uint64_t seed) {
    design.validate();
    CounterStream x_stream(seed, StreamDomain::simulation, 0);
    CounterStream e_stream(seed, StreamDomain::simulation, 1);
    std::vector<double> x(design.n), y(design.n);
    const double half_width = design.sigma * std::sqrt(3.0);
    for (std::size_t i = 0; i < design.n; ++i) {
        x[i] = -1.0 + 2.0 * x_stream.uniform();
        const double eps = design.noise == Noise::normal ? design.sigma * e_stream.normal()
                                                         : half_width * (2.0 * e_stream.uniform() - 1.0);
        y[i] = design.f(x[i]) + eps;
    }
    return Sample(std::move(x), std::move(y));
}

/// CS: Rice's estimator (homoskedastic). IS: polynomial series residuals.
enum class McSigma { CS, IS };

inline std::string_view to_string(McSigma s) noexcept { return s == McSigma::CS ? "CS" : "IS"; }

inline McSigma mc_sigma_from_string(std::string_view s) {
    if (s == "CS" || s == "cs") return McSigma::CS;
    if (s == "IS" || s == "is") return McSigma::IS;
    detail::fail(ErrorKind::invalid_argument, "unknown simulation sigma '" + std::string(s) + "' (CS or IS)");
}

inline SigmaEstimate mc_sigma(const Sample& sample, McSigma s) {
    return s == McSigma::CS ? rice_global(sample) : residual_sigma_poly(sample, default_series_degree(sample.size()));
}

struct McConfig {
    std::vector<McDesign> designs;
    std::vector<McSigma> sigmas{McSigma::CS};
    std::vector<CriticalMethod> methods{CriticalMethod::plug_in, CriticalMethod::one_step, CriticalMethod::step_down};
    std::size_t reps = 1000;
    std::size_t B = 500;
    double alpha = 0.1;
    double gamma = 0.01;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    BasicSetParams scales{0.5, 0.4, 0.0, 1.0};
    Kernel kernel = kEpanechnikov;

    void validate() const {
        detail::require(reps >= 1, "reps must be at least 1");
        detail::require(!designs.empty() && !sigmas.empty() && !methods.empty(), "empty simulation grid");
        BootConfig{alpha, gamma, B, seed}.validate();
        for (const auto& d : designs) d.validate();
    }
};

struct McCell {
    McDesign design;
    McSigma sigma = McSigma::CS;
    CriticalMethod method = CriticalMethod::plug_in;
    double proportion = 0.0;
    std::size_t rejections = 0;
    std::size_t reps = 0;     ///< successful replications
    std::size_t failures = 0; ///< replications whose pipeline threw
    std::size_t B = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;

    std::string label() const { return std::string(to_string(sigma)) + "-" + std::string(to_string(method)); }
};

struct McResult {
    std::vector<McCell> cells;
    /// Per design and sigma: rejection indicator per rep and method (methods in config order).
    std::vector<std::vector<std::vector<char>>> decisions;
};

inline std::uint64_t design_key(const McDesign& d) noexcept {
    return static_cast<std::uint64_t>(d.case_id) | (static_cast<std::uint64_t>(d.noise) << 8) |
           (static_cast<std::uint64_t>(d.n) << 16);
}

/// Data depend on (seed, design, rep) only, so the CS and IS columns see the
/// same datasets and PI/OS/SD share one bootstrap panel per rep.
inline std::uint64_t rep_seed(std::uint64_t master, const McDesign& d, std::size_t rep) noexcept {
    return combine_seed(master, design_key(d), rep);
}

inline McResult run_mc(const McConfig& cfg) {
    cfg.validate();
    McResult result;
    const std::size_t m = cfg.methods.size();
    for (const auto& design : cfg.designs) {
        for (McSigma sig : cfg.sigmas) {
            const auto t0 = std::chrono::steady_clock::now();
            // 0/1 = no reject/reject, 2 = failed
            std::vector<std::vector<char>> outcome(cfg.reps, std::vector<char>(m, 0));
            std::vector<std::string> errors(cfg.reps);
            detail::parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
                const std::uint64_t s = rep_seed(cfg.seed, design, r);
                try {
                    const Sample sample = gen_design(design, s);
                    const auto set = build_basic_set(sample.x, cfg.scales, cfg.kernel);
                    const auto sigma = mc_sigma(sample, sig);
                    BootConfig bc{cfg.alpha, cfg.gamma, cfg.B, s};
                    const TestRun run(sample, set, sigma, bc);
                    for (std::size_t j = 0; j < m; ++j)
                        outcome[r][j] = run.field.T > run.chosen(cfg.methods[j]).value ? 1 : 0;
                } catch (const Error& e) {
                    for (std::size_t j = 0; j < m; ++j) outcome[r][j] = 2;
                    errors[r] = e.what();
                }
            });
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

            std::size_t failures = 0;
            std::string first_error;
            for (std::size_t r = 0; r < cfg.reps; ++r)
                if (outcome[r][0] == 2) {
                    if (failures++ == 0) first_error = errors[r];
                }
            if (failures * 100 > cfg.reps)
                detail::fail(ErrorKind::data, "simulation case " + std::to_string(design.case_id) + ", n = " +
                                                  std::to_string(design.n) + ": " + std::to_string(failures) +
                                                  " of " + std::to_string(cfg.reps) +
                                                  " replications failed (first: " + first_error + ")");
            for (std::size_t j = 0; j < m; ++j) {
                McCell cell;
                cell.design = design;
                cell.sigma = sig;
                cell.method = cfg.methods[j];
                for (std::size_t r = 0; r < cfg.reps; ++r)
                    if (outcome[r][j] == 1) ++cell.rejections;
                cell.failures = failures;
                cell.reps = cfg.reps - failures;
                cell.proportion = cell.reps ? static_cast<double>(cell.rejections) / static_cast<double>(cell.reps) : 0.0;
                cell.B = cfg.B;
                cell.seed = cfg.seed;
                cell.wall_seconds = secs;
                result.cells.push_back(cell);
            }
            result.decisions.push_back(std::move(outcome));
        }
    }
    return result;
}

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_mc_csv(std::ostream& os, const McResult& res) {
    os << "noise,case,n,method,proportion,reps,B,seed\n";
    for (const auto& c : res.cells)
        os << to_string(c.design.noise) << ',' << c.design.case_id << ',' << c.design.n << ',' << c.label() << ','
           << format_g17(c.proportion) << ',' << c.reps << ',' << c.B << ',' << c.seed << '\n';
}

/// One row per (noise, case, n), one column per sigma/critical-value pair.
inline void write_mc_table(std::ostream& os, const McResult& res) {
    std::vector<std::string> columns;
    std::map<std::string, std::size_t> col_index;
    struct Row {
        std::string noise;
        int case_id;
        std::size_t n;
        std::vector<std::string> values;
    };
    std::vector<Row> rows;
    std::map<std::tuple<std::string, int, std::size_t>, std::size_t> row_index;
    for (const auto& c : res.cells) {
        const auto label = c.label();
        if (!col_index.count(label)) {
            col_index[label] = columns.size();
            columns.push_back(label);
        }
    }
    for (const auto& c : res.cells) {
        const auto key = std::make_tuple(std::string(to_string(c.design.noise)), c.design.case_id, c.design.n);
        auto it = row_index.find(key);
        if (it == row_index.end()) {
            it = row_index.emplace(key, rows.size()).first;
            rows.push_back({std::get<0>(key), c.design.case_id, c.design.n, std::vector<std::string>(columns.size(), "")});
        }
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.3f", c.proportion);
        rows[it->second].values[col_index[c.label()]] = buf;
    }

    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8s %4s %6s", "noise", "case", "n");
    os << buf;
    for (const auto& c : columns) {
        std::snprintf(buf, sizeof buf, " %7s", c.c_str());
        os << buf;
    }
    os << '\n';
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-8s %4d %6zu", r.noise.c_str(), r.case_id, r.n);
        os << buf;
        for (const auto& v : r.values) {
            std::snprintf(buf, sizeof buf, " %7s", v.c_str());
            os << buf;
        }
        os << '\n';
    }
    if (!res.cells.empty())
        os << "reps " << res.cells.front().reps << ", B " << res.cells.front().B << ", seed " << res.cells.front().seed
           << '\n';
}

} // namespace monotest
