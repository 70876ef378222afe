// monotest: command-line front end (test, mc, diag).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "monotest.hpp"

namespace {

using namespace monotest;

struct CliOptions {
    RunConfig run;
    std::string sigma = "rice";
    std::string cv = "sd";
    std::string model = "simple";
    std::string out;
    std::optional<int> sigma_degree;
    std::optional<double> sigma_bw, h_max, z_bw;
};

void add_common(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--alpha", o.run.alpha, "significance level")->capture_default_str();
    cmd->add_option("--gamma", o.run.gamma, "selection level for OS/SD")->capture_default_str();
    cmd->add_option("--boot", o.run.B, "bootstrap draws")->capture_default_str();
    cmd->add_option("--seed", o.run.seed, "master seed")->capture_default_str();
    cmd->add_option("--k", o.run.k, "exponent of |x1 - x2| in the weighting function")->capture_default_str();
    cmd->add_option("--cv", o.cv, "critical value: pi, os or sd")->capture_default_str();
    cmd->add_option("--threads", o.run.threads, "worker threads")->capture_default_str();
    cmd->add_option("--out", o.out, "output file (default stdout)");
}

void add_data(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("input", o.run.input, "CSV file with a header row")->required();
    cmd->add_option("--x-col", o.run.x_col, "regressor column")->capture_default_str();
    cmd->add_option("--y-col", o.run.y_col, "response column")->capture_default_str();
    cmd->add_option("--z-cols", o.run.z_cols, "control / covariate columns")->delimiter(',');
    cmd->add_option("--u-cols", o.run.u_cols, "instrument columns (endogenous model)")->delimiter(',');
    cmd->add_option("--d-col", o.run.d_col, "selection indicator column (selection model)");
    cmd->add_option("--model", o.model,
                    "simple, partial-linear, additive, nonparametric-z, endogenous or selection")
        ->capture_default_str();
    cmd->add_option("--sigma", o.sigma, "rice, local-rice, residual or two-step-poly")->capture_default_str();
    cmd->add_option("--sigma-degree", o.sigma_degree, "polynomial degree for residual / two-step-poly sigma");
    cmd->add_option("--sigma-bw", o.sigma_bw, "local-Rice bandwidth");
    cmd->add_option("--h-set", o.run.h_set, "custom bandwidths, comma separated")->delimiter(',');
    cmd->add_option("--h-max", o.h_max, "largest bandwidth of the basic set (default half the range of x)");
    cmd->add_option("--u", o.run.u, "bandwidth ratio of the basic set")->capture_default_str();
    cmd->add_option("--kernel", o.run.kernel, "epanechnikov or uniform")->capture_default_str();
    cmd->add_option("--z-bw", o.z_bw, "z bandwidth for the nonparametric-z model (default half the largest z range)");
    cmd->add_option("--series-degree", o.run.L, "series degree for adapter second stages")->capture_default_str();
    cmd->add_option("--first-stage-degree", o.run.first_stage_degree, "first-stage polynomial degree")
        ->capture_default_str();
    cmd->add_option("--pscore-degree", o.run.pscore_degree, "propensity score polynomial degree")
        ->capture_default_str();
    cmd->add_flag("--argmax-fallback", o.run.argmax_fallback, "use the argmax scale when a selected set is empty");
}

void finish_config(CliOptions& o) {
    o.run.sigma = sigma_method_from_string(o.sigma);
    o.run.cv = critical_method_from_string(o.cv);
    o.run.model = model_from_string(o.model);
    o.run.sigma_degree = o.sigma_degree;
    o.run.sigma_bw = o.sigma_bw;
    o.run.h_max = o.h_max;
    o.run.z_bw = o.z_bw;
}

int emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        std::cerr << "cannot write " << path << '\n';
        return 2;
    }
    f << text;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monotonicity test for nonparametric regression"};
    app.require_subcommand(1);

    CliOptions test_opt, diag_opt;
    auto* test = app.add_subcommand("test", "run the test on a CSV file and print a JSON report");
    add_common(test, test_opt);
    add_data(test, test_opt);

    auto* diag = app.add_subcommand("diag", "list the scale set and A_n for a CSV file");
    add_common(diag, diag_opt);
    add_data(diag, diag_opt);

    CliOptions mc_opt;
    mc_opt.run.B = 500;
    std::vector<int> cases{1, 2, 3, 4};
    std::vector<std::size_t> sizes{100, 200, 500};
    std::vector<std::string> noises{"normal"};
    std::vector<std::string> mc_sigmas{"CS", "IS"};
    std::vector<std::string> mc_cvs{"pi", "os", "sd"};
    std::size_t reps = 1000;
    std::string table_path;
    double mc_hmax = 1.0;
    auto* mc = app.add_subcommand("mc", "Monte Carlo rejection frequencies; CSV to --out, table to stdout");
    add_common(mc, mc_opt);
    mc->add_option("--cases", cases, "design cases (1-4)")->delimiter(',')->capture_default_str();
    mc->add_option("--n", sizes, "sample sizes")->delimiter(',')->capture_default_str();
    mc->add_option("--noise", noises, "normal and/or uniform")->delimiter(',')->capture_default_str();
    mc->add_option("--mc-sigma", mc_sigmas, "CS (Rice) and/or IS (series residuals)")->delimiter(',')
        ->capture_default_str();
    mc->add_option("--methods", mc_cvs, "critical values among pi, os, sd")->delimiter(',')->capture_default_str();
    mc->add_option("--reps", reps, "replications per cell")->capture_default_str();
    mc->add_option("--h-max", mc_hmax, "largest bandwidth")->capture_default_str();
    mc->add_option("--table", table_path, "write the text table here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (test->parsed() || diag->parsed()) {
            CliOptions& o = test->parsed() ? test_opt : diag_opt;
            finish_config(o);
            const auto outcome = test->parsed() ? run_test(o.run) : run_diag(o.run);
            if (outcome.code != 0) {
                std::cerr << outcome.json;
                emit(outcome.json, o.out);
                return outcome.code;
            }
            return emit(outcome.json, o.out);
        }

        McConfig cfg;
        for (const auto& noise : noises)
            for (int c : cases)
                for (std::size_t n : sizes) cfg.designs.push_back(McDesign::make(c, n, noise_from_string(noise)));
        cfg.sigmas.clear();
        for (const auto& s : mc_sigmas) cfg.sigmas.push_back(mc_sigma_from_string(s));
        cfg.methods.clear();
        for (const auto& m : mc_cvs) cfg.methods.push_back(critical_method_from_string(m));
        cfg.reps = reps;
        cfg.B = mc_opt.run.B;
        cfg.alpha = mc_opt.run.alpha;
        cfg.gamma = mc_opt.run.gamma;
        cfg.seed = mc_opt.run.seed;
        cfg.threads = mc_opt.run.threads;
        cfg.scales.h_max = mc_hmax;
        cfg.scales.k = mc_opt.run.k;
        const auto result = run_mc(cfg);

        std::ostringstream csv, table;
        write_mc_csv(csv, result);
        write_mc_table(table, result);
        if (!mc_opt.out.empty() && emit(csv.str(), mc_opt.out) != 0) return 2;
        if (!table_path.empty()) return emit(table.str(), table_path);
        std::cout << (mc_opt.out.empty() ? csv.str() + "\n" : std::string()) << table.str();
        return 0;
    } catch (const Error& e) {
        std::cerr << error_json(e);
        return exit_code(e);
    }
}
