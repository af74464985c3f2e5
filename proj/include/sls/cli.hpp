#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "sls/bench.hpp"
#include "sls/config.hpp"
#include "sls/dataset_io.hpp"
#include "sls/estimator.hpp"
#include "sls/plot.hpp"
#include "sls/report.hpp"
#include "sls/synth.hpp"
#include "sls/verify.hpp"

namespace sls {

enum ExitCode : int { exit_ok = 0, exit_estimation_failure = 1, exit_config_error = 2, exit_io_error = 3 };

/// Command-line overrides applied on top of a parsed config.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    bool full_grid = false;
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void apply_overrides(RunConfig& cfg, const Overrides& ov) {
    if (ov.threads) {
        if (*ov.threads < 1) throw ConfigError("--threads", "must be >= 1");
        cfg.threads = *ov.threads;
    }
    std::visit(
        [&](auto& cmd) {
            using C = std::decay_t<decltype(cmd)>;
            if constexpr (std::is_same_v<C, GenerateCommand>) {
                if (ov.seed) cmd.synth.master_seed = *ov.seed;
                if (ov.out) cmd.output = *ov.out;
            } else if constexpr (std::is_same_v<C, EstimateCommand>) {
                if (ov.seed) cmd.options.seed = *ov.seed;
                if (ov.out) cmd.report = *ov.out;
            } else if constexpr (std::is_same_v<C, ExperimentCommand>) {
                if (ov.seed) cmd.plan.master_seed = *ov.seed;
                if (ov.out) cmd.csv = *ov.out;
                if (ov.full_grid) cmd.full_grid = true;
            } else {
                if (ov.seed) cmd.seed = *ov.seed;
                if (ov.out) cmd.report = *ov.out;
            }
        },
        cfg.payload);
    if (ov.out && ov.out->empty()) throw ConfigError("--out", "path must be non-empty");
}

/// The full-size grid: n from 100k to 500k, or |S|/n from 0.01 to 1 at n = 500k.
inline void use_full_grid(ExperimentPlan& plan) {
    if (std::holds_alternative<SampleSizeSweep>(plan.sweep))
        plan.sweep = SampleSizeSweep{{100000, 200000, 300000, 400000, 500000}};
    else
        plan.sweep = SubsampleFractionSweep{{0.01, 0.05, 0.1, 0.2, 0.5, 1.0}, 500000};
}

namespace detail {

inline int run_generate(const GenerateCommand& cmd, const RunConfig& cfg, std::ostream& log) {
    Generated gen = generate(cmd.synth);
    save_dataset(cmd.output, gen.data, gen.spec.beta_star);
    Report rep;
    rep.add_manifest("generate", cfg.config_hash, cmd.synth.master_seed);
    rep.add("output", cmd.output);
    rep.add("n", static_cast<long>(gen.data.n()));
    rep.add("p", static_cast<long>(gen.data.p()));
    rep.add("k", static_cast<long>(gen.data.k()));
    rep.write(log);
    return exit_ok;
}

inline int run_estimate(const EstimateCommand& cmd, const RunConfig& cfg, std::ostream& log) {
    StoredDataset stored = load_dataset(cmd.dataset);
    if (static_cast<Eigen::Index>(cmd.links.size()) != stored.data.k())
        throw ConfigError("estimate.links", "dataset has k = " + std::to_string(stored.data.k()) + " but " +
                                                std::to_string(cmd.links.size()) + " links were given");
    std::vector<LinkFunction> links(cmd.links.begin(), cmd.links.end());
    SlsOptions opts = cmd.options;
    opts.threads = cfg.threads;
    EstimationResult est = sls_estimate(stored.data, links, opts);

    Report rep;
    rep.add_manifest("estimate", cfg.config_hash, opts.seed);
    rep.add("dataset", cmd.dataset);
    rep.add("n", static_cast<long>(stored.data.n()));
    rep.add("p", static_cast<long>(stored.data.p()));
    rep.add("k", static_cast<long>(stored.data.k()));
    rep.add("gram.source", est.source == GramSource::Full ? "full" : "subsampled");
    rep.add("gram.subsample_size", static_cast<long>(est.subsample_size));
    int failed = 0;
    for (std::size_t j = 0; j < links.size(); ++j) {
        const auto& d = est.diagnostics[j];
        const std::string key = "direction." + std::to_string(j) + ".";
        const auto row = static_cast<Eigen::Index>(j);
        failed += d.converged ? 0 : 1;
        rep.add(key + "link", links[j].name());
        rep.add(key + "failed", !d.converged);
        rep.add(key + "failure", to_string(d.failure));
        if (!d.message.empty()) rep.add(key + "message", d.message);
        rep.add(key + "c_hat", est.c_hat[row]);
        rep.add(key + "newton_iters", d.newton_iters);
        rep.add(key + "used_bisection", d.used_bisection);
        rep.add(key + "bisection_iters", d.bisection_iters);
        rep.add(key + "final_residual", d.final_residual);
        rep.add(key + "bracket_lo", d.bracket_lo);
        rep.add(key + "bracket_hi", d.bracket_hi);
        rep.add(key + "link_regular", d.link_regular);
        rep.add(key + "beta_ols", VectorXd(est.beta_ols.row(row).transpose()));
        rep.add(key + "beta_nlr", VectorXd(est.beta_nlr.row(row).transpose()));
    }
    if (stored.beta_star) {
        rep.add("relative_error_l2", relative_error_l2(est.beta_nlr, *stored.beta_star));
        rep.add("relative_error_linf", relative_error_linf(est.beta_nlr, *stored.beta_star));
    }
    rep.add("failed_directions", failed);
    rep.add("status", failed ? "partial_failure" : "ok");
    rep.save(cmd.report);
    rep.write(log);
    return failed ? exit_estimation_failure : exit_ok;
}

inline int run_experiment_command(const ExperimentCommand& cmd, const RunConfig& cfg, std::ostream& log) {
    ExperimentPlan plan = cmd.plan;
    if (cmd.full_grid) use_full_grid(plan);
    plan.threads = cfg.threads;
    auto records = run_experiment(plan);
    emit_csv(records, cmd.csv);
    if (cmd.plot) {
        PlotOptions po;
        po.metric = cmd.metric;
        po.title = cmd.metric == Metric::L2 ? "max relative l2 error" : "max relative l-inf error";
        po.x_label = std::holds_alternative<SampleSizeSweep>(plan.sweep) ? "n" : "|S| / n";
        emit_plot(records, *cmd.plot, po);
    }

    Report rep;
    rep.add_manifest("experiment", cfg.config_hash, plan.master_seed);
    rep.add("csv", cmd.csv);
    rep.add("metric", cmd.metric == Metric::L2 ? "l2" : "linf");
    rep.add("repeats", plan.repeats);
    int failed = 0;
    for (const auto& r : records) failed += r.failed ? 1 : 0;
    auto summary = summarize(records, cmd.metric);
    for (std::size_t i = 0; i < summary.size(); ++i) {
        const auto& s = summary[i];
        const std::string key = "sweep." + std::to_string(i) + ".";
        rep.add(key + "value", s.sweep_value);
        rep.add(key + "mean", s.mean);
        rep.add(key + "median", s.median);
        rep.add(key + "min", s.min);
        rep.add(key + "max", s.max);
        rep.add(key + "failed", s.failed);
    }
    if (summary.size() >= 3) {
        try {
            rep.add("slope", fit_convergence_slope(records, cmd.metric));
        } catch (const Error&) {
            rep.add("slope", "undefined");
        }
    }
    rep.add("failed_records", failed);
    rep.save(cmd.report.empty() ? cmd.csv + ".report" : cmd.report);
    rep.write(log);
    return failed ? exit_estimation_failure : exit_ok;
}

inline int run_verify(const VerifyCommand& cmd, const RunConfig& cfg, std::ostream& log) {
    auto wants = [&](const char* name) {
        return std::find(cmd.checks.begin(), cmd.checks.end(), name) != cmd.checks.end();
    };
    Report rep;
    rep.add_manifest("verify", cfg.config_hash, cmd.seed);
    bool all_passed = true;

    if (wants("theorem7")) {
        Theorem7Report t = theorem7_check(cmd.grid_points, cmd.n_quad);
        rep.add("theorem7.a", t.a);
        rep.add("theorem7.b", t.b);
        rep.add("theorem7.ell_at_6", t.ell_at_6);
        rep.add("theorem7.min_ell_deriv", t.min_ell_deriv);
        rep.add("theorem7.passed", t.passed);
        all_passed = all_passed && t.passed;
    }
    if (wants("stein")) {
        const LinkFunction sig = LinkFunction::sigmoid();
        struct Case {
            const char* name;
            std::function<double(double)> g, dg;
        };
        const Case cases[] = {
            {"identity", [](double z) { return z; }, [](double) { return 1.0; }},
            {"sigmoid", [&](double z) { return sig.eval(z); }, [&](double z) { return sig.d1(z); }},
            {"sigmoid_d1", [&](double z) { return sig.d1(z); }, [&](double z) { return sig.d2(z); }},
        };
        std::uint64_t index = 0;
        for (const auto& c : cases) {
            Engine rng = make_stream(derive_seed(cmd.seed, index++), "stein");
            double gap = stein_identity_gap(c.g, c.dg, cmd.n_mc, rng);
            bool ok = gap <= 0.01;
            rep.add(std::string("stein.") + c.name + ".gap", gap);
            rep.add(std::string("stein.") + c.name + ".passed", ok);
            all_passed = all_passed && ok;
        }
    }
    if (wants("proportionality") || wants("cubic_oracle")) {
        const Eigen::Index p = 20;
        const MatrixXd iso = MatrixXd::Identity(p, p) / std::sqrt(static_cast<double>(p));
        SynthConfig prior;
        prior.p = p;
        prior.n = p;
        prior.links = {LinkKind::identity()};
        Engine beta_rng = make_stream(cmd.seed, "verify-beta");
        VectorXd beta = sample_beta_star(prior, beta_rng).row(0).transpose();

        if (wants("proportionality")) {
            struct Case {
                const char* name;
                LinkFunction link;
                double tol;
            };
            const Case cases[] = {{"identity", LinkFunction::identity(), 0.02}, {"sigmoid", LinkFunction::sigmoid(), 0.05}};
            std::uint64_t index = 0;
            for (const auto& c : cases) {
                Engine rng = make_stream(derive_seed(cmd.seed, index++), "proportionality");
                auto pr = proportionality_gap(c.link, beta, iso, cmd.n_mc, rng);
                bool ok = pr.gap <= c.tol;
                rep.add(std::string("proportionality.") + c.name + ".gap", pr.gap);
                rep.add(std::string("proportionality.") + c.name + ".passed", ok);
                all_passed = all_passed && ok;
            }
        }
        if (wants("cubic_oracle")) {
            const Eigen::Index q = 5;
            VectorXd e1 = VectorXd::Unit(q, 0);
            MatrixXd eye = MatrixXd::Identity(q, q);
            CubicOracle oracle = cubic_oracle(e1, eye);
            Engine rng = make_stream(cmd.seed, "cubic");
            auto pr = proportionality_gap(LinkFunction::monomial(3), e1, eye, cmd.n_mc, rng);
            double ols_err = (pr.beta_ols - oracle.beta_ols).norm() / oracle.beta_ols.norm();
            double c_err = std::abs(1.0 / pr.mean_d1 - oracle.c) / oracle.c;
            bool ok = pr.gap <= 0.05 && ols_err <= 0.05 && c_err <= 0.05;
            rep.add("cubic_oracle.c", oracle.c);
            rep.add("cubic_oracle.c_monte_carlo", 1.0 / pr.mean_d1);
            rep.add("cubic_oracle.beta_ols_rel_err", ols_err);
            rep.add("cubic_oracle.gap", pr.gap);
            rep.add("cubic_oracle.passed", ok);
            all_passed = all_passed && ok;
        }
    }
    if (wants("covariance")) {
        CovarianceSummary cs = covariance_summary(*cmd.covariance_factor);
        rep.add("covariance.lambda_min", cs.lambda_min);
        rep.add("covariance.rho_2", cs.rho_2);
        rep.add("covariance.rho_inf", cs.rho_inf);
        rep.add("covariance.diag_dominant_sqrt", cs.diag_dominant_sqrt);
    }
    rep.add("passed", all_passed);
    rep.save(cmd.report);
    rep.write(log);
    return all_passed ? exit_ok : exit_estimation_failure;
}

}  // namespace detail

/// Dispatches a validated config. Returns the process exit code: 0 success,
/// 1 estimation failure (or a failed verification check), 2 configuration
/// error, 3 I/O error. Diagnostics go to `err`, reports to `log`.
inline int run(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    try {
        return std::visit(
            [&](const auto& cmd) -> int {
                using C = std::decay_t<decltype(cmd)>;
                if constexpr (std::is_same_v<C, GenerateCommand>)
                    return detail::run_generate(cmd, cfg, log);
                else if constexpr (std::is_same_v<C, EstimateCommand>)
                    return detail::run_estimate(cmd, cfg, log);
                else if constexpr (std::is_same_v<C, ExperimentCommand>)
                    return detail::run_experiment_command(cmd, cfg, log);
                else
                    return detail::run_verify(cmd, cfg, log);
            },
            cfg.payload);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return exit_io_error;
    } catch (const Error& e) {
        err << "estimation error: " << e.what() << '\n';
        return exit_estimation_failure;
    }
}

/// Parse, override, run. `expected` must match the config's section.
inline int run_text(Command expected, const std::string& config_text, const Overrides& ov,
                    std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    RunConfig cfg;
    try {
        cfg = parse_config(config_text);
        if (cfg.command() != expected)
            throw ConfigError("", std::string("config holds a '") + to_string(cfg.command()) +
                                      "' section but the subcommand is '" + to_string(expected) + "'");
        apply_overrides(cfg, ov);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config_error;
    }
    return run(cfg, log, err);
}

}  // namespace sls
