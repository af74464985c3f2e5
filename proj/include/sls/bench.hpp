#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sls/error.hpp"
#include "sls/estimator.hpp"
#include "sls/parallel.hpp"
#include "sls/rng.hpp"
#include "sls/synth.hpp"

namespace sls {

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

/// max_j ||beta_hat_j - beta*_j||_2 / ||beta*_j||_2
inline double relative_error_l2(const MatrixXd& beta_hat, const MatrixXd& beta_star) {
    if (beta_hat.rows() != beta_star.rows() || beta_hat.cols() != beta_star.cols())
        throw DimensionMismatch("relative_error_l2: shapes differ");
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta_star.rows(); ++j) {
        double denom = beta_star.row(j).norm();
        if (!(denom > 0)) throw DegenerateDirection("relative_error_l2: zero ground-truth row");
        double e = (beta_hat.row(j) - beta_star.row(j)).norm() / denom;
        if (std::isnan(e)) return e;
        worst = std::max(worst, e);
    }
    return worst;
}

/// max_j ||beta_hat_j - beta*_j||_inf / ||beta*_j||_inf
inline double relative_error_linf(const MatrixXd& beta_hat, const MatrixXd& beta_star) {
    if (beta_hat.rows() != beta_star.rows() || beta_hat.cols() != beta_star.cols())
        throw DimensionMismatch("relative_error_linf: shapes differ");
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta_star.rows(); ++j) {
        double denom = beta_star.row(j).cwiseAbs().maxCoeff();
        if (!(denom > 0)) throw DegenerateDirection("relative_error_linf: zero ground-truth row");
        double e = (beta_hat.row(j) - beta_star.row(j)).cwiseAbs().maxCoeff() / denom;
        if (std::isnan(e)) return e;
        worst = std::max(worst, e);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Experiment plans
// ---------------------------------------------------------------------------

struct SampleSizeSweep {
    std::vector<Eigen::Index> sizes;
};

/// |S| / n values at a fixed n.
struct SubsampleFractionSweep {
    std::vector<double> fractions;
    Eigen::Index n = 0;
};

using Sweep = std::variant<SampleSizeSweep, SubsampleFractionSweep>;

struct ExperimentPlan {
    Sweep sweep = SampleSizeSweep{};
    Eigen::Index p = 20;
    DesignDistribution dist = GaussianIsotropic{};
    std::vector<LinkKind> links;
    int repeats = 20;
    std::uint64_t master_seed = 0;
    double noise_std = 1.0;
    double beta_mean = 1.0;
    double beta_std = 4.0;
    bool pin_beta = false;  // same beta* for every repeat
    RootOptions root{};
    unsigned threads = 1;
    unsigned max_resident = 0;  // datasets in memory at once; 0 = threads

    std::vector<double> sweep_values() const {
        std::vector<double> out;
        if (auto* s = std::get_if<SampleSizeSweep>(&sweep))
            for (auto n : s->sizes) out.push_back(static_cast<double>(n));
        else
            out = std::get<SubsampleFractionSweep>(sweep).fractions;
        return out;
    }

    void validate() const {
        if (repeats < 1) throw Error("experiment: repeats must be >= 1");
        if (p < 1) throw Error("experiment: p must be positive");
        if (links.empty()) throw Error("experiment: at least one link is required");
        auto values = sweep_values();
        if (values.empty()) throw Error("experiment: sweep is empty");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] > 0)) throw Error("experiment: sweep values must be positive");
            if (i > 0 && !(values[i] > values[i - 1]))
                throw Error("experiment: sweep values must be increasing");
        }
        if (auto* s = std::get_if<SampleSizeSweep>(&sweep)) {
            if (s->sizes.front() < p) throw Error("experiment: every n must be >= p");
        } else {
            const auto& f = std::get<SubsampleFractionSweep>(sweep);
            if (f.n < p) throw Error("experiment: n must be >= p");
            if (f.fractions.back() > 1.0) throw Error("experiment: fractions must be <= 1");
        }
        validate_design(dist, p);
        root.validate();
    }
};

struct ExperimentRecord {
    double sweep_value = 0.0;
    int repeat = 0;
    std::uint64_t seed = 0;
    double err_l2_rel = 0.0;
    double err_linf_rel = 0.0;
    std::vector<double> c_hat;
    int newton_iters_max = 0;
    double runtime_ms = 0.0;
    bool failed = false;
};

inline std::uint64_t repeat_seed(std::uint64_t master_seed, int repeat) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(repeat));
}

namespace detail {

inline ExperimentRecord score(const EstimationResult& est, const MatrixXd& beta_star, double sweep_value,
                              int repeat, std::uint64_t seed, double runtime_ms) {
    ExperimentRecord rec;
    rec.sweep_value = sweep_value;
    rec.repeat = repeat;
    rec.seed = seed;
    rec.runtime_ms = runtime_ms;
    rec.failed = !est.all_converged();
    rec.c_hat.assign(est.c_hat.data(), est.c_hat.data() + est.c_hat.size());
    for (const auto& d : est.diagnostics) rec.newton_iters_max = std::max(rec.newton_iters_max, d.newton_iters);
    rec.err_l2_rel = relative_error_l2(est.beta_nlr, beta_star);
    rec.err_linf_rel = relative_error_linf(est.beta_nlr, beta_star);
    return rec;
}

inline bool record_order(const ExperimentRecord& a, const ExperimentRecord& b) {
    return a.sweep_value != b.sweep_value ? a.sweep_value < b.sweep_value : a.repeat < b.repeat;
}

}  // namespace detail

/// One record per (sweep value, repeat). Repeat r uses seed
/// repeat_seed(master_seed, r) at every sweep value, so the datasets of a
/// sample-size sweep are nested and a fraction sweep re-uses one dataset per
/// repeat. Output is sorted by (sweep value, repeat) and does not depend on
/// the thread count.
inline std::vector<ExperimentRecord> run_experiment(const ExperimentPlan& plan) {
    plan.validate();
    using Clock = std::chrono::steady_clock;

    auto synth_for = [&](Eigen::Index n, std::uint64_t seed) {
        SynthConfig cfg;
        cfg.n = n;
        cfg.p = plan.p;
        cfg.dist = plan.dist;
        cfg.links = plan.links;
        cfg.beta_mean = plan.beta_mean;
        cfg.beta_std = plan.beta_std;
        cfg.noise_std = plan.noise_std;
        cfg.master_seed = seed;
        if (plan.pin_beta) cfg.beta_seed = plan.master_seed;
        return cfg;
    };
    std::vector<LinkFunction> links(plan.links.begin(), plan.links.end());

    unsigned workers = std::max(1u, plan.threads);
    if (plan.max_resident > 0) workers = std::min(workers, plan.max_resident);

    std::vector<ExperimentRecord> records;
    std::mutex records_mutex;
    auto push = [&](std::vector<ExperimentRecord> batch) {
        std::lock_guard lock(records_mutex);
        for (auto& r : batch) records.push_back(std::move(r));
    };

    SlsOptions base;
    base.root = plan.root;

    if (auto* s = std::get_if<SampleSizeSweep>(&plan.sweep)) {
        const std::size_t tasks = s->sizes.size() * static_cast<std::size_t>(plan.repeats);
        parallel_for(tasks, workers, [&](std::size_t t) {
            const Eigen::Index n = s->sizes[t / static_cast<std::size_t>(plan.repeats)];
            const int r = static_cast<int>(t % static_cast<std::size_t>(plan.repeats));
            const std::uint64_t seed = repeat_seed(plan.master_seed, r);
            Generated gen = generate(synth_for(n, seed));
            SlsOptions opts = base;
            opts.seed = seed;
            auto start = Clock::now();
            EstimationResult est = sls_estimate(gen.data, links, opts);
            double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
            push({detail::score(est, *gen.spec.beta_star, static_cast<double>(n), r, seed, ms)});
        });
    } else {
        const auto& f = std::get<SubsampleFractionSweep>(plan.sweep);
        parallel_for(static_cast<std::size_t>(plan.repeats), workers, [&](std::size_t rr) {
            const int r = static_cast<int>(rr);
            const std::uint64_t seed = repeat_seed(plan.master_seed, r);
            Generated gen = generate(synth_for(f.n, seed));
            std::vector<ExperimentRecord> batch;
            for (double fraction : f.fractions) {
                SlsOptions opts = base;
                opts.seed = seed;
                opts.gram = SubsampledGram{0, fraction};
                auto start = Clock::now();
                EstimationResult est = sls_estimate(gen.data, links, opts);
                double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
                batch.push_back(detail::score(est, *gen.spec.beta_star, fraction, r, seed, ms));
            }
            push(std::move(batch));
        });
    }
    std::sort(records.begin(), records.end(), detail::record_order);
    return records;
}

// ---------------------------------------------------------------------------
// Summaries and slope
// ---------------------------------------------------------------------------

enum class Metric { L2, Linf };

inline double metric_of(const ExperimentRecord& r, Metric m) {
    return m == Metric::L2 ? r.err_l2_rel : r.err_linf_rel;
}

struct SweepSummary {
    double sweep_value = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    int count = 0;
    int failed = 0;
};

/// Per sweep value statistics of one metric, in increasing sweep order.
/// Failed repeats are counted but excluded from the statistics.
inline std::vector<SweepSummary> summarize(const std::vector<ExperimentRecord>& records,
                                           Metric metric = Metric::L2) {
    std::map<double, std::vector<double>> groups;
    std::map<double, int> failures;
    for (const auto& r : records) {
        if (r.failed || !std::isfinite(metric_of(r, metric)))
            ++failures[r.sweep_value];
        else
            groups[r.sweep_value].push_back(metric_of(r, metric));
        groups.try_emplace(r.sweep_value);
    }
    std::vector<SweepSummary> out;
    for (auto& [value, errs] : groups) {
        SweepSummary s;
        s.sweep_value = value;
        s.failed = failures[value];
        s.count = static_cast<int>(errs.size());
        if (!errs.empty()) {
            std::sort(errs.begin(), errs.end());
            double sum = 0.0;
            for (double e : errs) sum += e;
            s.mean = sum / static_cast<double>(errs.size());
            std::size_t mid = errs.size() / 2;
            s.median = errs.size() % 2 ? errs[mid] : 0.5 * (errs[mid - 1] + errs[mid]);
            s.min = errs.front();
            s.max = errs.back();
        } else {
            s.mean = s.median = s.min = s.max = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(s);
    }
    return out;
}

/// Least-squares slope of log(y) against log(x).
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionMismatch("fit_loglog_slope: sizes differ");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0 && y[i] > 0)) throw Error("fit_loglog_slope: values must be positive");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    std::vector<double> distinct = lx;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) throw InsufficientPoints("slope fit needs at least 3 distinct sweep values");
    const double m = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

/// Slope of log(mean error) against log(sweep value).
inline double fit_convergence_slope(const std::vector<ExperimentRecord>& records, Metric metric = Metric::L2) {
    std::vector<double> x, y;
    for (const auto& s : summarize(records, metric)) {
        x.push_back(s.sweep_value);
        y.push_back(s.mean);
    }
    return fit_loglog_slope(x, y);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* csv_header =
    "sweep,repeat,seed,err_l2_rel,err_linf_rel,newton_iters_max,runtime_ms,failed";

namespace detail {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
    std::vector<ExperimentRecord> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(), detail::record_order);
    out << csv_header << '\n';
    for (const auto& r : sorted) {
        out << detail::g17(r.sweep_value) << ',' << r.repeat << ',' << r.seed << ',' << detail::g17(r.err_l2_rel)
            << ',' << detail::g17(r.err_linf_rel) << ',' << r.newton_iters_max << ','
            << detail::g17(r.runtime_ms) << ',' << (r.failed ? 1 : 0) << '\n';
    }
}

inline void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_csv(records, out);
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

/// Parses the output of write_csv. c_hat is not part of the format.
inline std::vector<ExperimentRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != csv_header) throw IoError("csv: missing or unexpected header");
    std::vector<ExperimentRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() != 8) throw IoError("csv: expected 8 fields, got " + std::to_string(cells.size()));
        try {
            ExperimentRecord r;
            r.sweep_value = std::stod(cells[0]);
            r.repeat = std::stoi(cells[1]);
            r.seed = std::stoull(cells[2]);
            r.err_l2_rel = std::stod(cells[3]);
            r.err_linf_rel = std::stod(cells[4]);
            r.newton_iters_max = std::stoi(cells[5]);
            r.runtime_ms = std::stod(cells[6]);
            r.failed = cells[7] == "1";
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw IoError("csv: malformed row '" + line + "'");
        }
    }
    return out;
}

}  // namespace sls
