#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sls/bench.hpp"
#include "sls/error.hpp"
#include "sls/estimator.hpp"
#include "sls/link.hpp"
#include "sls/parallel.hpp"
#include "sls/synth.hpp"

namespace sls {

using json = nlohmann::json;

enum class Command { Generate, Estimate, Experiment, Verify };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::Generate: return "generate";
        case Command::Estimate: return "estimate";
        case Command::Experiment: return "experiment";
        case Command::Verify: return "verify";
    }
    return "?";
}

struct GenerateCommand {
    SynthConfig synth;
    std::string output = "dataset.sls";
};

struct EstimateCommand {
    std::string dataset;
    std::vector<LinkKind> links;
    SlsOptions options;
    std::string report = "estimate_report.txt";
};

struct ExperimentCommand {
    ExperimentPlan plan;
    std::string csv = "experiment.csv";
    std::optional<std::string> plot;
    std::string report;  // empty: "<csv>.report"
    Metric metric = Metric::L2;
    bool full_grid = false;
};

struct VerifyCommand {
    std::vector<std::string> checks{"theorem7", "stein", "proportionality", "cubic_oracle"};
    long n_mc = 1'000'000;
    std::uint64_t seed = 0;
    int n_quad = 200;
    int grid_points = 601;
    std::optional<MatrixXd> covariance_factor;
    std::string report = "verify_report.txt";
};

struct RunConfig {
    std::variant<GenerateCommand, EstimateCommand, ExperimentCommand, VerifyCommand> payload;
    unsigned threads = default_threads();
    std::uint64_t config_hash = 0;

    Command command() const { return static_cast<Command>(payload.index()); }
};

namespace detail {

/// Typed view over one JSON object that rejects keys nobody read.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_, "expected an object");
    }

    std::string at(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return node_.at(key);
    }

    double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
        if (!has(key)) return required(key, fallback);
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
        if (!has(key)) return required(key, fallback);
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v.get<std::int64_t>();
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw ConfigError(at(key), "expected a non-negative integer");
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        if (!has(key)) return required(key, fallback);
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& [key, value] : node_.items())
            if (!used_.count(key)) throw ConfigError(at(key), "unknown key");
    }

private:
    template <typename T>
    T required(const std::string& key, const std::optional<T>& fallback) const {
        if (!fallback) throw ConfigError(at(key), "required key is missing");
        return *fallback;
    }

    const json& node_;
    std::string path_;
    std::set<std::string> used_;
};

inline LinkKind parse_link_at(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "link must be a string");
    try {
        return parse_link_kind(v.get<std::string>());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

/// Either a list of link names or {"preset": "poly_mix" | "nonlinear_mix", "k": K}.
/// Presets cycle through {x, x^3, x^5} or {x^3, sigmoid, logistic}.
inline std::vector<LinkKind> parse_links(const json& v, const std::string& path) {
    std::vector<LinkKind> out;
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(parse_link_at(v[i], path + "[" + std::to_string(i) + "]"));
    } else if (v.is_object()) {
        Section s(v, path);
        std::string preset = s.string("preset");
        auto k = s.integer("k");
        s.finish();
        if (k < 1) throw ConfigError(path + ".k", "must be >= 1");
        std::vector<LinkKind> cycle;
        if (preset == "poly_mix")
            cycle = {LinkKind::identity(), LinkKind::monomial(3), LinkKind::monomial(5)};
        else if (preset == "nonlinear_mix")
            cycle = {LinkKind::monomial(3), LinkKind::sigmoid(), LinkKind::logistic()};
        else
            throw ConfigError(path + ".preset", "unknown preset '" + preset + "'");
        for (std::int64_t j = 0; j < k; ++j) out.push_back(cycle[static_cast<std::size_t>(j) % cycle.size()]);
    } else {
        throw ConfigError(path, "expected a list of link names or a preset object");
    }
    if (out.empty()) throw ConfigError(path, "at least one link is required");
    return out;
}

inline MatrixXd parse_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of rows");
    const std::size_t rows = v.size();
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) throw ConfigError(path, "rows must be non-empty arrays");
    MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!v[i].is_array() || v[i].size() != cols) throw ConfigError(path, "ragged matrix");
        for (std::size_t j = 0; j < cols; ++j) {
            if (!v[i][j].is_number()) throw ConfigError(path, "matrix entries must be numbers");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
        }
    }
    return m;
}

/// "gaussian", "uniform", or an object with "kind" plus "half_width" / "factor".
inline DesignDistribution parse_design(const json& v, const std::string& path, Eigen::Index p) {
    std::string kind;
    DesignDistribution out;
    if (v.is_string()) {
        kind = v.get<std::string>();
        if (kind == "gaussian") return GaussianIsotropic{};
        if (kind == "uniform") return UniformBox{};
        throw ConfigError(path, "unknown design '" + kind + "'");
    }
    Section s(v, path);
    kind = s.string("kind");
    if (kind == "gaussian") {
        out = GaussianIsotropic{};
    } else if (kind == "uniform") {
        double h = s.real("half_width", 0.0);
        if (h < 0) throw ConfigError(s.at("half_width"), "must be positive");
        out = UniformBox{h};
    } else if (kind == "gaussian_general") {
        if (!s.has("factor")) throw ConfigError(s.at("factor"), "required key is missing");
        out = GaussianGeneral{parse_matrix(s.raw("factor"), s.at("factor"))};
    } else {
        throw ConfigError(s.at("kind"), "unknown design '" + kind + "'");
    }
    s.finish();
    try {
        validate_design(out, p);
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
    return out;
}

inline RootOptions parse_root(Section& parent, const std::string& key) {
    RootOptions r;
    if (!parent.has(key)) return r;
    Section s(parent.raw(key), parent.at(key));
    r.c_init = s.real("c_init", r.c_init);
    r.c_max = s.real("c_max", r.c_max);
    r.tol = s.real("tol", r.tol);
    r.max_iter = static_cast<int>(s.integer("max_iter", r.max_iter));
    r.deriv_floor = s.real("deriv_floor", r.deriv_floor);
    s.finish();
    try {
        r.validate();
    } catch (const Error& e) {
        throw ConfigError(parent.at(key), e.what());
    }
    return r;
}

inline std::string non_empty_path(Section& s, const std::string& key,
                                  std::optional<std::string> fallback = std::nullopt) {
    std::string v = s.string(key, fallback);
    if (v.empty()) throw ConfigError(s.at(key), "path must be non-empty");
    return v;
}

inline Eigen::Index positive(Section& s, const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
    auto v = s.integer(key, fallback);
    if (v < 1) throw ConfigError(s.at(key), "must be >= 1");
    return static_cast<Eigen::Index>(v);
}

inline double non_negative(Section& s, const std::string& key, double fallback) {
    double v = s.real(key, fallback);
    if (!(v >= 0)) throw ConfigError(s.at(key), "must be >= 0");
    return v;
}

inline GenerateCommand parse_generate(Section& s) {
    GenerateCommand cmd;
    auto& c = cmd.synth;
    c.n = positive(s, "n");
    c.p = positive(s, "p");
    if (c.n < c.p) throw ConfigError(s.at("n"), "must be >= p");
    if (!s.has("links")) throw ConfigError(s.at("links"), "required key is missing");
    c.links = parse_links(s.raw("links"), s.at("links"));
    c.dist = s.has("design") ? parse_design(s.raw("design"), s.at("design"), c.p) : GaussianIsotropic{};
    c.beta_mean = s.real("beta_mean", 1.0);
    c.beta_std = non_negative(s, "beta_std", 4.0);
    c.noise_std = non_negative(s, "noise_std", 1.0);
    c.master_seed = s.seed("seed", 0);
    cmd.output = non_empty_path(s, "output", cmd.output);
    return cmd;
}

inline EstimateCommand parse_estimate(Section& s) {
    EstimateCommand cmd;
    cmd.dataset = non_empty_path(s, "dataset");
    if (!s.has("links")) throw ConfigError(s.at("links"), "required key is missing");
    cmd.links = parse_links(s.raw("links"), s.at("links"));
    if (s.has("gram")) {
        const json& g = s.raw("gram");
        if (g.is_string()) {
            if (g.get<std::string>() != "full") throw ConfigError(s.at("gram"), "expected \"full\" or an object");
        } else {
            Section gs(g, s.at("gram"));
            SubsampledGram sub;
            if (gs.has("subsample_fraction")) {
                sub.fraction = gs.real("subsample_fraction");
                if (!(sub.fraction > 0 && sub.fraction <= 1))
                    throw ConfigError(gs.at("subsample_fraction"), "must lie in (0, 1]");
            } else if (gs.has("subsample_size")) {
                sub.size = positive(gs, "subsample_size");
            } else {
                throw ConfigError(s.at("gram"), "needs subsample_fraction or subsample_size");
            }
            gs.finish();
            cmd.options.gram = sub;
        }
    }
    cmd.options.root = parse_root(s, "root");
    cmd.options.root_subsample = static_cast<Index>(s.integer("root_subsample", 0));
    if (cmd.options.root_subsample < 0) throw ConfigError(s.at("root_subsample"), "must be >= 0");
    cmd.options.seed = s.seed("seed", 0);
    cmd.report = non_empty_path(s, "report", cmd.report);
    return cmd;
}

inline ExperimentCommand parse_experiment(Section& s) {
    ExperimentCommand cmd;
    auto& plan = cmd.plan;
    plan.p = positive(s, "p");
    if (!s.has("sweep")) throw ConfigError(s.at("sweep"), "required key is missing");
    {
        Section sw(s.raw("sweep"), s.at("sweep"));
        if (sw.has("sample_size")) {
            SampleSizeSweep ss;
            const json& v = sw.raw("sample_size");
            if (!v.is_array() || v.empty()) throw ConfigError(sw.at("sample_size"), "expected a non-empty list");
            for (const auto& e : v) {
                if (!e.is_number_integer() || e.get<std::int64_t>() < 1)
                    throw ConfigError(sw.at("sample_size"), "entries must be positive integers");
                ss.sizes.push_back(static_cast<Eigen::Index>(e.get<std::int64_t>()));
            }
            plan.sweep = ss;
        } else if (sw.has("subsample_fraction")) {
            SubsampleFractionSweep fs;
            const json& v = sw.raw("subsample_fraction");
            if (!v.is_array() || v.empty()) throw ConfigError(sw.at("subsample_fraction"), "expected a non-empty list");
            for (const auto& e : v) {
                if (!e.is_number()) throw ConfigError(sw.at("subsample_fraction"), "entries must be numbers");
                fs.fractions.push_back(e.get<double>());
            }
            fs.n = positive(sw, "n");
            plan.sweep = fs;
        } else {
            throw ConfigError(s.at("sweep"), "needs sample_size or subsample_fraction");
        }
        sw.finish();
    }
    if (!s.has("links")) throw ConfigError(s.at("links"), "required key is missing");
    plan.links = parse_links(s.raw("links"), s.at("links"));
    plan.dist = s.has("design") ? parse_design(s.raw("design"), s.at("design"), plan.p) : GaussianIsotropic{};
    plan.repeats = static_cast<int>(s.integer("repeats", 20));
    if (plan.repeats < 1) throw ConfigError(s.at("repeats"), "must be >= 1");
    plan.master_seed = s.seed("seed", 0);
    plan.noise_std = non_negative(s, "noise_std", 1.0);
    plan.beta_mean = s.real("beta_mean", 1.0);
    plan.beta_std = non_negative(s, "beta_std", 4.0);
    plan.pin_beta = s.boolean("pin_beta", false);
    plan.root = parse_root(s, "root");
    plan.max_resident = static_cast<unsigned>(s.integer("max_resident", 0));
    cmd.full_grid = s.boolean("full_grid", false);
    std::string metric = s.string("metric", "l2");
    if (metric == "l2")
        cmd.metric = Metric::L2;
    else if (metric == "linf")
        cmd.metric = Metric::Linf;
    else
        throw ConfigError(s.at("metric"), "expected \"l2\" or \"linf\"");
    cmd.csv = non_empty_path(s, "csv", cmd.csv);
    if (s.has("plot")) cmd.plot = non_empty_path(s, "plot");
    cmd.report = s.has("report") ? non_empty_path(s, "report") : "";
    try {
        plan.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(s.at("sweep"), e.what());
    }
    return cmd;
}

inline VerifyCommand parse_verify(Section& s) {
    VerifyCommand cmd;
    static const std::set<std::string> known{"theorem7", "stein", "proportionality", "cubic_oracle", "covariance"};
    if (s.has("checks")) {
        const json& v = s.raw("checks");
        if (!v.is_array() || v.empty()) throw ConfigError(s.at("checks"), "expected a non-empty list");
        cmd.checks.clear();
        for (const auto& e : v) {
            if (!e.is_string() || !known.count(e.get<std::string>()))
                throw ConfigError(s.at("checks"), "unknown check " + e.dump());
            cmd.checks.push_back(e.get<std::string>());
        }
    }
    cmd.n_mc = static_cast<long>(positive(s, "n_mc", cmd.n_mc));
    cmd.seed = s.seed("seed", 0);
    cmd.n_quad = static_cast<int>(s.integer("n_quad", cmd.n_quad));
    if (cmd.n_quad < 100) throw ConfigError(s.at("n_quad"), "must be >= 100");
    cmd.grid_points = static_cast<int>(s.integer("grid_points", cmd.grid_points));
    if (cmd.grid_points < 2) throw ConfigError(s.at("grid_points"), "must be >= 2");
    if (s.has("covariance_factor")) {
        MatrixXd f = parse_matrix(s.raw("covariance_factor"), s.at("covariance_factor"));
        try {
            validate_design(GaussianGeneral{f}, f.rows());
        } catch (const Error& e) {
            throw ConfigError(s.at("covariance_factor"), e.what());
        }
        cmd.covariance_factor = f;
    }
    bool wants_cov = std::find(cmd.checks.begin(), cmd.checks.end(), "covariance") != cmd.checks.end();
    if (wants_cov && !cmd.covariance_factor)
        throw ConfigError(s.at("covariance_factor"), "the covariance check needs a factor");
    cmd.report = non_empty_path(s, "report", cmd.report);
    return cmd;
}

}  // namespace detail

/// Parses a JSON document holding exactly one of the sections "generate",
/// "estimate", "experiment" or "verify", plus an optional "threads".
inline RunConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    detail::Section root(doc, "");
    RunConfig cfg;
    cfg.config_hash = fnv1a64(text);
    if (root.has("threads")) {
        auto t = root.integer("threads");
        if (t < 1) throw ConfigError("threads", "must be >= 1");
        cfg.threads = static_cast<unsigned>(t);
    }
    const Command all[] = {Command::Generate, Command::Estimate, Command::Experiment, Command::Verify};
    int found = 0;
    for (Command c : all) found += root.has(to_string(c)) ? 1 : 0;
    if (found != 1)
        throw ConfigError("", "expected exactly one of generate, estimate, experiment, verify (found " +
                                  std::to_string(found) + ")");
    for (Command c : all) {
        std::string key = to_string(c);
        if (!root.has(key)) continue;
        detail::Section s(root.raw(key), key);
        switch (c) {
            case Command::Generate: cfg.payload = detail::parse_generate(s); break;
            case Command::Estimate: cfg.payload = detail::parse_estimate(s); break;
            case Command::Experiment: cfg.payload = detail::parse_experiment(s); break;
            case Command::Verify: cfg.payload = detail::parse_verify(s); break;
        }
        s.finish();
    }
    root.finish();
    return cfg;
}

}  // namespace sls
