#pragma once

/// @file experiment.hpp
/// @brief Batch harness: R seeded runs, checkpoint ETV snapshots, pooling,
/// q-exponential fits, power-trend summaries, elitism anomaly scan and
/// output files.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include <genlab/etv_stats.hpp>
#include <genlab/ga_engine.hpp>
#include <genlab/genealogy.hpp>
#include <genlab/qexp_fit.hpp>
#include <genlab/record_io.hpp>
#include <genlab/rng.hpp>
#include <genlab/trend_fit.hpp>
#include <genlab/tsp_instance.hpp>
#include <genlab/version.hpp>

namespace genlab {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<int>& default_checkpoints() {
    static const std::vector<int> list{25, 30, 35, 40, 50, 67, 85, 100, 125, 150, 200, 250, 335, 400, 500};
    return list;
}

struct ExperimentConfig {
    std::string instance_path;
    GaConfig ga;
    std::vector<int> checkpoints; // empty: default list clipped to max_generations
    std::size_t runs = 20;
    std::uint64_t master_seed = 1;
    std::string output_dir = "genlab-out";
    bool detach = true;
    bool save_records = false;
    std::size_t workers = 1;

    std::vector<int> effective_checkpoints() const {
        if (!checkpoints.empty()) {
            return checkpoints;
        }
        std::vector<int> out;
        for (int t : default_checkpoints()) {
            if (t <= ga.max_generations) {
                out.push_back(t);
            }
        }
        if (out.empty() || out.back() != ga.max_generations) {
            if (out.empty()) {
                out.push_back(ga.max_generations);
            }
        }
        return out;
    }

    void validate() const {
        ga.validate();
        if (runs < 1) {
            throw ConfigError("runs must be at least 1");
        }
        if (workers < 1) {
            throw ConfigError("workers must be at least 1");
        }
        const auto cps = effective_checkpoints();
        for (std::size_t k = 0; k < cps.size(); ++k) {
            if (cps[k] < 1 || cps[k] > ga.max_generations) {
                throw ConfigError("checkpoint " + std::to_string(cps[k]) +
                                  " outside [1, max_generations]");
            }
            if (k > 0 && cps[k] <= cps[k - 1]) {
                throw ConfigError("checkpoints must be strictly increasing");
            }
        }
    }
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        T out{};
        if constexpr (std::is_floating_point_v<T>) {
            out = static_cast<T>(std::stod(v, &used));
        } else if constexpr (std::is_signed_v<T>) {
            out = static_cast<T>(std::stoll(v, &used));
        } else {
            if (!v.empty() && v[0] == '-') {
                throw std::invalid_argument(v);
            }
            out = static_cast<T>(std::stoull(v, &used));
        }
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return out;
    } catch (const std::logic_error&) {
        throw ConfigError(key + ": bad number '" + v + "'");
    }
}

inline std::string fmt(double v, int digits = 17) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

} // namespace detail

/// Flat `key = value` text; `#` starts a comment; unknown keys are errors.
inline ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        using detail::parse_bool;
        using detail::parse_number;
        if (key == "instance") {
            cfg.instance_path = value;
        } else if (key == "population_size") {
            cfg.ga.population_size = parse_number<std::size_t>(key, value);
        } else if (key == "crossover_prob") {
            cfg.ga.crossover_prob = parse_number<double>(key, value);
        } else if (key == "mutation_prob") {
            cfg.ga.mutation_prob = parse_number<double>(key, value);
        } else if (key == "elitism") {
            cfg.ga.elitism = parse_bool(key, value);
        } else if (key == "max_age") {
            cfg.ga.max_age = value == "none" ? std::nullopt : std::optional<int>(parse_number<int>(key, value));
        } else if (key == "edge_cap") {
            cfg.ga.edge_cap = value == "none" ? std::nullopt : std::optional<int>(parse_number<int>(key, value));
        } else if (key == "max_generations") {
            cfg.ga.max_generations = parse_number<int>(key, value);
        } else if (key == "seed") {
            cfg.master_seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "reverse_insertion") {
            cfg.ga.reverse_insertion = parse_bool(key, value);
        } else if (key == "checkpoints") {
            cfg.checkpoints.clear();
            std::istringstream items(value);
            std::string item;
            while (std::getline(items, item, ',')) {
                cfg.checkpoints.push_back(parse_number<int>(key, detail::trim(item)));
            }
        } else if (key == "runs") {
            cfg.runs = parse_number<std::size_t>(key, value);
        } else if (key == "output_dir") {
            cfg.output_dir = value;
        } else if (key == "detach") {
            cfg.detach = parse_bool(key, value);
        } else if (key == "save_records") {
            cfg.save_records = parse_bool(key, value);
        } else if (key == "workers") {
            cfg.workers = parse_number<std::size_t>(key, value);
        } else {
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline std::string format_config(const ExperimentConfig& c) {
    std::ostringstream out;
    auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("none"); };
    out << "instance = " << c.instance_path << '\n'
        << "population_size = " << c.ga.population_size << '\n'
        << "crossover_prob = " << detail::fmt(c.ga.crossover_prob) << '\n'
        << "mutation_prob = " << detail::fmt(c.ga.mutation_prob) << '\n'
        << "elitism = " << (c.ga.elitism ? "true" : "false") << '\n'
        << "max_age = " << opt(c.ga.max_age) << '\n'
        << "edge_cap = " << opt(c.ga.edge_cap) << '\n'
        << "max_generations = " << c.ga.max_generations << '\n'
        << "seed = " << c.master_seed << '\n'
        << "reverse_insertion = " << (c.ga.reverse_insertion ? "true" : "false") << '\n';
    out << "checkpoints = ";
    const auto cps = c.effective_checkpoints();
    for (std::size_t k = 0; k < cps.size(); ++k) {
        out << (k ? "," : "") << cps[k];
    }
    out << '\n'
        << "runs = " << c.runs << '\n'
        << "output_dir = " << c.output_dir << '\n'
        << "detach = " << (c.detach ? "true" : "false") << '\n'
        << "save_records = " << (c.save_records ? "true" : "false") << '\n'
        << "workers = " << c.workers << '\n';
    return out.str();
}

// ---------------------------------------------------------------- anomalies

struct RunAnomaly {
    std::optional<int> balance_generation; // first generation with a single fitness value
    bool clones_only_after_balance = false;
    int max_clone_chain = 0;               // longest run of clone-of-clone edges
    int max_clones_only_streak = 0;        // consecutive generations whose coupled births are all clones
};

inline RunAnomaly scan_run(std::span<const GenerationSummary> summary,
                           std::span<const BirthRecord> records, std::size_t population) {
    RunAnomaly out;
    for (const auto& s : summary) {
        if (s.fitness_balance && s.generation > 1) {
            out.balance_generation = s.generation;
            break;
        }
    }
    int generations = 0;
    for (const auto& r : records) {
        generations = std::max(generations, r.generation);
    }
    std::vector<int> chain(population * static_cast<std::size_t>(generations), 0);
    std::vector<int> coupled(static_cast<std::size_t>(generations) + 1, 0);
    std::vector<int> clones(static_cast<std::size_t>(generations) + 1, 0);
    bool clones_only = true;
    auto index = [&](NodeId id) {
        return static_cast<std::size_t>(id.j - 1) * population + static_cast<std::size_t>(id.i - 1);
    };
    for (const auto& r : records) {
        if (r.is_clone && r.dominant_parent) {
            chain[index(r.child)] = chain[index(*r.dominant_parent)] + 1;
            out.max_clone_chain = std::max(out.max_clone_chain, chain[index(r.child)]);
        }
        if (!r.uncoupled) {
            ++coupled[static_cast<std::size_t>(r.generation)];
            clones[static_cast<std::size_t>(r.generation)] += r.is_clone ? 1 : 0;
            if (out.balance_generation && r.generation > *out.balance_generation && !r.is_clone) {
                clones_only = false;
            }
        }
    }
    out.clones_only_after_balance = out.balance_generation.has_value() && clones_only;
    int streak = 0;
    for (int j = 2; j <= generations; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (coupled[ju] > 0 && clones[ju] == coupled[ju]) {
            out.max_clones_only_streak = std::max(out.max_clones_only_streak, ++streak);
        } else {
            streak = 0;
        }
    }
    return out;
}

struct TailAnomaly {
    std::uint32_t threshold_x = 0;
    double observed_mass = 0.0;
    double predicted_mass = 0.0;
    double ratio = 0.0;
    bool flagged = false;
};

inline TailAnomaly assess_tail(double observed, double predicted, double ratio_threshold = 10.0) {
    TailAnomaly t;
    t.observed_mass = observed;
    t.predicted_mass = predicted;
    if (predicted > 0.0) {
        t.ratio = observed / predicted;
    } else {
        t.ratio = observed > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    t.flagged = t.ratio > ratio_threshold;
    return t;
}

/// Pooled mass at x >= 0.9 N against the fitted curve summed over the same integers.
inline TailAnomaly tail_mass_anomaly(const PooledDistribution& dist, const QExpParams& fit,
                                     std::size_t population, double ratio_threshold = 10.0) {
    const auto lower = static_cast<std::uint32_t>(std::ceil(0.9 * static_cast<double>(population)));
    double observed = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
        if (dist.x[k] >= lower) {
            observed += dist.frequency[k];
        }
    }
    double predicted = 0.0;
    for (std::uint32_t x = lower; x <= population; ++x) {
        predicted += q_exponential(fit, x);
    }
    auto t = assess_tail(observed, predicted, ratio_threshold);
    t.threshold_x = lower;
    return t;
}

struct AnomalyReport {
    std::vector<RunAnomaly> runs;
    std::size_t balanced_runs = 0;
    std::size_t clones_only_runs = 0;
    std::optional<TailAnomaly> tail;
};

// ---------------------------------------------------------------- plotting

enum class PlotScale { QLog, LogLog };

struct PlotRow {
    double x = 0.0;
    std::optional<double> observed;
    std::optional<double> fitted;
};

/// Rows (x, observed, fitted). QLog applies ln_q with the fitted q and
/// includes the x = 0 intercept; LogLog uses log10 and drops rows where
/// either value is nonpositive.
inline std::vector<PlotRow> emit_plot_data(const PooledDistribution& dist, const QExpFit& fit,
                                           PlotScale scale) {
    std::vector<PlotRow> rows;
    const auto& p = fit.params;
    if (scale == PlotScale::QLog) {
        rows.push_back(PlotRow{0.0, std::nullopt, linearized_form(p, 0.0)});
        for (std::size_t k = 0; k < dist.size(); ++k) {
            if (!(dist.frequency[k] > 0.0)) {
                continue;
            }
            const double x = dist.x[k];
            rows.push_back(PlotRow{x, q_logarithm(p.q, dist.frequency[k]), linearized_form(p, x)});
        }
        return rows;
    }
    for (std::size_t k = 0; k < dist.size(); ++k) {
        const double x = dist.x[k];
        const double fitted = q_exponential(p, x);
        if (!(dist.frequency[k] > 0.0) || !(fitted > 0.0) || !(x > 0.0)) {
            continue;
        }
        rows.push_back(PlotRow{std::log10(x), std::log10(dist.frequency[k]), std::log10(fitted)});
    }
    return rows;
}

inline void write_plot(std::ostream& out, const std::vector<PlotRow>& rows, PlotScale scale) {
    out << (scale == PlotScale::QLog ? "# x\tlnq_observed\tlnq_fitted\n"
                                     : "# log10_x\tlog10_observed\tlog10_fitted\n");
    auto cell = [](const std::optional<double>& v) { return v ? detail::fmt(*v) : std::string("-"); };
    for (const auto& r : rows) {
        out << detail::fmt(r.x) << '\t' << cell(r.observed) << '\t' << cell(r.fitted) << '\n';
    }
}

inline void write_distribution(std::ostream& out, const PooledDistribution& d) {
    out << "# x\tfrequency\thorizon=" << d.horizon << "\truns=" << d.runs << "\tnodes=" << d.total << '\n';
    for (std::size_t k = 0; k < d.size(); ++k) {
        out << d.x[k] << '\t' << detail::fmt(d.frequency[k]) << '\n';
    }
}

/// Reads a two-column (x, frequency) file; counts are not recoverable, so
/// `count` stays empty and `total` is zero.
inline PooledDistribution read_distribution(std::istream& in) {
    PooledDistribution d;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        double x = 0.0, f = 0.0;
        if (!(ls >> x >> f) || x < 1 || x != std::floor(x)) {
            throw FitError("distribution line '" + line + "' is not 'x frequency'");
        }
        d.x.push_back(static_cast<std::uint32_t>(x));
        d.frequency.push_back(f);
    }
    return d;
}

// ---------------------------------------------------------------- runs

struct RunAnalysis {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::vector<GenerationSummary> summary;
    std::vector<EtvHistogram> histograms; // one per checkpoint
    std::vector<std::uint32_t> max_etv;   // per checkpoint
    std::vector<std::uint32_t> min_etv;   // per checkpoint
    std::size_t cut_edges = 0;
    RunAnomaly anomaly;
    std::vector<BirthRecord> records; // kept only when save_records is set
};

/// One seeded run: evolve, build the genealogy and snapshot ETVs at each checkpoint.
inline RunAnalysis analyze_run(const TspInstance& inst, const ExperimentConfig& cfg, std::size_t run) {
    GaConfig ga = cfg.ga;
    ga.seed = derive_seed(cfg.master_seed, run);
    auto result = genlab::run(inst, ga);

    RunAnalysis out;
    out.run = run;
    out.seed = ga.seed;
    const auto graph = build_graph(result.records);
    EtvOptions options;
    options.detach = cfg.detach;
    if (ga.edge_cap) {
        options.edge_cap = static_cast<std::uint32_t>(*ga.edge_cap);
    }
    EtvSweep sweep(graph, options);
    for (int t : cfg.effective_checkpoints()) {
        sweep.advance_to(t);
        const auto table = sweep.snapshot();
        out.histograms.push_back(histogram(table));
        out.max_etv.push_back(table.max());
        out.min_etv.push_back(table.min());
    }
    out.cut_edges = sweep.cuts().size();
    out.anomaly = scan_run(result.summary, result.records, ga.population_size);
    out.summary = std::move(result.summary);
    if (cfg.save_records) {
        out.records = std::move(result.records);
    }
    return out;
}

struct CheckpointResult {
    int t = 0;
    PooledDistribution dist;
    std::optional<QExpFit> fit;
    std::string fit_error;
    double mean_max_etv = 0.0;
    std::uint32_t min_etv = 0;
    std::uint32_t max_etv = 0;
};

struct TrendRow {
    std::string metric;
    MetricSeries series;
    std::optional<PowerTrendParams> params;
    std::string error;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::string instance_name;
    std::vector<RunAnalysis> runs;
    std::vector<CheckpointResult> checkpoints;
    std::vector<TrendRow> trends;
    std::optional<CorrelationReport> correlations;
    AnomalyReport anomaly;
    double wall_seconds = 0.0;

    const CheckpointResult& at(int t) const {
        for (const auto& c : checkpoints) {
            if (c.t == t) {
                return c;
            }
        }
        throw std::out_of_range("no checkpoint " + std::to_string(t));
    }

    const TrendRow& trend(const std::string& metric) const {
        for (const auto& r : trends) {
            if (r.metric == metric) {
                return r;
            }
        }
        throw std::out_of_range("no trend " + metric);
    }
};

inline std::vector<RunAnalysis> execute_runs(const TspInstance& inst, const ExperimentConfig& cfg) {
    std::vector<RunAnalysis> runs(cfg.runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < cfg.runs; r = next++) {
            try {
                runs[r] = analyze_run(inst, cfg, r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const std::size_t threads = std::min(cfg.workers, cfg.runs);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return runs;
}

/// Pools, fits and trend-fits the per-run outputs.
inline ExperimentResult analyze_experiment(const ExperimentConfig& cfg, std::string instance_name,
                                           std::vector<RunAnalysis> runs) {
    ExperimentResult res;
    res.config = cfg;
    res.instance_name = std::move(instance_name);
    res.runs = std::move(runs);
    const auto cps = cfg.effective_checkpoints();

    for (std::size_t k = 0; k < cps.size(); ++k) {
        CheckpointResult c;
        c.t = cps[k];
        std::vector<EtvHistogram> hists;
        std::vector<std::uint32_t> maxima;
        c.min_etv = std::numeric_limits<std::uint32_t>::max();
        for (const auto& r : res.runs) {
            hists.push_back(r.histograms[k]);
            maxima.push_back(r.max_etv[k]);
            c.min_etv = std::min(c.min_etv, r.min_etv[k]);
            c.max_etv = std::max(c.max_etv, r.max_etv[k]);
        }
        c.dist = pool(hists);
        c.mean_max_etv = max_etv_mean(maxima);
        try {
            c.fit = fit_q_exponential(c.dist);
        } catch (const FitError& e) {
            c.fit_error = e.what();
        }
        res.checkpoints.push_back(std::move(c));
    }

    MetricSeries etv{"ETV", {}, {}}, x0{"x0", {}, {}}, q{"q", {}, {}}, gamma{"gamma", {}, {}};
    for (const auto& c : res.checkpoints) {
        if (!c.fit || !c.fit->gamma) {
            continue;
        }
        const double t = c.t;
        etv.checkpoints.push_back(t);
        etv.values.push_back(c.mean_max_etv);
        x0.checkpoints.push_back(t);
        x0.values.push_back(c.fit->params.x0);
        q.checkpoints.push_back(t);
        q.values.push_back(c.fit->params.q);
        gamma.checkpoints.push_back(t);
        gamma.values.push_back(*c.fit->gamma);
    }
    for (auto* s : {&etv, &x0, &q, &gamma}) {
        TrendRow row;
        row.metric = s->metric;
        row.series = *s;
        try {
            row.params = fit_trend(*s);
        } catch (const std::invalid_argument& e) {
            row.error = e.what();
        }
        res.trends.push_back(std::move(row));
    }
    if (etv.values.size() >= 2) {
        res.correlations = correlation_signs(etv, q, x0, gamma);
    }

    for (const auto& r : res.runs) {
        res.anomaly.runs.push_back(r.anomaly);
        res.anomaly.balanced_runs += r.anomaly.balance_generation ? 1 : 0;
        res.anomaly.clones_only_runs += r.anomaly.clones_only_after_balance ? 1 : 0;
    }
    const auto& last = res.checkpoints.back();
    if (last.fit) {
        res.anomaly.tail = tail_mass_anomaly(last.dist, last.fit->params, cfg.ga.population_size);
    }
    return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const TspInstance& inst) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    auto runs = execute_runs(inst, cfg);
    auto res = analyze_experiment(cfg, inst.name, std::move(runs));
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    return run_experiment(cfg, load_tsplib(cfg.instance_path));
}

// ---------------------------------------------------------------- outputs

struct RunManifest {
    std::string config_echo;
    std::vector<std::uint64_t> seeds;
    std::map<int, std::vector<std::string>> checkpoint_files;
    std::vector<std::string> files;
    std::string version;
    double wall_seconds = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config"] = config_echo;
        j["seeds"] = seeds;
        nlohmann::json cps = nlohmann::json::object();
        for (const auto& [t, paths] : checkpoint_files) {
            cps[std::to_string(t)] = paths;
        }
        j["checkpoint_files"] = cps;
        j["files"] = files;
        j["version"] = version;
        j["wall_clock_seconds"] = wall_seconds;
        return j;
    }
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

inline std::string checkpoint_tag(int t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "t%04d", t);
    return buf;
}

} // namespace detail

/// Creates `dir` and checks that it accepts files.
inline void prepare_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory " + dir.string());
    }
    const auto probe = dir / ".genlab-write-probe";
    {
        std::ofstream out(probe);
        if (!out) {
            throw std::runtime_error("output directory is not writable: " + dir.string());
        }
    }
    std::filesystem::remove(probe, ec);
}

inline void write_fit_series(std::ostream& out, const ExperimentResult& res, int digits = 17) {
    out << "# t\tq\tx0\tp0\tgamma\tscore\tmax_etv_mean\tstatus\n";
    for (const auto& c : res.checkpoints) {
        out << c.t << '\t';
        if (c.fit) {
            const auto& p = c.fit->params;
            out << detail::fmt(p.q, digits) << '\t' << detail::fmt(p.x0, digits) << '\t' << detail::fmt(p.p0, digits)
                << '\t' << (c.fit->gamma ? detail::fmt(*c.fit->gamma, digits) : std::string("-")) << '\t'
                << detail::fmt(c.fit->score, digits) << '\t' << detail::fmt(c.mean_max_etv, digits) << "\tok\n";
        } else {
            out << "-\t-\t-\t-\t-\t" << detail::fmt(c.mean_max_etv, digits) << "\tfit-error\n";
        }
    }
}

struct FitSeriesRow {
    int t = 0;
    std::optional<double> q, x0, p0, gamma, score;
    double max_etv_mean = 0.0;
};

inline std::vector<FitSeriesRow> read_fit_series(std::istream& in) {
    std::vector<FitSeriesRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::vector<std::string> cells;
        std::string cell;
        while (ls >> cell) {
            cells.push_back(cell);
        }
        if (cells.size() < 7) {
            throw std::runtime_error("fit series line '" + line + "' has too few columns");
        }
        auto num = [&](const std::string& s) -> std::optional<double> {
            if (s == "-") {
                return std::nullopt;
            }
            return detail::parse_number<double>("fit series", s);
        };
        FitSeriesRow r;
        r.t = detail::parse_number<int>("fit series", cells[0]);
        r.q = num(cells[1]);
        r.x0 = num(cells[2]);
        r.p0 = num(cells[3]);
        r.gamma = num(cells[4]);
        r.score = num(cells[5]);
        r.max_etv_mean = *num(cells[6]);
        rows.push_back(r);
    }
    return rows;
}

/// Table-1-shaped summary from a fit series: one power-trend row per metric.
inline std::vector<TrendRow> trends_from_fit_series(const std::vector<FitSeriesRow>& rows) {
    MetricSeries etv{"ETV", {}, {}}, x0{"x0", {}, {}}, q{"q", {}, {}}, gamma{"gamma", {}, {}};
    for (const auto& r : rows) {
        if (!r.q || !r.x0 || !r.gamma) {
            continue;
        }
        for (auto [s, v] : {std::pair{&etv, r.max_etv_mean}, std::pair{&x0, *r.x0},
                            std::pair{&q, *r.q}, std::pair{&gamma, *r.gamma}}) {
            s->checkpoints.push_back(r.t);
            s->values.push_back(v);
        }
    }
    std::vector<TrendRow> out;
    for (auto* s : {&etv, &x0, &q, &gamma}) {
        TrendRow row;
        row.metric = s->metric;
        row.series = *s;
        try {
            row.params = fit_trend(*s);
        } catch (const std::invalid_argument& e) {
            row.error = e.what();
        }
        out.push_back(std::move(row));
    }
    return out;
}

inline void write_trend_table(std::ostream& out, const std::vector<TrendRow>& trends) {
    out << "# metric\ta\tb\tc\tR\n";
    for (const auto& row : trends) {
        if (row.params) {
            out << row.metric << '\t' << detail::fmt(row.params->a, 10) << '\t'
                << detail::fmt(row.params->b, 10) << '\t' << detail::fmt(row.params->c, 10) << '\t'
                << detail::fmt(row.params->r, 10) << '\n';
        } else {
            out << row.metric << "\t-\t-\t-\t-\t# " << row.error << '\n';
        }
    }
}

inline void write_anomaly_report(std::ostream& out, const ExperimentResult& res) {
    out << "# run\tseed\tbalance_generation\tclones_only_after_balance\tmax_clone_chain\tmax_clones_only_streak\n";
    for (const auto& r : res.runs) {
        const auto& a = r.anomaly;
        out << r.run << '\t' << r.seed << '\t'
            << (a.balance_generation ? std::to_string(*a.balance_generation) : std::string("-")) << '\t'
            << (a.clones_only_after_balance ? 1 : 0) << '\t' << a.max_clone_chain << '\t'
            << a.max_clones_only_streak << '\n';
    }
    out << "# balanced_runs=" << res.anomaly.balanced_runs
        << " clones_only_runs=" << res.anomaly.clones_only_runs << '\n';
    if (res.anomaly.tail) {
        const auto& t = *res.anomaly.tail;
        out << "# tail x>=" << t.threshold_x << " observed=" << detail::fmt(t.observed_mass, 10)
            << " predicted=" << detail::fmt(t.predicted_mass, 10) << " ratio=" << detail::fmt(t.ratio, 10)
            << " flagged=" << (t.flagged ? 1 : 0) << '\n';
    }
}

/// Writes every output file under `dir` and the manifest last.
inline RunManifest write_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    prepare_output_dir(dir);
    fs::create_directories(dir / "dist");
    fs::create_directories(dir / "plot");

    RunManifest m;
    m.config_echo = format_config(res.config);
    for (const auto& r : res.runs) {
        m.seeds.push_back(r.seed);
    }
    m.version = version_string;
    m.wall_seconds = res.wall_seconds;

    for (const auto& c : res.checkpoints) {
        const std::string tag = detail::checkpoint_tag(c.t);
        const std::string dist_rel = "dist/dist_" + tag + ".txt";
        {
            auto out = detail::open_output(dir / dist_rel);
            write_distribution(out, c.dist);
        }
        m.checkpoint_files[c.t].push_back(dist_rel);
        if (c.fit) {
            for (auto [scale, name] : {std::pair{PlotScale::QLog, "qlog"}, std::pair{PlotScale::LogLog, "loglog"}}) {
                const std::string rel = std::string("plot/") + name + "_" + tag + ".txt";
                auto out = detail::open_output(dir / rel);
                write_plot(out, emit_plot_data(c.dist, *c.fit, scale), scale);
                m.checkpoint_files[c.t].push_back(rel);
            }
        }
    }
    {
        auto out = detail::open_output(dir / "fits.tsv");
        write_fit_series(out, res);
        m.files.push_back("fits.tsv");
    }
    {
        auto out = detail::open_output(dir / "trend.tsv");
        write_trend_table(out, res.trends);
        m.files.push_back("trend.tsv");
    }
    {
        auto out = detail::open_output(dir / "anomaly.tsv");
        write_anomaly_report(out, res);
        m.files.push_back("anomaly.tsv");
    }
    if (res.config.save_records) {
        fs::create_directories(dir / "records");
        for (const auto& r : res.runs) {
            const std::string rel = "records/run_" + std::to_string(r.run) + ".txt";
            auto out = detail::open_output(dir / rel);
            write_records(out, r.records);
            m.files.push_back(rel);
        }
    }
    {
        auto out = detail::open_output(dir / "manifest.json");
        out << m.to_json().dump(2) << '\n';
    }
    return m;
}

} // namespace genlab
