// Acceptance checks: prints one PASS/FAIL line per criterion, exits nonzero on any FAIL.
//
// Desk-scale dynamics run on data/rand42.tsp unless GENLAB_INSTANCE names
// another TSPLIB file.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

#include <genlab/genlab.hpp>

#include "genealogy_oracle.hpp"

using namespace genlab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// ------------------------------------------------------------ criterion 1

void oracle_equivalence() {
    Rng rng(2024);
    int mismatches = 0;
    int snapshots = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto records = genlab_oracle::random_genealogy(rng, 40, 6);
        const auto g = build_graph(records);
        for (int horizon = 1; horizon <= g.generations(); ++horizon) {
            const auto expected = genlab_oracle::all_paths_oracle(records, horizon);
            const auto table = compute_etv_snapshot(g, horizon, EtvOptions{std::nullopt, false});
            ++snapshots;
            bool same = table.size() == expected.size();
            for (const auto& [id, value] : expected) {
                same = same && table.at(id) == value;
            }
            mismatches += same ? 0 : 1;
        }
    }
    report(1, "oracle equivalence", mismatches == 0,
           std::to_string(snapshots) + " snapshots on 200 genealogies, " + std::to_string(mismatches) +
               " mismatches");
}

// ------------------------------------------------------------ criterion 2

double total_mass(double q, double x0) {
    const auto p = QExpParams::normalized(q, x0);
    if (std::abs(q - 1.0) < q_unity_threshold) {
        boost::math::quadrature::exp_sinh<double> integrator;
        return integrator.integrate([&](double x) { return q_exponential(p, x); });
    }
    if (q < 1.0) {
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double x) { return q_exponential(p, x); }, 0.0, x0 / (1.0 - q), 15, 1e-14);
    }
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([&](double s) {
        const double v = q_exponential(p, x0 * std::expm1(s) / (q - 1.0));
        return v == 0.0 ? 0.0 : v * x0 * std::exp(s) / (q - 1.0);
    });
}

void qexp_identities() {
    double norm_err = 0.0;
    for (double q : {0.5, 0.9, 1.0, 1.2, 1.5, 1.9}) {
        for (double x0 : {0.3, 0.8, 5.0}) {
            norm_err = std::max(norm_err, std::abs(total_mass(q, x0) - 1.0));
        }
    }

    Rng rng(99);
    std::uniform_real_distribution<double> qd(0.1, 1.95);
    std::uniform_real_distribution<double> ld(std::log(1e-3), std::log(1e3));
    double inv_err = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double q = qd(rng);
        const double x = std::exp(ld(rng));
        inv_err = std::max(inv_err, std::abs(q_exp_function(q, q_logarithm(q, x)) / x - 1.0));
    }

    double lin_err = 0.0;
    for (double q : {0.6, 0.95, 1.05, 1.2, 1.5, 1.8}) {
        const auto p = QExpParams::normalized(q, 0.8);
        const double xmax = q < 1.0 ? 0.99 * p.x0 / (1.0 - q) : 200.0;
        for (int k = 0; k <= 100; ++k) {
            const double x = xmax * k / 100.0;
            const double lhs = q_logarithm(q, q_exponential(p, x));
            lin_err = std::max(lin_err, std::abs(lhs - linearized_form(p, x)) / std::max(1.0, std::abs(lhs)));
        }
    }

    double limit_err = 0.0;
    const auto exact = QExpParams::normalized(1.0, 0.8);
    for (double dq : {1e-7, -1e-7}) {
        const auto near = QExpParams::normalized(1.0 + dq, 0.8);
        for (double x : {0.0, 0.5, 1.0, 3.0, 10.0}) {
            limit_err = std::max(limit_err, std::abs(q_exponential(near, x) - q_exponential(exact, x)));
        }
    }

    const bool ok = norm_err <= 1e-6 && inv_err <= 1e-10 && lin_err <= 1e-12 && limit_err <= 1e-6;
    report(2, "q-exponential identities", ok,
           "normalization " + num(norm_err, 3) + ", inversion " + num(inv_err, 3) + ", linearization " +
               num(lin_err, 3) + ", q->1 limit " + num(limit_err, 3));
}

// ------------------------------------------------------------ criterion 3

void fit_recovery() {
    const auto truth = QExpParams::normalized(1.2, 0.8);
    std::vector<double> x, f;
    for (int k = 1; k <= 30; ++k) {
        x.push_back(k);
        f.push_back(q_exponential(truth, k));
    }
    const auto fit = fit_q_exponential(x, f, f);
    const double dq = std::abs(fit.params.q - 1.2);
    const double dx0 = std::abs(fit.params.x0 - 0.8) / 0.8;
    bool ok = dq <= 0.02 && dx0 <= 0.05;

    struct Row {
        const char* metric;
        double a, b, c;
    };
    const std::vector<Row> rows{{"ETV", -74.2, -0.2435, 50.35},
                                {"x0", 8.038, -1.525, 0.7696},
                                {"q", -6.306, -1.527, 1.196},
                                {"gamma", 795.3, -1.941, 5.169}};
    std::vector<double> t;
    for (int c : default_checkpoints()) {
        t.push_back(c);
    }
    double worst = 0.0;
    for (const auto& row : rows) {
        MetricSeries s{row.metric, t, {}};
        for (double tk : t) {
            s.values.push_back(row.a * std::pow(tk, row.b) + row.c);
        }
        const auto p = fit_trend(s);
        worst = std::max({worst, std::abs(p.a / row.a - 1.0), std::abs(p.b / row.b - 1.0),
                          std::abs(p.c / row.c - 1.0)});
    }
    ok = ok && worst <= 0.01;
    report(3, "fit recovery", ok,
           "|dq| " + num(dq, 3) + ", |dx0|/x0 " + num(dx0, 3) + ", worst trend parameter error " +
               num(100.0 * worst, 3) + "%");
}

// ------------------------------------------------------------ dynamics

struct Scenario {
    std::string name;
    ExperimentResult result;
};

ExperimentConfig desk_config(const std::string& instance, bool elitism, std::optional<int> max_age) {
    ExperimentConfig cfg;
    cfg.instance_path = instance;
    cfg.ga.population_size = 100;
    cfg.ga.max_generations = 500;
    cfg.ga.elitism = elitism;
    cfg.ga.max_age = max_age;
    cfg.runs = 20;
    cfg.master_seed = 1;
    cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    return cfg;
}

std::vector<double> column(const ExperimentResult& r, const std::string& metric) {
    return r.trend(metric).series.values;
}

void print_series(const Scenario& s) {
    std::printf("# %s: t q x0 gamma mean_max_etv max_etv\n", s.name.c_str());
    for (const auto& c : s.result.checkpoints) {
        if (c.fit) {
            std::printf("#   %4d %.4f %.4f %.4f %.3f %u\n", c.t, c.fit->params.q, c.fit->params.x0,
                        c.fit->gamma.value_or(NAN), c.mean_max_etv, c.max_etv);
        } else {
            std::printf("#   %4d fit failed (%s) %.3f %u\n", c.t, c.fit_error.c_str(), c.mean_max_etv, c.max_etv);
        }
    }
    std::fflush(stdout);
}

std::optional<double> gamma_at(const ExperimentResult& r, int t) {
    const auto& c = r.at(t);
    return c.fit ? c.fit->gamma : std::nullopt;
}

void no_elitism_dynamics(const ExperimentResult& r) {
    const auto& t = r.trend("q").series.checkpoints;
    const double s_q = spearman(column(r, "q"), t);
    const double s_x0 = spearman(column(r, "x0"), t);
    const double s_g = spearman(column(r, "gamma"), t);
    const bool a = s_q >= 0.9 && s_x0 <= -0.9 && s_g <= -0.9;

    double min_r = 1.0;
    bool b = true;
    for (const auto& row : r.trends) {
        if (!row.params) {
            b = false;
            min_r = 0.0;
            continue;
        }
        min_r = std::min(min_r, row.params->r);
        b = b && row.params->r >= 0.95;
    }

    const auto& last = r.at(500);
    const double q500 = last.fit ? last.fit->params.q : NAN;
    const double g500 = gamma_at(r, 500).value_or(NAN);
    const bool c = q500 >= 1.1 && q500 <= 1.3 && g500 >= 4.0 && g500 <= 6.5;
    const bool d = last.mean_max_etv < 60.0;

    report(4, "no-elitism dynamics", a && b && c && d,
           std::string("(a) ") + (a ? "ok" : "fail") + " spearman q " + num(s_q, 3) + ", x0 " + num(s_x0, 3) +
               ", gamma " + num(s_g, 3) + "; (b) " + (b ? "ok" : "fail") + " min trend R " + num(min_r, 4) +
               "; (c) " + (c ? "ok" : "fail") + " q(500) " + num(q500) + ", gamma(500) " + num(g500) + "; (d) " +
               (d ? "ok" : "fail") + " mean max ETV(500) " + num(last.mean_max_etv));
}

void elitism_dynamics(const ExperimentResult& plain, const ExperimentResult& elite) {
    const auto n = static_cast<std::uint32_t>(elite.config.ga.population_size);
    std::optional<int> reached;
    for (const auto& c : elite.checkpoints) {
        if (c.max_etv >= n) {
            reached = c.t;
            break;
        }
    }
    const bool a = reached && *reached <= 300;
    const double g_e = gamma_at(elite, 500).value_or(NAN);
    const double g_p = gamma_at(plain, 500).value_or(NAN);
    const bool b = g_e >= 2.0 && g_e <= 3.5;
    const bool c = g_p - g_e >= 1.5;
    std::uint32_t top = 0;
    for (const auto& cp : elite.checkpoints) {
        top = std::max(top, cp.max_etv);
    }
    report(5, "elitism dynamics", a && b && c,
           std::string(a ? "ok" : "fail") + " max ETV = N " +
               (reached ? "at t=" + std::to_string(*reached) : "never (largest " + std::to_string(top) + ")") +
               "; " + (b ? "ok" : "fail") + " gamma(500) " + num(g_e) + "; " + (c ? "ok" : "fail") +
               " gamma gap " + num(g_p - g_e));
}

void anomalies(const ExperimentResult& elite, const ExperimentResult& aged) {
    const auto& rep = elite.anomaly;
    const bool balance = rep.balanced_runs >= 15;
    const bool clones_only = rep.balanced_runs > 0 && rep.clones_only_runs == rep.balanced_runs;
    const bool tail = rep.tail && rep.tail->flagged;
    int worst_streak = 0;
    for (const auto& a : aged.anomaly.runs) {
        worst_streak = std::max(worst_streak, a.max_clones_only_streak);
    }
    const int m = aged.config.ga.max_age.value_or(0);
    const bool aging = worst_streak <= m;
    report(6, "anomaly reproduction", balance && clones_only && tail && aging,
           std::string(balance ? "ok" : "fail") + " balance in " + std::to_string(rep.balanced_runs) + "/" +
               std::to_string(rep.runs.size()) + " runs; " + (clones_only ? "ok" : "fail") +
               " clones-only after balance in " + std::to_string(rep.clones_only_runs) + " runs; " +
               (tail ? "ok" : "fail") + " tail ratio " + (rep.tail ? num(rep.tail->ratio) : std::string("n/a")) +
               "; " + (aging ? "ok" : "fail") + " m=" + std::to_string(m) + " longest clones-only streak " +
               std::to_string(worst_streak));
}

// ------------------------------------------------------------ criterion 7

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

bool identical_outputs(const std::string& instance, std::string& detail) {
    ExperimentConfig cfg;
    cfg.instance_path = instance;
    cfg.ga.population_size = 40;
    cfg.ga.max_generations = 60;
    cfg.ga.elitism = true;
    cfg.runs = 4;
    cfg.master_seed = 12345;
    cfg.save_records = true;
    cfg.workers = 2;
    const auto base = fs::temp_directory_path() / "genlab_acceptance";
    fs::remove_all(base);
    for (const char* sub : {"a", "b"}) {
        prepare_output_dir(base / sub);
        write_outputs(run_experiment(cfg), base / sub);
    }
    const auto listing = [&](const fs::path& dir) {
        std::vector<std::string> out;
        for (const auto& e : fs::recursive_directory_iterator(dir)) {
            if (e.is_regular_file()) {
                out.push_back(fs::relative(e.path(), dir).string());
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto files = listing(base / "a");
    bool same = files == listing(base / "b");
    std::size_t compared = 0;
    for (const auto& f : files) {
        if (f == "manifest.json") {
            auto ja = nlohmann::json::parse(slurp(base / "a" / f));
            auto jb = nlohmann::json::parse(slurp(base / "b" / f));
            ja.erase("wall_clock_seconds");
            jb.erase("wall_clock_seconds");
            if (ja != jb) {
                std::printf("# differs: %s\n", f.c_str());
                same = false;
            }
        } else if (slurp(base / "a" / f) != slurp(base / "b" / f)) {
            std::printf("# differs: %s\n", f.c_str());
            same = false;
        }
        ++compared;
    }
    fs::remove_all(base);
    detail = std::to_string(compared) + " files identical across repeat";
    return same;
}

void determinism_and_bounds(const std::string& instance, const std::vector<const Scenario*>& scenarios) {
    std::string det;
    const bool same = identical_outputs(instance, det);
    bool bounds = true;
    double sum_err = 0.0;
    for (const auto* s : scenarios) {
        const auto n = static_cast<std::uint32_t>(s->result.config.ga.population_size);
        for (const auto& r : s->result.runs) {
            for (std::size_t k = 0; k < r.max_etv.size(); ++k) {
                bounds = bounds && r.min_etv[k] >= 1 && r.max_etv[k] <= n;
            }
        }
        for (const auto& c : s->result.checkpoints) {
            const double sum = std::accumulate(c.dist.frequency.begin(), c.dist.frequency.end(), 0.0);
            sum_err = std::max(sum_err, std::abs(sum - 1.0));
        }
    }
    const bool sums = sum_err <= 1e-12;
    report(7, "determinism and bounds", same && bounds && sums,
           std::string(same ? "ok " : "fail ") + det + "; " + (bounds ? "ok" : "fail") + " 1 <= ETV <= N; " +
               (sums ? "ok" : "fail") + " pooled sum error " + num(sum_err, 3));
}

} // namespace

int main() {
    const char* env = std::getenv("GENLAB_INSTANCE");
    const std::string instance = env && *env ? env : std::string(GENLAB_DATA) + "/rand42.tsp";

    oracle_equivalence();
    qexp_identities();
    fit_recovery();

    std::printf("# instance %s, N=100, t=500, R=20\n", instance.c_str());
    std::fflush(stdout);
    const auto inst = load_tsplib(instance);
    Scenario plain{"no elitism", run_experiment(desk_config(instance, false, std::nullopt), inst)};
    Scenario elite{"elitism", run_experiment(desk_config(instance, true, std::nullopt), inst)};
    Scenario aged{"elitism m=2", run_experiment(desk_config(instance, true, 2), inst)};
    for (const auto* s : {&plain, &elite, &aged}) {
        print_series(*s);
    }

    no_elitism_dynamics(plain.result);
    elitism_dynamics(plain.result, elite.result);
    anomalies(elite.result, aged.result);
    determinism_and_bounds(instance, {&plain, &elite, &aged});

    std::printf("%d of 7 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
