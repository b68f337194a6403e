// genlab: run GA genealogy experiments and analyze ETV distributions.
//
//   genlab run   --config exp.cfg [--seed S] [--workers K] [--out DIR]
//   genlab etv   --records run_0.txt [--horizon T] [--no-detach] [--edge-cap C]
//   genlab fit   --dist dist_t0100.txt
//   genlab trend --fits fits.tsv

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <genlab/genlab.hpp>

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    return in;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> workers, std::optional<std::string> out_dir) {
    auto cfg = genlab::load_config(config_path);
    if (seed) {
        cfg.master_seed = *seed;
    }
    if (workers) {
        cfg.workers = *workers;
    }
    if (out_dir) {
        cfg.output_dir = *out_dir;
    }
    cfg.validate();
    const auto inst = genlab::load_tsplib(cfg.instance_path);
    genlab::prepare_output_dir(cfg.output_dir);

    const auto result = genlab::run_experiment(cfg, inst);
    const auto manifest = genlab::write_outputs(result, cfg.output_dir);

    std::cout << "instance " << inst.name << " (" << inst.n << " cities), " << cfg.runs << " runs, "
              << cfg.ga.max_generations << " generations\n";
    genlab::write_fit_series(std::cout, result, 6);
    genlab::write_trend_table(std::cout, result.trends);
    if (cfg.ga.elitism) {
        std::cout << "fitness balance reached in " << result.anomaly.balanced_runs << " of " << cfg.runs
                  << " runs\n";
    }
    std::cout << "wrote " << cfg.output_dir << "/manifest.json ("
              << manifest.checkpoint_files.size() << " checkpoints)\n";
    return 0;
}

int cmd_etv(const std::string& records_path, std::optional<int> horizon, bool no_detach,
            std::optional<std::uint32_t> edge_cap) {
    auto in = open_input(records_path);
    const auto records = genlab::read_records(in);
    const auto graph = genlab::build_graph(records);
    genlab::EtvOptions options;
    options.detach = !no_detach;
    options.edge_cap = edge_cap;
    const auto table = genlab::compute_etv_snapshot(graph, horizon.value_or(graph.generations()), options);
    genlab::write_etv_table(std::cout, table);
    return 0;
}

int cmd_fit(const std::string& dist_path) {
    auto in = open_input(dist_path);
    const auto dist = genlab::read_distribution(in);
    const auto fit = genlab::fit_q_exponential(dist);
    std::printf("q\tx0\tp0\tgamma\tscore\n%.10g\t%.10g\t%.10g\t%s\t%.10g\n", fit.params.q, fit.params.x0,
                fit.params.p0, fit.gamma ? std::to_string(*fit.gamma).c_str() : "-", fit.score);
    return 0;
}

int cmd_trend(const std::string& fits_path) {
    auto in = open_input(fits_path);
    const auto rows = genlab::read_fit_series(in);
    genlab::write_trend_table(std::cout, genlab::trends_from_fit_series(rows));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GA genealogy and ETV power-law analysis"};
    app.set_version_flag("--version", std::string(genlab::version_string));
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;
    auto* run = app.add_subcommand("run", "execute an experiment from a config file");
    run->add_option("--config", config_path, "key = value experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "master seed (overrides config)");
    run->add_option("--workers", workers, "parallel runs (overrides config)")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "output directory (overrides config)");

    std::string records_path;
    std::optional<int> horizon;
    bool no_detach = false;
    std::optional<std::uint32_t> edge_cap;
    auto* etv = app.add_subcommand("etv", "ETV table from a birth-record file");
    etv->add_option("--records", records_path, "birth-record file")->required()->check(CLI::ExistingFile);
    etv->add_option("--horizon", horizon, "snapshot generation (default: last)");
    etv->add_flag("--no-detach", no_detach, "keep hitchhiking edges");
    etv->add_option("--edge-cap", edge_cap, "cap on per-generation descendant counts");

    std::string dist_path;
    auto* fit = app.add_subcommand("fit", "q-exponential fit of a distribution file");
    fit->add_option("--dist", dist_path, "two-column x/frequency file")->required()->check(CLI::ExistingFile);

    std::string fits_path;
    auto* trend = app.add_subcommand("trend", "power-trend summary from a fit series");
    trend->add_option("--fits", fits_path, "fits.tsv from a run")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config_path, seed, workers, out_dir);
        }
        if (*etv) {
            return cmd_etv(records_path, horizon, no_detach, edge_cap);
        }
        if (*fit) {
            return cmd_fit(dist_path);
        }
        if (*trend) {
            return cmd_trend(fits_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "genlab: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
