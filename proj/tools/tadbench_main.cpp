#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tadbench/config.hpp"
#include "tadbench/error.hpp"
#include "tadbench/harness.hpp"
#include "tadbench/io_util.hpp"

namespace {

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& flag) {
    std::vector<double> values;
    for (const std::string& field : tad::split_on(text, ',')) {
        double v = 0.0;
        const auto res =
            std::from_chars(field.data(), field.data() + field.size(), v);
        if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
            throw tad::ConfigError(flag + ": cannot parse '" + field +
                                   "' as a number");
        values.push_back(v);
    }
    return values;
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    bool allow_subsample = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "run config file (JSON)")
        ->required();
    cmd->add_option("--seed", opts.seed, "override the config's seed list");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
    cmd->add_flag("--allow-subsample", opts.allow_subsample,
                  "permit attacking a subset of the test set");
}

tad::RunConfig load_config(const CommonOpts& opts) {
    tad::RunConfig cfg = tad::RunConfig::load(opts.config_path);
    if (opts.seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(opts.seed)};
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.allow_subsample) cfg.allow_subsample = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"train, attack, and report on small text classifiers"};
    app.require_subcommand(1);

    CommonOpts train_opts, attack_opts, sweep_opts, bench_opts;
    std::string checkpoint_path;
    std::string grid_text = "1,5,10,20";
    std::string defences_text =
        "baseline,sls,als,flooding,ttso,ttsopp,pgd,freelb,tavat";
    std::string report_dir;

    CLI::App* cmd_tr = app.add_subcommand("train", "train one model per seed");
    add_common(cmd_tr, train_opts);

    CLI::App* cmd_at =
        app.add_subcommand("attack", "attack a trained checkpoint");
    add_common(cmd_at, attack_opts);
    cmd_at->add_option("--checkpoint", checkpoint_path, "checkpoint JSON file")
        ->required();

    CLI::App* cmd_sw = app.add_subcommand(
        "sweep-temp", "train+attack over a temperature grid");
    add_common(cmd_sw, sweep_opts);
    cmd_sw->add_option("--grid", grid_text, "comma-separated temperatures");

    CLI::App* cmd_rb = app.add_subcommand(
        "runtime-bench", "wall-time multipliers per defence");
    add_common(cmd_rb, bench_opts);
    cmd_rb->add_option("--defences", defences_text,
                       "comma-separated defence names");

    CLI::App* cmd_rp =
        app.add_subcommand("report", "render eval CSVs as markdown");
    cmd_rp->add_option("--dir", report_dir, "directory with *_eval.csv files")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (cmd_tr->parsed()) {
            const tad::RunConfig cfg = load_config(train_opts);
            for (std::uint64_t seed : cfg.seeds) {
                const tad::TrainOutput out = tad::cmd_train(cfg, seed);
                std::cout << out.checkpoint_path << "\n"
                          << out.stats_csv_path << "\n";
            }
        } else if (cmd_at->parsed()) {
            const tad::RunConfig cfg = load_config(attack_opts);
            const tad::AttackOutput out = tad::cmd_attack(cfg, checkpoint_path);
            std::cout << out.eval_csv_path << "\n";
            for (const auto& p : out.transcript_paths) std::cout << p << "\n";
        } else if (cmd_sw->parsed()) {
            const tad::RunConfig cfg = load_config(sweep_opts);
            const std::vector<double> grid =
                parse_double_list(grid_text, "--grid");
            tad::cmd_sweep_temperature(cfg, grid);
            std::cout << (cfg.out_dir + "/sweep.csv") << "\n";
        } else if (cmd_rb->parsed()) {
            const tad::RunConfig cfg = load_config(bench_opts);
            const std::vector<std::string> defences =
                tad::split_on(defences_text, ',');
            const std::vector<tad::BenchRow> rows =
                tad::cmd_runtime_bench(cfg, defences);
            for (const auto& r : rows) {
                char line[128];
                std::snprintf(line, sizeof(line), "%-10s x%.1f", r.defence.c_str(),
                              r.multiplier);
                std::cout << line << "\n";
            }
        } else if (cmd_rp->parsed()) {
            std::cout << tad::cmd_report(report_dir);
        }
    } catch (const tad::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
