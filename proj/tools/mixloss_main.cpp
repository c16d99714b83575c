// Experiment driver: single trainings, learning-rate sweeps, comparison
// grids over datasets x seeds x methods, escape studies and report
// generation. Exit codes: 0 success, 1 usage error, 2 partial failures,
// 3 total failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "mixloss/csv.hpp"
#include "mixloss/experiment.hpp"

namespace fs = std::filesystem;
using namespace mixloss;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kPartial = 2;
constexpr int kTotal = 3;

ExperimentConfig load_config(const std::string& path, const std::string& out_override,
                             std::uint64_t seed_override, bool has_seed_override) {
    ExperimentConfig cfg = ExperimentConfig::load(path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (has_seed_override) cfg.seeds = {seed_override};
    return cfg;
}

int run_train(const ExperimentConfig& cfg, bool dry_run, bool sweep_all) {
    cfg.validate();
    if (dry_run) {
        std::cout << "train plan: dataset=" << cfg.datasets[0].name
                  << " method=" << cfg.methods[0].name
                  << " arch=" << ClassifierModel::arch_name(cfg.architectures[0])
                  << " lrs=" << cfg.lrs.size() << " -> " << cfg.output_dir << "\n";
        return kOk;
    }
    fs::create_directories(cfg.output_dir);

    Dataset data = cfg.datasets[0].materialize();
    SplitResult sr = split(data, cfg.split);
    if (cfg.normalize) zscore_normalize(sr.train, {&sr.val, &sr.test});
    DataSplits splits{sr.train, sr.val, sr.test};

    const std::uint64_t seed = cfg.seeds[0];
    const MethodSpec& method = cfg.methods[0];
    ModelFactory factory = [&]() {
        RandomSource rng = RandomSource(seed).split(0);
        return ClassifierModel::init(cfg.architectures[0], sr.train.input_dim(), sr.train.classes,
                                     rng);
    };
    TrainConfig tcfg = cfg.trainer_template;
    tcfg.method = method.method;
    tcfg.seed = RandomSource::mix(seed, 0x7261696e);

    std::vector<double> lrs = sweep_all ? cfg.lrs : std::vector<double>{cfg.lrs[0]};
    if (method.volume_matched)
        for (double& lr : lrs) lr = volume_matched_ce_lr(lr, method.volume_weights);

    const SweepResult sweep = lr_sweep(factory, splits, tcfg, lrs);
    for (std::size_t i = 0; i < sweep.reports.size(); ++i)
        if (!sweep.reports[i].failed)
            sweep.reports[i].write_csv(cfg.output_dir + "/" + cfg.datasets[0].name + "__" +
                                       ClassifierModel::arch_name(cfg.architectures[0]) + "__" +
                                       method.name + "__lr" + format_double(sweep.lrs[i]) + "__seed" +
                                       std::to_string(seed) + ".csv");

    const RunReport& best = sweep.best();
    if (!best.best_parameters.empty()) {
        ClassifierModel m = factory();
        m.set_parameters(best.best_parameters);
        m.save_checkpoint(cfg.output_dir + "/best.ckpt");
    }
    std::cout << "best lr " << sweep.lrs[sweep.best_index] << " val "
              << best.val_accuracy_at_best << " test " << best.test_accuracy_at_best
              << " (epoch " << best.best_val_epoch << ")\n";
    return kOk;
}

int run_grid_cmd(const ExperimentConfig& cfg, bool dry_run) {
    cfg.validate();
    if (dry_run) {
        std::cout << "grid plan: " << cfg.architectures.size() << " arch x "
                  << cfg.datasets.size() << " datasets x " << cfg.methods.size() << " methods x "
                  << cfg.seeds.size() << " seeds = "
                  << cfg.architectures.size() * cfg.datasets.size() * cfg.methods.size() *
                         cfg.seeds.size()
                  << " cells -> " << cfg.output_dir << "\n";
        std::cout << cfg.canonical_json() << "\n";
        return kOk;
    }
    const GridResult grid = run_grid(cfg);
    write_report(grid, cfg);
    std::size_t resumed = 0;
    for (const auto& c : grid.cells)
        if (c.resumed) ++resumed;
    std::cout << "grid: " << grid.cells.size() << " cells, " << resumed << " resumed, "
              << grid.failures << " failed; tables in " << cfg.output_dir << "\n";
    if (grid.complete_failure()) return kTotal;
    return grid.failures > 0 ? kPartial : kOk;
}

int run_report_cmd(const std::string& grid_dir, const std::string& baseline) {
    ExperimentConfig cfg;
    cfg.output_dir = grid_dir;
    cfg.baseline_method = baseline;

    GridResult grid;
    bool found = false;
    for (const std::string arch : {"linear", "mlp1"}) {
        const std::string path = grid_dir + "/accuracy_" + arch + ".csv";
        if (!fs::exists(path)) continue;
        grid.aggregated[arch] = read_accuracy_table(path);
        found = true;
    }
    if (!found) {
        std::cerr << "report: no accuracy tables under " << grid_dir << "\n";
        return kTotal;
    }
    write_report(grid, cfg);
    for (const auto& [arch, table] : grid.aggregated) {
        std::cout << "== " << arch << " ==\n";
        std::ifstream f(grid_dir + "/report/" + arch + "/table.txt");
        std::cout << f.rdbuf();
    }
    return kOk;
}

int run_escape_cmd(const ExperimentConfig& cfg, bool dry_run) {
    if (dry_run) {
        std::cout << "escape plan: mode=" << (cfg.escape.landscape_mode ? "landscape" : "model")
                  << " betas=" << cfg.escape.betas.size() << " trajectories="
                  << cfg.escape.sde.trajectories << "\n";
        return kOk;
    }
    fs::create_directories(cfg.output_dir);
    const auto rows = escape_experiment(cfg);
    const std::string path = cfg.output_dir + "/escape.csv";
    write_escape_csv(rows, path);
    std::cout << "escape table -> " << path << "\n";
    for (const auto& r : rows)
        std::printf("%-12s beta=%-6g trace=%-12g est=%-12g sim=%-12g +-%g\n", r.method.c_str(),
                    r.beta, r.trace_term, r.ee_estimate, r.ee_simulated, r.stderr_value);
    return kOk;
}

int run_gen_data(const std::string& out, int classes, int per_class, int dim, double separation,
                 std::uint64_t seed) {
    const Dataset d = make_blobs(classes, per_class, dim, separation, seed);
    write_csv(d, out);
    std::cout << "wrote " << d.size() << " samples (" << classes << " classes, " << dim
              << " features) to " << out << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scheduled CE+EL loss training, escape analysis and benchmark statistics"};
    app.require_subcommand(0, 1);

    std::string config_path, out_dir, grid_dir, baseline = "ce", gen_out = "blobs.csv";
    std::uint64_t seed_override = 0;
    bool dry_run = false, config_reference = false;
    int gen_classes = 2, gen_per_class = 50, gen_dim = 2;
    double gen_separation = 2.0;
    std::uint64_t gen_seed = 0;

    app.add_flag("--config-reference", config_reference, "Print every config field and default");

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config)
            sub->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
        sub->add_option("-o,--out", out_dir, "Output directory override");
        sub->add_flag("--dry-run", dry_run, "Print the plan, run nothing");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "Train one (dataset, method) at the first lr");
    add_common(train_cmd, true);
    CLI::Option* train_seed = train_cmd->add_option("--seed", seed_override, "Seed override");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Learning-rate sweep for one (dataset, method)");
    add_common(sweep_cmd, true);
    CLI::Option* sweep_seed = sweep_cmd->add_option("--seed", seed_override, "Seed override");

    CLI::App* grid_cmd = app.add_subcommand("grid", "Full methods x datasets x seeds comparison");
    add_common(grid_cmd, true);

    CLI::App* report_cmd = app.add_subcommand("report", "Regenerate reports from grid tables");
    report_cmd->add_option("-g,--grid-dir", grid_dir, "Grid output directory")->required();
    report_cmd->add_option("-b,--baseline", baseline, "Baseline method name");

    CLI::App* escape_cmd = app.add_subcommand("escape", "Noise covariance / escaping-efficiency study");
    add_common(escape_cmd, true);

    CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic blob dataset CSV");
    gen_cmd->add_option("-o,--out", gen_out, "Output CSV path");
    gen_cmd->add_option("--classes", gen_classes, "Class count");
    gen_cmd->add_option("--per-class", gen_per_class, "Samples per class");
    gen_cmd->add_option("--dim", gen_dim, "Feature dimension");
    gen_cmd->add_option("--separation", gen_separation, "Center separation");
    gen_cmd->add_option("--seed", gen_seed, "Generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (config_reference) {
        std::cout << config_reference_text();
        return kOk;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return kUsage;
    }

    try {
        if (train_cmd->parsed())
            return run_train(load_config(config_path, out_dir, seed_override, !train_seed->empty()),
                             dry_run, false);
        if (sweep_cmd->parsed())
            return run_train(load_config(config_path, out_dir, seed_override, !sweep_seed->empty()),
                             dry_run, true);
        if (grid_cmd->parsed())
            return run_grid_cmd(load_config(config_path, out_dir, 0, false), dry_run);
        if (report_cmd->parsed()) return run_report_cmd(grid_dir, baseline);
        if (escape_cmd->parsed())
            return run_escape_cmd(load_config(config_path, out_dir, 0, false), dry_run);
        if (gen_cmd->parsed())
            return run_gen_data(gen_out, gen_classes, gen_per_class, gen_dim, gen_separation,
                                gen_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kTotal;
    }
    return kUsage;
}
