#include "mixloss/experiment.hpp"

#include <atomic>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "mixloss/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mixloss {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json dataset_to_json(const DatasetSpec& d) {
    json j;
    j["name"] = d.name;
    if (d.synthetic) {
        j["blobs"] = {{"classes", d.classes},
                      {"per_class", d.per_class},
                      {"dim", d.dim},
                      {"separation", d.separation},
                      {"seed", d.gen_seed}};
    } else {
        j["csv"] = d.csv_path;
        j["label_column"] = d.label_column;
        j["delimiter"] = std::string(1, d.delimiter);
    }
    return j;
}

DatasetSpec dataset_from_json(const json& j) {
    DatasetSpec d;
    d.name = j.at("name").get<std::string>();
    if (j.contains("blobs")) {
        const json& b = j.at("blobs");
        d.synthetic = true;
        d.classes = b.value("classes", 2);
        d.per_class = b.value("per_class", 50);
        d.dim = b.value("dim", 2);
        d.separation = b.value("separation", 2.0);
        d.gen_seed = b.value("seed", std::uint64_t{0});
    } else {
        d.csv_path = j.at("csv").get<std::string>();
        d.label_column = j.value("label_column", -1);
        const std::string delim = j.value("delimiter", ",");
        if (delim.size() != 1) throw std::invalid_argument("dataset delimiter must be one character");
        d.delimiter = delim[0];
    }
    return d;
}

json schedule_to_json(const ScheduleSpec& s) {
    json j;
    j["protocol"] = s.name();
    if (s.protocol == ScheduleSpec::Protocol::two_phase) j["switch_fraction"] = s.switch_fraction;
    if (s.protocol == ScheduleSpec::Protocol::gradual) j["ladder"] = s.focus_ladder;
    return j;
}

ScheduleSpec schedule_from_json(const json& j) {
    if (j.is_string()) return ScheduleSpec::parse(j.get<std::string>());
    ScheduleSpec s = ScheduleSpec::parse(j.at("protocol").get<std::string>());
    if (j.contains("switch_fraction")) s.switch_fraction = j.at("switch_fraction").get<double>();
    if (j.contains("ladder")) s.focus_ladder = j.at("ladder").get<std::vector<double>>();
    s.validate();
    return s;
}

json loss_to_json(const LossSpec& l) {
    json j;
    j["name"] = l.name();
    json p = json::object();
    for (const auto& [k, v] : l.params()) p[k] = v;
    if (!p.empty()) j["params"] = p;
    return j;
}

LossSpec loss_from_json(const json& j) {
    if (j.is_string()) return LossSpec::parse(j.get<std::string>(), {});
    std::map<std::string, double> params;
    if (j.contains("params"))
        for (const auto& [k, v] : j.at("params").items()) params[k] = v.get<double>();
    LossSpec spec = LossSpec::parse(j.at("name").get<std::string>(), params);
    if (j.value("experimental_ok", false)) spec.experimental_ok = true;
    return spec;
}

json method_to_json(const MethodSpec& m) {
    json j;
    j["name"] = m.name;
    if (std::holds_alternative<ScheduleSpec>(m.method))
        j["schedule"] = schedule_to_json(std::get<ScheduleSpec>(m.method));
    else
        j["loss"] = loss_to_json(std::get<LossSpec>(m.method));
    if (m.volume_matched)
        j["volume_matched"] = {{"alpha", m.volume_weights.alpha}, {"beta", m.volume_weights.beta}};
    return j;
}

MethodSpec method_from_json(const json& j) {
    MethodSpec m;
    m.name = j.at("name").get<std::string>();
    if (j.contains("schedule") == j.contains("loss"))
        throw std::invalid_argument("method '" + m.name + "': give exactly one of schedule/loss");
    if (j.contains("schedule"))
        m.method = schedule_from_json(j.at("schedule"));
    else
        m.method = loss_from_json(j.at("loss"));
    if (j.contains("volume_matched")) {
        const json& v = j.at("volume_matched");
        m.volume_matched = true;
        m.volume_weights = MixWeights(v.value("alpha", 1.0), v.value("beta", 1.0));
    }
    return m;
}

json trainer_to_json(const TrainConfig& t) {
    json j;
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["momentum"] = t.momentum;
    j["weight_decay"] = t.weight_decay;
    if (!t.lr_milestones.empty()) {
        json ms = json::array();
        for (const auto& [e, f] : t.lr_milestones) ms.push_back(json::array({e, f}));
        j["milestones"] = ms;
    }
    j["shuffle"] = t.shuffle;
    return j;
}

TrainConfig trainer_from_json(const json& j) {
    TrainConfig t;
    t.epochs = j.value("epochs", 50);
    t.batch_size = j.value("batch_size", 8);
    t.momentum = j.value("momentum", 0.9);
    t.weight_decay = j.value("weight_decay", 1e-4);
    t.shuffle = j.value("shuffle", true);
    t.lr = j.value("lr", 0.01);
    if (j.contains("milestones"))
        for (const auto& m : j.at("milestones"))
            t.lr_milestones.emplace_back(m.at(0).get<int>(), m.at(1).get<double>());
    return t;
}

json sde_to_json(const SdeConfig& s) {
    json j;
    j["eta"] = s.eta;
    j["dt"] = s.dt;
    j["t"] = s.t;
    j["trajectories"] = s.trajectories;
    j["seed"] = s.seed;
    j["isotropic_sigma2"] = s.isotropic_sigma2;
    switch (s.noise) {
        case SdeConfig::Noise::full_covariance: j["noise"] = "full"; break;
        case SdeConfig::Noise::isotropic: j["noise"] = "isotropic"; break;
        case SdeConfig::Noise::zero: j["noise"] = "zero"; break;
    }
    return j;
}

SdeConfig sde_from_json(const json& j) {
    SdeConfig s;
    s.eta = j.value("eta", 0.1);
    s.dt = j.value("dt", 1e-3);
    s.t = j.value("t", 0.1);
    s.trajectories = j.value("trajectories", 2000);
    s.seed = j.value("seed", std::uint64_t{0});
    s.isotropic_sigma2 = j.value("isotropic_sigma2", 1.0);
    const std::string noise = j.value("noise", "full");
    if (noise == "full") s.noise = SdeConfig::Noise::full_covariance;
    else if (noise == "isotropic") s.noise = SdeConfig::Noise::isotropic;
    else if (noise == "zero") s.noise = SdeConfig::Noise::zero;
    else throw std::invalid_argument("sde noise must be full, isotropic or zero");
    return s;
}

json escape_to_json(const EscapeConfig& e) {
    json j;
    j["mode"] = e.landscape_mode ? "landscape" : "model";
    if (e.landscape_mode) {
        json l;
        l["type"] = e.landscape_type;
        if (e.landscape_type == "quadratic") l["diag"] = e.quadratic_diagonal;
        if (e.landscape_type == "double_well") l["sharpness_ratio"] = e.well_sharpness;
        j["landscape"] = l;
    } else {
        j["dataset"] = dataset_to_json(e.dataset);
        j["arch"] = ClassifierModel::arch_name(e.arch);
        j["betas"] = e.betas;
        j["train"] = trainer_to_json(e.pretrain);
        j["train"]["lr"] = e.pretrain.lr;
        j["batch_m"] = e.batch_m;
    }
    j["sde"] = sde_to_json(e.sde);
    return j;
}

EscapeConfig escape_from_json(const json& j) {
    EscapeConfig e;
    e.landscape_mode = j.value("mode", "model") == "landscape";
    if (j.contains("landscape")) {
        const json& l = j.at("landscape");
        e.landscape_type = l.value("type", "quadratic");
        if (l.contains("diag")) e.quadratic_diagonal = l.at("diag").get<Vec>();
        e.well_sharpness = l.value("sharpness_ratio", 4.0);
    }
    if (j.contains("dataset")) e.dataset = dataset_from_json(j.at("dataset"));
    if (j.contains("arch")) e.arch = ClassifierModel::parse_arch(j.at("arch").get<std::string>());
    if (j.contains("betas")) e.betas = j.at("betas").get<std::vector<double>>();
    if (j.contains("train")) e.pretrain = trainer_from_json(j.at("train"));
    e.batch_m = j.value("batch_m", 8);
    if (j.contains("sde")) e.sde = sde_from_json(j.at("sde"));
    return e;
}

}  // namespace

Dataset DatasetSpec::materialize() const {
    Dataset d = synthetic ? make_blobs(classes, per_class, dim, separation, gen_seed)
                          : load_csv(csv_path, label_column, delimiter);
    d.name = name;
    return d;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig cfg;
    if (j.contains("datasets"))
        for (const auto& d : j.at("datasets")) cfg.datasets.push_back(dataset_from_json(d));
    if (j.contains("architectures")) {
        cfg.architectures.clear();
        for (const auto& a : j.at("architectures"))
            cfg.architectures.push_back(ClassifierModel::parse_arch(a.get<std::string>()));
    }
    if (j.contains("methods"))
        for (const auto& m : j.at("methods")) cfg.methods.push_back(method_from_json(m));
    if (j.contains("trainer")) {
        cfg.trainer_template = trainer_from_json(j.at("trainer"));
        if (j.at("trainer").contains("lrs")) cfg.lrs = j.at("trainer").at("lrs").get<std::vector<double>>();
    }
    if (j.contains("split")) {
        const json& s = j.at("split");
        cfg.split.train_fraction = s.value("train", 0.6);
        cfg.split.val_fraction = s.value("val", 0.2);
        cfg.split.test_fraction = s.value("test", 0.2);
        cfg.split.stratified = s.value("stratified", true);
        cfg.split.seed = s.value("seed", std::uint64_t{0});
    }
    cfg.normalize = j.value("normalize", true);
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.parallelism = j.value("parallelism", 0);
    cfg.baseline_method = j.value("baseline_method", std::string("ce"));
    if (j.contains("report")) {
        const json& r = j.at("report");
        cfg.tau_min = r.value("tau_min", 0.9);
        cfg.tau_max = r.value("tau_max", 1.0);
        cfg.tau_steps = r.value("tau_steps", 51);
    }
    if (j.contains("escape")) cfg.escape = escape_from_json(j.at("escape"));
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("ExperimentConfig: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::canonical_json() const {
    json j;
    json ds = json::array();
    for (const auto& d : datasets) ds.push_back(dataset_to_json(d));
    j["datasets"] = ds;
    json archs = json::array();
    for (const auto& a : architectures) archs.push_back(ClassifierModel::arch_name(a));
    j["architectures"] = archs;
    json ms = json::array();
    for (const auto& m : methods) ms.push_back(method_to_json(m));
    j["methods"] = ms;
    j["trainer"] = trainer_to_json(trainer_template);
    j["trainer"]["lrs"] = lrs;
    j["split"] = {{"train", split.train_fraction},
                  {"val", split.val_fraction},
                  {"test", split.test_fraction},
                  {"stratified", split.stratified},
                  {"seed", split.seed}};
    j["normalize"] = normalize;
    j["seeds"] = seeds;
    j["baseline_method"] = baseline_method;
    j["report"] = {{"tau_min", tau_min}, {"tau_max", tau_max}, {"tau_steps", tau_steps}};
    j["escape"] = escape_to_json(escape);
    // output_dir and parallelism are execution details, not experiment
    // identity; they stay out of the hash.
    return j.dump();
}

void ExperimentConfig::validate() const {
    if (datasets.empty()) throw std::invalid_argument("config: need at least one dataset");
    if (methods.empty()) throw std::invalid_argument("config: need at least one method");
    if (seeds.empty()) throw std::invalid_argument("config: need at least one seed");
    if (architectures.empty()) throw std::invalid_argument("config: need at least one architecture");
    if (lrs.empty()) throw std::invalid_argument("config: need at least one learning rate");
    std::set<std::string> names;
    for (const auto& m : methods)
        if (!names.insert(m.name).second)
            throw std::invalid_argument("config: duplicate method name '" + m.name + "'");
    trainer_template.validate();
    split.validate();
}

std::uint64_t config_hash(const std::string& canonical) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_reference_text() {
    const ExperimentConfig defaults;
    std::ostringstream out;
    out << "Config fields (JSON) and defaults:\n"
        << "  output_dir            string   \"out\"\n"
        << "  parallelism           int      0 (hardware threads)\n"
        << "  baseline_method       string   \"ce\"\n"
        << "  normalize             bool     true (train-stat z-score)\n"
        << "  seeds                 [u64]    [1, 2]\n"
        << "  architectures         [str]    [\"linear\"]; also \"mlp1\"\n"
        << "  split.train/val/test  fraction 0.6 / 0.2 / 0.2\n"
        << "  split.stratified      bool     true\n"
        << "  split.seed            u64      0\n"
        << "  trainer.epochs        int      " << defaults.trainer_template.epochs << "\n"
        << "  trainer.batch_size    int      " << defaults.trainer_template.batch_size << "\n"
        << "  trainer.momentum      real     " << defaults.trainer_template.momentum << "\n"
        << "  trainer.weight_decay  real     " << defaults.trainer_template.weight_decay << "\n"
        << "  trainer.lrs           [real]   [0.01, 0.005, 0.001]\n"
        << "  trainer.milestones    [[e,f]]  [] (lr factors applied from epoch e)\n"
        << "  datasets[]            {name, csv|blobs{classes,per_class,dim,separation,seed}}\n"
        << "  methods[]             {name, loss|schedule, volume_matched?}\n"
        << "    loss names          ce el mixed focal mae tce gce mpce cot\n"
        << "    schedule protocols  f0 | f0-05 | f0..05\n"
        << "  report.tau_min/max    real     0.9 / 1.0\n"
        << "  report.tau_steps      int      51\n"
        << "  escape.mode           string   model | landscape\n"
        << "  escape.betas          [real]   [1.0, 2.5, 5.0]\n"
        << "  escape.sde            {eta, dt, t, trajectories, noise: full|isotropic|zero, seed}\n";
    return out.str();
}

namespace {

struct PreparedDataset {
    DatasetSpec spec;
    SplitResult splits;
};

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

std::string cell_dir(const ExperimentConfig& cfg, const std::string& arch, const std::string& dataset,
                     const std::string& method, std::uint64_t seed) {
    return cfg.output_dir + "/runs/" + arch + "/" + dataset + "/" + method + "/" + seed_dir(seed);
}

// Identity of one cell: everything that affects its numbers.
std::uint64_t cell_hash(const ExperimentConfig& cfg, const DatasetSpec& dataset,
                        const std::string& arch, const MethodSpec& method, std::uint64_t seed) {
    json j;
    j["dataset"] = dataset_to_json(dataset);
    j["arch"] = arch;
    j["method"] = method_to_json(method);
    j["trainer"] = trainer_to_json(cfg.trainer_template);
    j["lrs"] = cfg.lrs;
    j["split"] = {{"train", cfg.split.train_fraction},
                  {"val", cfg.split.val_fraction},
                  {"test", cfg.split.test_fraction},
                  {"stratified", cfg.split.stratified},
                  {"seed", cfg.split.seed}};
    j["normalize"] = cfg.normalize;
    j["seed"] = seed;
    return config_hash(j.dump());
}

bool load_cell_summary(const std::string& dir, std::uint64_t expected_hash, CellOutcome& out) {
    std::ifstream f(dir + "/summary.json");
    if (!f) return false;
    json j;
    try {
        f >> j;
    } catch (...) {
        return false;
    }
    if (j.value("cell_hash", std::string{}) != std::to_string(expected_hash)) return false;
    out.test_accuracy = std::stod(j.value("test_accuracy", std::string("0")));
    out.val_accuracy = std::stod(j.value("val_accuracy", std::string("0")));
    out.chosen_lr = std::stod(j.value("chosen_lr", std::string("0")));
    out.best_epoch = j.value("best_epoch", -1);
    out.failed = j.value("failed", false);
    out.failure_reason = j.value("failure_reason", std::string{});
    out.resumed = true;
    return true;
}

void save_cell_summary(const std::string& dir, std::uint64_t hash, const CellOutcome& out) {
    json j;
    j["cell_hash"] = std::to_string(hash);
    j["test_accuracy"] = format_double(out.test_accuracy);
    j["val_accuracy"] = format_double(out.val_accuracy);
    j["chosen_lr"] = format_double(out.chosen_lr);
    j["best_epoch"] = out.best_epoch;
    j["failed"] = out.failed;
    j["failure_reason"] = out.failure_reason;
    std::ofstream f(dir + "/summary.json");
    if (!f) throw std::runtime_error("cannot write " + dir + "/summary.json");
    f << j.dump(2) << "\n";
}

struct CellTask {
    std::size_t arch_index;
    std::size_t dataset_index;
    std::size_t method_index;
    std::size_t seed_index;
};

CellOutcome run_cell(const ExperimentConfig& cfg, const PreparedDataset& prep,
                     const std::string& arch_name, ClassifierModel::Arch arch,
                     const MethodSpec& method, std::uint64_t seed) {
    CellOutcome out;
    out.arch = arch_name;
    out.dataset = prep.spec.name;
    out.method = method.name;
    out.seed = seed;

    const std::string dir = cell_dir(cfg, arch_name, prep.spec.name, method.name, seed);
    const std::uint64_t hash = cell_hash(cfg, prep.spec, arch_name, method, seed);
    fs::create_directories(dir);
    if (load_cell_summary(dir, hash, out)) return out;

    try {
        const Dataset& train_set = prep.splits.train;
        const int input_dim = train_set.input_dim();
        const int classes = train_set.classes;

        // Model init depends only on (seed, arch, dims): methods sharing a
        // seed start from identical parameters.
        ModelFactory factory = [&]() {
            RandomSource init_rng = RandomSource(seed).split(0);
            return ClassifierModel::init(arch, input_dim, classes, init_rng);
        };

        TrainConfig cfg_template = cfg.trainer_template;
        cfg_template.method = method.method;
        cfg_template.seed = RandomSource::mix(seed, 0x7261696e);  // run-scoped shuffle stream

        std::vector<double> lrs = cfg.lrs;
        if (method.volume_matched)
            for (double& lr : lrs) lr = volume_matched_ce_lr(lr, method.volume_weights);

        DataSplits splits{prep.splits.train, prep.splits.val, prep.splits.test};
        const SweepResult sweep = lr_sweep(factory, splits, cfg_template, lrs);

        for (std::size_t i = 0; i < sweep.reports.size(); ++i) {
            const RunReport& r = sweep.reports[i];
            if (!r.failed)
                r.write_csv(dir + "/lr_" + format_double(sweep.lrs[i]) + ".csv");
        }
        const RunReport& best = sweep.best();
        {
            ClassifierModel m0 = factory();
            m0.save_checkpoint(dir + "/init.ckpt");
            if (!best.best_parameters.empty()) {
                ClassifierModel mb = factory();
                mb.set_parameters(best.best_parameters);
                mb.save_checkpoint(dir + "/best.ckpt");
            }
        }
        out.test_accuracy = best.test_accuracy_at_best;
        out.val_accuracy = best.val_accuracy_at_best;
        out.chosen_lr = sweep.lrs[sweep.best_index];
        out.best_epoch = best.best_val_epoch;
    } catch (const std::exception& err) {
        out.failed = true;
        out.test_accuracy = 0.0;
        out.failure_reason = err.what();
    }

    save_cell_summary(dir, hash, out);
    return out;
}

}  // namespace

GridResult run_grid(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);

    // Materialize and split every dataset once; cells only read them.
    std::vector<PreparedDataset> prepared;
    prepared.reserve(cfg.datasets.size());
    for (const auto& spec : cfg.datasets) {
        PreparedDataset p{spec, {}};
        Dataset d = spec.materialize();
        p.splits = split(d, cfg.split);
        if (cfg.normalize)
            zscore_normalize(p.splits.train, {&p.splits.val, &p.splits.test});
        prepared.push_back(std::move(p));
    }

    std::vector<CellTask> tasks;
    for (std::size_t a = 0; a < cfg.architectures.size(); ++a)
        for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
            for (std::size_t m = 0; m < cfg.methods.size(); ++m)
                for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
                    tasks.push_back({a, d, m, s});

    std::vector<CellOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    unsigned workers = cfg.parallelism > 0 ? static_cast<unsigned>(cfg.parallelism)
                                           : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));

    auto worker_loop = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const CellTask& t = tasks[i];
            const std::string arch = ClassifierModel::arch_name(cfg.architectures[t.arch_index]);
            try {
                outcomes[i] = run_cell(cfg, prepared[t.dataset_index], arch,
                                       cfg.architectures[t.arch_index], cfg.methods[t.method_index],
                                       cfg.seeds[t.seed_index]);
            } catch (const std::exception& err) {
                // I/O problems around the cell directory must not take the
                // pool thread down; record them like any other failure.
                CellOutcome bad;
                bad.arch = arch;
                bad.dataset = cfg.datasets[t.dataset_index].name;
                bad.method = cfg.methods[t.method_index].name;
                bad.seed = cfg.seeds[t.seed_index];
                bad.failed = true;
                bad.failure_reason = err.what();
                outcomes[i] = std::move(bad);
            }
        }
    };

    if (workers <= 1) {
        worker_loop();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker_loop);
        for (auto& th : pool) th.join();
    }

    GridResult grid;
    grid.cells = outcomes;
    grid.config_hash_value = config_hash(cfg.canonical_json());
    for (const auto& c : outcomes)
        if (c.failed) ++grid.failures;

    // Raw tables: one column per dataset#seed, in config order.
    for (std::size_t a = 0; a < cfg.architectures.size(); ++a) {
        const std::string arch = ClassifierModel::arch_name(cfg.architectures[a]);

        AccuracyTable raw;
        for (const auto& m : cfg.methods) raw.methods.push_back(m.name);
        for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
                raw.experiments.push_back(cfg.datasets[d].name + "#seed" +
                                          std::to_string(cfg.seeds[s]));
        raw.values = Matrix(raw.methods.size(), raw.experiments.size());
        raw.failed.assign(raw.methods.size(),
                          std::vector<bool>(raw.experiments.size(), false));

        AccuracyTable agg;
        agg.methods = raw.methods;
        for (const auto& d : cfg.datasets) agg.experiments.push_back(d.name);
        agg.values = Matrix(agg.methods.size(), agg.experiments.size());
        agg.failed.assign(agg.methods.size(), std::vector<bool>(agg.experiments.size(), false));

        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const CellTask& t = tasks[i];
            if (t.arch_index != a) continue;
            const std::size_t col = t.dataset_index * cfg.seeds.size() + t.seed_index;
            raw.values(t.method_index, col) = outcomes[i].test_accuracy;
            raw.failed[t.method_index][col] = outcomes[i].failed;
            agg.values(t.method_index, t.dataset_index) +=
                outcomes[i].test_accuracy / static_cast<double>(cfg.seeds.size());
            if (outcomes[i].failed) agg.failed[t.method_index][t.dataset_index] = true;
        }

        write_accuracy_table(raw, cfg.output_dir + "/accuracy_raw_" + arch + ".csv");
        write_accuracy_table(agg, cfg.output_dir + "/accuracy_" + arch + ".csv");
        grid.raw[arch] = std::move(raw);
        grid.aggregated[arch] = std::move(agg);
    }

    // Provenance sidecar. The result tables carry no timestamps, so reruns
    // stay bitwise comparable; only this file records when the grid ran.
    {
        json prov;
        prov["config_hash"] = std::to_string(grid.config_hash_value);
        prov["version"] = "mixloss 0.1.0";
        prov["cells"] = grid.cells.size();
        prov["failures"] = grid.failures;
        const std::time_t now = std::time(nullptr);
        char stamp[32] = {0};
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        prov["completed_at"] = stamp;
        std::ofstream f(cfg.output_dir + "/provenance.json");
        f << prov.dump(2) << "\n";
    }
    return grid;
}

std::vector<MethodSummary> report_summaries(const GridResult& grid, const ExperimentConfig& cfg,
                                            const std::string& arch) {
    return summary_stats(grid.aggregated.at(arch), cfg.baseline_method);
}

void write_report(const GridResult& grid, const ExperimentConfig& cfg) {
    if (grid.aggregated.empty()) throw std::invalid_argument("write_report: empty grid");
    for (const auto& [arch, table] : grid.aggregated) {
        const std::string dir = cfg.output_dir + "/report/" + arch;
        fs::create_directories(dir);

        const auto stats = summary_stats(table, cfg.baseline_method);
        write_summary_stats(stats, dir + "/summary.csv");

        std::vector<double> taus;
        for (int i = 0; i < cfg.tau_steps; ++i)
            taus.push_back(cfg.tau_min +
                           (cfg.tau_max - cfg.tau_min) * static_cast<double>(i) /
                               static_cast<double>(std::max(1, cfg.tau_steps - 1)));
        write_dolan_more(dolan_more_profile(table, taus), table.methods, dir + "/dolan_more.csv");

        const FriedmanResult fr = friedman_statistic(table);
        {
            std::ofstream f(dir + "/friedman.txt");
            f << "chi_square " << format_double(fr.chi_square) << "\n";
            f << "degrees_of_freedom " << fr.degrees_of_freedom << "\n";
        }
        {
            std::ofstream f(dir + "/table.txt");
            f << "Architecture: " << arch << "\n";
            f << "Method            #Wins    dAcc      Mean rank\n";
            char line[160];
            for (const auto& s : stats) {
                std::snprintf(line, sizeof line, "%-16s %6zu   %+.4f    %.4f\n", s.method.c_str(),
                              s.wins, s.delta_acc, s.mean_rank);
                f << line;
            }
            f << "Friedman chi-square " << format_double(fr.chi_square) << " (df "
              << fr.degrees_of_freedom << ")\n";
        }
    }
}

std::vector<EscapeRow> escape_experiment(const ExperimentConfig& cfg) {
    const EscapeConfig& e = cfg.escape;
    std::vector<EscapeRow> rows;

    if (e.landscape_mode) {
        std::unique_ptr<Landscape> land;
        Vec w0;
        Matrix hess;
        if (e.landscape_type == "quadratic") {
            hess = Matrix::diagonal(e.quadratic_diagonal);
            land = std::make_unique<QuadraticLandscape>(hess);
            w0.assign(e.quadratic_diagonal.size(), 0.0);
        } else if (e.landscape_type == "double_well") {
            auto well = std::make_unique<DoubleWellLandscape>(make_double_well(e.well_sharpness));
            w0 = {well->sharp_minimum()};
            hess = Matrix(1, 1);
            hess(0, 0) = well->curvature_at(well->sharp_minimum());
            land = std::move(well);
        } else {
            throw std::invalid_argument("escape: unknown landscape type '" + e.landscape_type + "'");
        }

        Matrix sigma = Matrix::identity(land->dim());
        if (e.sde.noise == SdeConfig::Noise::isotropic) sigma = scale(sigma, e.sde.isotropic_sigma2);
        if (e.sde.noise == SdeConfig::Noise::zero) sigma = scale(sigma, 0.0);
        const double tr = trace_of_product(hess, sigma);
        const double est = escaping_efficiency_estimate(hess, sigma, e.sde.t, e.sde.eta);
        SdeConfig sde = e.sde;
        if (sde.noise == SdeConfig::Noise::full_covariance) sde.noise = SdeConfig::Noise::isotropic;
        const SdeResult sim = sde_simulate(*land, w0, sde, nullptr);
        rows.push_back({e.landscape_type, kNaN, tr, est, sim.ee_mean, sim.ee_stderr});
        return rows;
    }

    // Model mode: pretrain, then compare CE with the requested mixtures at
    // the reached parameters.
    Dataset data = e.dataset.materialize();
    SplitSpec sp;
    sp.seed = cfg.split.seed;
    SplitResult splits = split(data, sp);
    zscore_normalize(splits.train, {&splits.val, &splits.test});

    RandomSource init_rng = RandomSource(cfg.seeds.empty() ? 0 : cfg.seeds[0]).split(0);
    ClassifierModel model =
        ClassifierModel::init(e.arch, splits.train.input_dim(), splits.train.classes, init_rng);
    if (model.parameter_count() > kEscapeParameterCap)
        throw std::invalid_argument("escape: model exceeds the parameter cap of " +
                                    std::to_string(kEscapeParameterCap));

    TrainConfig pre = e.pretrain;
    pre.method = LossSpec::parse("ce", {});
    pre.seed = cfg.seeds.empty() ? 0 : cfg.seeds[0];
    DataSplits ds{splits.train, splits.val, splits.test};
    const RunReport rep = train(model, ds, pre);
    if (rep.failed) throw std::runtime_error("escape: pretraining diverged: " + rep.failure_reason);

    const Vec w0(model.parameters().begin(), model.parameters().end());

    auto one_loss = [&](const std::string& label, double beta, const LossSpec& loss) {
        const CovarianceMatrix cov = noise_covariance(model, splits.train, loss, e.batch_m);
        const Matrix hess = hessian(model, splits.train, loss);
        const double tr = trace_of_product(hess, cov.sigma);
        const double est = escaping_efficiency_estimate(hess, cov.sigma, e.sde.t, e.sde.eta);
        ModelLossLandscape land(model, splits.train, loss, pre.weight_decay);
        const SdeResult sim = sde_simulate(land, w0, e.sde, &cov.sigma);
        rows.push_back({label, beta, tr, est, sim.ee_mean, sim.ee_stderr});
    };

    one_loss("ce", kNaN, LossSpec::parse("ce", {}));
    for (double beta : e.betas) {
        LossSpec mixed = LossSpec::parse("mixed", {{"alpha", 1.0}, {"beta", beta}});
        one_loss("mixed", beta, mixed);
    }

    // Comparison-bound ingredients on one batch at the found minimum.
    {
        Dataset batch = splits.train;
        const std::size_t m_sz = std::min<std::size_t>(static_cast<std::size_t>(e.batch_m),
                                                       splits.train.size());
        batch.features = Matrix(m_sz, splits.train.features.cols);
        batch.labels.assign(splits.train.labels.begin(),
                            splits.train.labels.begin() + static_cast<std::ptrdiff_t>(m_sz));
        for (std::size_t i = 0; i < m_sz; ++i)
            for (std::size_t j = 0; j < batch.features.cols; ++j)
                batch.features(i, j) = splits.train.features(i, j);
        const EscapeQuantities quants = escape_quantities(model, batch);
        const double tr_term = trace_of_product(quants.f_p, transpose(quants.f_p)) +
                               2.0 * trace_of_product(quants.h_p, quants.f_p);
        fs::create_directories(cfg.output_dir);
        std::ofstream f(cfg.output_dir + "/escape_bound.csv");
        if (!f) throw std::runtime_error("escape: cannot write escape_bound.csv");
        f << "beta,m_cap,trace_ffh,rhs_bound\n";
        for (double beta : e.betas)
            f << format_double(beta) << "," << format_double(quants.m_cap) << ","
              << format_double(tr_term) << "," << format_double(ee_rhs_bound(quants, beta)) << "\n";
    }

    return rows;
}

void write_escape_csv(const std::vector<EscapeRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_escape_csv: cannot open " + path);
    f << "method,beta,trace_term,ee_estimate,ee_simulated,stderr\n";
    for (const auto& r : rows)
        f << r.method << "," << format_double(r.beta) << "," << format_double(r.trace_term) << ","
          << format_double(r.ee_estimate) << "," << format_double(r.ee_simulated) << ","
          << format_double(r.stderr_value) << "\n";
}

}  // namespace mixloss
