#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mixloss/analysis.hpp"
#include "mixloss/escape.hpp"
#include "mixloss/trainer.hpp"

namespace mixloss {

// One dataset source: a CSV file or a synthetic blob generator.
struct DatasetSpec {
    std::string name;
    std::string csv_path;  // empty for synthetic
    int label_column = -1;
    char delimiter = ',';
    bool synthetic = false;
    int classes = 2;
    int per_class = 50;
    int dim = 2;
    double separation = 2.0;
    std::uint64_t gen_seed = 0;

    Dataset materialize() const;
};

// A named training method: a focus schedule or a fixed loss, optionally
// with a volume-matched learning-rate factor.
struct MethodSpec {
    std::string name;
    TrainMethod method = ScheduleSpec::constant();
    bool volume_matched = false;
    MixWeights volume_weights{1.0, 1.0};
};

struct EscapeConfig {
    bool landscape_mode = false;
    // landscape mode
    std::string landscape_type = "quadratic";  // quadratic | double_well
    Vec quadratic_diagonal = {1.0, 2.0};
    double well_sharpness = 4.0;
    // model mode
    DatasetSpec dataset;
    ClassifierModel::Arch arch = ClassifierModel::Arch::linear;
    std::vector<double> betas = {1.0, 2.5, 5.0};
    TrainConfig pretrain;
    int batch_m = 8;
    // shared SDE settings
    SdeConfig sde;
};

struct ExperimentConfig {
    std::vector<DatasetSpec> datasets;
    std::vector<ClassifierModel::Arch> architectures = {ClassifierModel::Arch::linear};
    std::vector<MethodSpec> methods;
    TrainConfig trainer_template;
    std::vector<double> lrs = default_lr_grid();
    SplitSpec split;
    bool normalize = true;
    std::vector<std::uint64_t> seeds = {1, 2};
    std::string output_dir = "out";
    int parallelism = 0;  // 0 = hardware threads
    std::string baseline_method = "ce";
    double tau_min = 0.9, tau_max = 1.0;
    int tau_steps = 51;
    EscapeConfig escape;

    static ExperimentConfig load(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    std::string canonical_json() const;
    void validate() const;
};

// Stable 64-bit FNV-1a over a canonical (key-sorted) JSON dump; key order
// in the source text does not matter, any value change does.
std::uint64_t config_hash(const std::string& canonical_json);

// Reference of every config field with its default, for --config-reference.
std::string config_reference_text();

struct CellOutcome {
    std::string arch;
    std::string dataset;
    std::string method;
    std::uint64_t seed = 0;
    double test_accuracy = 0.0;
    double val_accuracy = 0.0;
    double chosen_lr = 0.0;
    int best_epoch = -1;
    bool failed = false;
    std::string failure_reason;
    bool resumed = false;
};

struct GridResult {
    std::map<std::string, AccuracyTable> raw;         // per arch; columns dataset#seed
    std::map<std::string, AccuracyTable> aggregated;  // per arch; columns dataset, mean over seeds
    std::vector<CellOutcome> cells;
    std::uint64_t config_hash_value = 0;
    std::size_t failures = 0;

    bool complete_failure() const { return failures == cells.size() && !cells.empty(); }
};

// Trains every (architecture, dataset, method, seed) via lr_sweep with
// identical seeds across methods; per-dataset accuracy aggregates over
// seeds by arithmetic mean. Finished cells are detected through their
// summary files and skipped. Partial failures keep the grid going.
GridResult run_grid(const ExperimentConfig& cfg);

// summary_stats CSV, Dolan-More CSV, Friedman statistic and a plain-text
// method table per architecture, from the aggregated tables.
void write_report(const GridResult& grid, const ExperimentConfig& cfg);
std::vector<MethodSummary> report_summaries(const GridResult& grid, const ExperimentConfig& cfg,
                                            const std::string& arch);

struct EscapeRow {
    std::string method;
    double beta;  // NaN for ce / landscape rows
    double trace_term;
    double ee_estimate;
    double ee_simulated;
    double stderr_value;
};
// Fixed column set: method,beta,trace_term,ee_estimate,ee_simulated,stderr.
// Model mode additionally writes escape_bound.csv (beta, M, the
// Tr(F F^T + 2 H F) term and the comparison-bound value) next to the
// output tables.
std::vector<EscapeRow> escape_experiment(const ExperimentConfig& cfg);
void write_escape_csv(const std::vector<EscapeRow>& rows, const std::string& path);

}  // namespace mixloss
