#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "mixloss/analysis.hpp"
#include "mixloss/data.hpp"
#include "mixloss/model.hpp"
#include "mixloss/schedule.hpp"

namespace mixloss {

// Either an epoch-driven focus schedule (trains the mixed loss with
// schedule_at weights) or a fixed loss for the whole run.
using TrainMethod = std::variant<ScheduleSpec, LossSpec>;

struct TrainConfig {
    int epochs = 50;
    int batch_size = 8;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::vector<std::pair<int, double>> lr_milestones;  // (epoch, factor), factors compound
    TrainMethod method = ScheduleSpec::constant();
    std::uint64_t seed = 0;
    bool shuffle = true;
    std::vector<int> snapshot_epochs;  // per-sample test-set probability snapshots

    void validate() const;
};

struct EpochRow {
    int epoch;
    double alpha;       // NaN when the loss has no CE+EL decomposition
    double beta;
    double focus;       // NaN when undefined (e.g. pure CE)
    double train_loss;
    double train_accuracy;
    double val_accuracy;
    double test_accuracy;
};

struct RunReport {
    std::vector<EpochRow> epochs;
    int best_val_epoch = -1;            // earliest maximizer of validation accuracy
    double val_accuracy_at_best = 0.0;
    double test_accuracy_at_best = 0.0;
    bool failed = false;                // divergence (non-finite loss)
    std::string failure_reason;
    Vec initial_parameters;
    Vec best_parameters;
    std::vector<BucketSnapshot> snapshots;
    double lr = 0.0;                    // the base lr this run used

    void write_csv(const std::string& path) const;
};

struct DataSplits {
    const Dataset& train;
    const Dataset& val;
    const Dataset& test;
};

// SGD with classical heavy-ball momentum; weight decay enters the gradient
// before the momentum buffer and applies to all parameters, biases
// included:
//   v <- momentum * v + (batch_grad + weight_decay * theta)
//   theta <- theta - lr_e * v
// lr_e is cfg.lr scaled by every milestone factor whose epoch <= e.
// Mini-batch order reshuffles every epoch from (seed, epoch); the last
// incomplete batch is kept. Fully deterministic given cfg.seed.
RunReport train(ClassifierModel& model, const DataSplits& splits, const TrainConfig& cfg);

double effective_lr(const TrainConfig& cfg, int epoch);

// One train per candidate lr, identical seed; winner is the highest
// validation accuracy at its best epoch, ties to the lower lr.
struct SweepResult {
    std::size_t best_index;
    std::vector<RunReport> reports;
    std::vector<double> lrs;

    const RunReport& best() const { return reports[best_index]; }
};
using ModelFactory = std::function<ClassifierModel()>;
SweepResult lr_sweep(const ModelFactory& make_model, const DataSplits& splits,
                     const TrainConfig& cfg_template, const std::vector<double>& lrs);

inline std::vector<double> default_lr_grid() { return {0.01, 0.005, 0.001}; }

// Area under the absolute mixed-loss gradient curve:
//   target:    int_0^1 |beta p^2 + p(alpha-beta) - alpha| dp
//   nontarget: int_0^1 int_0^1 |p_j (beta p_y + alpha)| dp_y dp_j
// Adaptive Simpson quadrature to 1e-9 absolute.
enum class VolumeCase { target, nontarget };
double gradient_volume(const MixWeights& w, VolumeCase which);

// Learning rate for a CE run matched to the mixed loss's target gradient
// volume: base_lr * V(w)/V(ce).
double volume_matched_ce_lr(double base_lr, const MixWeights& w);

}  // namespace mixloss
