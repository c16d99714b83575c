#include "mixloss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mixloss {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EpochLoss {
    LossSpec spec;
    double alpha = kNaN;
    double beta = kNaN;
    double focus = kNaN;
};

EpochLoss loss_for_epoch(const TrainMethod& method, int epoch, int total_epochs) {
    EpochLoss out;
    if (std::holds_alternative<ScheduleSpec>(method)) {
        const PhaseWeights pw = schedule_at(std::get<ScheduleSpec>(method), epoch, total_epochs);
        out.spec.kind = LossSpec::Kind::mixed;
        out.spec.weights = pw.mix();
        out.alpha = pw.alpha;
        out.beta = pw.beta;
        out.focus = pw.focus;
        return out;
    }
    out.spec = std::get<LossSpec>(method);
    switch (out.spec.kind) {
        case LossSpec::Kind::ce:
            out.alpha = 1.0;
            out.beta = 0.0;
            break;
        case LossSpec::Kind::el:
            out.alpha = 0.0;
            out.beta = 1.0;
            out.focus = 0.5;
            break;
        case LossSpec::Kind::mixed: {
            out.alpha = out.spec.weights.alpha;
            out.beta = out.spec.weights.beta;
            if (out.spec.weights.beta > 0.0) out.focus = focus_of(out.spec.weights).focus;
            break;
        }
        default:
            break;  // no CE+EL decomposition; report NaN
    }
    return out;
}

BucketSnapshot take_snapshot(const ClassifierModel& model, const Dataset& test, int epoch) {
    BucketSnapshot snap;
    snap.epoch = epoch;
    snap.records.reserve(test.size());
    for (std::size_t n = 0; n < test.size(); ++n) {
        const Vec x = test.row(n);
        const ProbabilityVector p = softmax(model.forward(x));
        const int y = test.labels[n];
        SampleRecord r;
        r.sample_id = static_cast<int>(n);
        r.correct = model.predict(x) == y;
        r.p_y = p[static_cast<std::size_t>(y)];
        snap.records.push_back(r);
    }
    return snap;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(lr >= 0.0)) throw std::invalid_argument("TrainConfig: lr must be nonnegative");
    if (!(momentum >= 0.0) || !(momentum < 1.0))
        throw std::invalid_argument("TrainConfig: momentum must lie in [0,1)");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    int prev = -1;
    for (const auto& [epoch, factor] : lr_milestones) {
        if (epoch <= prev) throw std::invalid_argument("TrainConfig: milestone epochs must increase");
        if (epoch >= epochs) throw std::invalid_argument("TrainConfig: milestone epoch past the run");
        if (!(factor > 0.0)) throw std::invalid_argument("TrainConfig: milestone factor must be > 0");
        prev = epoch;
    }
    for (int s : snapshot_epochs)
        if (s < 0 || s >= epochs)
            throw std::invalid_argument("TrainConfig: snapshot epoch outside the run");
}

double effective_lr(const TrainConfig& cfg, int epoch) {
    double lr = cfg.lr;
    for (const auto& [milestone, factor] : cfg.lr_milestones)
        if (milestone <= epoch) lr *= factor;
    return lr;
}

RunReport train(ClassifierModel& model, const DataSplits& splits, const TrainConfig& cfg) {
    cfg.validate();
    splits.train.validate();
    splits.val.validate();
    splits.test.validate();
    if (splits.train.input_dim() != model.input_dim())
        throw std::invalid_argument("train: dataset feature dim != model input dim");

    RunReport report;
    report.lr = cfg.lr;
    report.initial_parameters.assign(model.parameters().begin(), model.parameters().end());

    const std::size_t n_train = splits.train.size();
    const std::size_t p_count = model.parameter_count();
    Vec velocity(p_count, 0.0);
    Vec batch_grad(p_count, 0.0);

    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    RandomSource run_rng(cfg.seed);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const EpochLoss ep_loss = loss_for_epoch(cfg.method, epoch, cfg.epochs);
        const double lr_e = effective_lr(cfg, epoch);

        if (cfg.shuffle) {
            // Reseed per epoch so batch order is a pure function of (seed, epoch).
            RandomSource shuffle_rng = run_rng.split(1 + static_cast<std::uint64_t>(epoch));
            for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
            shuffle_rng.shuffle(order);
        }

        double loss_sum = 0.0;
        auto theta = model.parameters();

        try {
            for (std::size_t start = 0; start < n_train;
                 start += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t stop =
                    std::min(n_train, start + static_cast<std::size_t>(cfg.batch_size));
                const double inv_batch = 1.0 / static_cast<double>(stop - start);

                std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
                for (std::size_t i = start; i < stop; ++i) {
                    const std::size_t n = order[i];
                    const auto bw =
                        model.backward(splits.train.row(n), splits.train.labels[n], ep_loss.spec);
                    loss_sum += bw.loss;
                    for (std::size_t k = 0; k < p_count; ++k) batch_grad[k] += bw.grad.flat[k];
                }

                for (std::size_t k = 0; k < p_count; ++k) {
                    const double g = batch_grad[k] * inv_batch + cfg.weight_decay * theta[k];
                    velocity[k] = cfg.momentum * velocity[k] + g;
                    theta[k] -= lr_e * velocity[k];
                }
            }
        } catch (const std::exception& err) {
            // Overflowing parameters surface as non-finite logits mid-epoch.
            report.failed = true;
            report.failure_reason = "diverged at epoch " + std::to_string(epoch) + ": " + err.what();
            return report;
        }

        bool params_finite = true;
        for (double v : theta)
            if (!std::isfinite(v)) {
                params_finite = false;
                break;
            }
        const double train_loss = loss_sum / static_cast<double>(n_train);
        if (!std::isfinite(train_loss) || !params_finite) {
            report.failed = true;
            report.failure_reason = "non-finite loss or parameters at epoch " + std::to_string(epoch);
            return report;
        }

        EpochRow row;
        row.epoch = epoch;
        row.alpha = ep_loss.alpha;
        row.beta = ep_loss.beta;
        row.focus = ep_loss.focus;
        row.train_loss = train_loss;
        row.train_accuracy = model.accuracy(splits.train);
        row.val_accuracy = model.accuracy(splits.val);
        row.test_accuracy = model.accuracy(splits.test);
        report.epochs.push_back(row);

        if (report.best_val_epoch < 0 || row.val_accuracy > report.val_accuracy_at_best) {
            report.best_val_epoch = epoch;
            report.val_accuracy_at_best = row.val_accuracy;
            report.test_accuracy_at_best = row.test_accuracy;
            report.best_parameters.assign(theta.begin(), theta.end());
        }

        if (std::find(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end(), epoch) !=
            cfg.snapshot_epochs.end())
            report.snapshots.push_back(take_snapshot(model, splits.test, epoch));
    }

    return report;
}

void RunReport::write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("RunReport::write_csv: cannot open " + path);
    f << "epoch,alpha,beta,F,train_loss,train_acc,val_acc,test_acc\n";
    char buf[64];
    auto put = [&](double v, bool last = false) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        f << buf << (last ? "\n" : ",");
    };
    for (const auto& r : epochs) {
        f << r.epoch << ",";
        put(r.alpha);
        put(r.beta);
        put(r.focus);
        put(r.train_loss);
        put(r.train_accuracy);
        put(r.val_accuracy);
        put(r.test_accuracy, true);
    }
}

SweepResult lr_sweep(const ModelFactory& make_model, const DataSplits& splits,
                     const TrainConfig& cfg_template, const std::vector<double>& lrs) {
    if (lrs.empty()) throw std::invalid_argument("lr_sweep: empty lr list");

    SweepResult out;
    out.lrs = lrs;
    out.reports.reserve(lrs.size());
    for (double lr : lrs) {
        TrainConfig cfg = cfg_template;
        cfg.lr = lr;
        ClassifierModel model = make_model();
        out.reports.push_back(train(model, splits, cfg));
    }

    bool any_ok = false;
    std::size_t best = 0;
    for (std::size_t i = 0; i < out.reports.size(); ++i) {
        const RunReport& r = out.reports[i];
        if (r.failed) continue;
        if (!any_ok) {
            any_ok = true;
            best = i;
            continue;
        }
        const RunReport& champ = out.reports[best];
        if (r.val_accuracy_at_best > champ.val_accuracy_at_best ||
            (r.val_accuracy_at_best == champ.val_accuracy_at_best && lrs[i] < lrs[best]))
            best = i;
    }
    if (!any_ok) throw std::runtime_error("lr_sweep: every candidate run diverged");
    out.best_index = best;
    return out;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb, double fm, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, fm, flm, left, tol * 0.5, depth - 1) +
           adaptive_simpson(f, m, b, fm, fb, frm, right, tol * 0.5, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fb, fm, whole, tol, 40);
}

constexpr double kQuadratureTol = 1e-9;

}  // namespace

double gradient_volume(const MixWeights& w, VolumeCase which) {
    if (which == VolumeCase::target) {
        auto integrand = [&](double p) {
            return std::abs(w.beta * p * p + p * (w.alpha - w.beta) - w.alpha);
        };
        return integrate(integrand, 0.0, 1.0, kQuadratureTol);
    }
    auto outer = [&](double p_y) {
        auto inner = [&](double p_j) { return std::abs(p_j * (w.beta * p_y + w.alpha)); };
        return integrate(inner, 0.0, 1.0, kQuadratureTol * 0.1);
    };
    return integrate(outer, 0.0, 1.0, kQuadratureTol);
}

double volume_matched_ce_lr(double base_lr, const MixWeights& w) {
    if (!(base_lr > 0.0)) throw std::invalid_argument("volume_matched_ce_lr: base_lr must be > 0");
    const double v_mixed = gradient_volume(w, VolumeCase::target);
    const double v_ce = gradient_volume(MixWeights(1.0, 0.0), VolumeCase::target);
    return base_lr * v_mixed / v_ce;
}

}  // namespace mixloss
