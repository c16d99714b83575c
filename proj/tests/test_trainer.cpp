#include "doctest.h"

#include <cmath>
#include <fstream>

#include "mixloss/trainer.hpp"

using namespace mixloss;

namespace {

struct Fixture {
    Dataset train, val, test;

    explicit Fixture(double separation = 6.0, int per_class = 30, std::uint64_t seed = 3) {
        const Dataset d = make_blobs(2, per_class, 2, separation, seed);
        SplitSpec spec;
        spec.seed = 21;
        SplitResult r = split(d, spec);
        train = std::move(r.train);
        val = std::move(r.val);
        test = std::move(r.test);
    }

    DataSplits splits() const { return DataSplits{train, val, test}; }
};

ClassifierModel fresh_model(const Dataset& train, std::uint64_t seed,
                            ClassifierModel::Arch arch = ClassifierModel::Arch::linear) {
    RandomSource rng = RandomSource(seed).split(0);
    return ClassifierModel::init(arch, train.input_dim(), train.classes, rng);
}

}  // namespace

TEST_CASE("lr = 0 leaves parameters untouched") {
    Fixture fx;
    ClassifierModel m = fresh_model(fx.train, 1);
    const Vec before(m.parameters().begin(), m.parameters().end());
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.lr = 0.0;
    cfg.seed = 4;
    const RunReport rep = train(m, fx.splits(), cfg);
    REQUIRE(!rep.failed);
    for (std::size_t i = 0; i < before.size(); ++i) REQUIRE(m.parameters()[i] == before[i]);
}

TEST_CASE("a separable blob problem trains to full accuracy") {
    Fixture fx(10.0, 40);
    ClassifierModel m = fresh_model(fx.train, 2);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.lr = 0.05;
    cfg.seed = 5;
    const RunReport rep = train(m, fx.splits(), cfg);
    REQUIRE(!rep.failed);
    CHECK(rep.epochs.back().train_accuracy == 1.0);
}

TEST_CASE("milestone factors compound") {
    TrainConfig cfg;
    cfg.epochs = 90;
    cfg.lr = 0.1;
    cfg.lr_milestones = {{30, 0.1}, {60, 0.1}};
    CHECK(effective_lr(cfg, 0) == doctest::Approx(0.1));
    CHECK(effective_lr(cfg, 29) == doctest::Approx(0.1));
    CHECK(effective_lr(cfg, 30) == doctest::Approx(0.01));
    CHECK(effective_lr(cfg, 75) == doctest::Approx(0.001));
}

TEST_CASE("train is deterministic given the seed") {
    Fixture fx;
    TrainConfig cfg;
    cfg.lr = 0.02;
    cfg.seed = 123;
    cfg.method = ScheduleSpec::gradual();
    cfg.epochs = 12;

    ClassifierModel a = fresh_model(fx.train, 7);
    ClassifierModel b = fresh_model(fx.train, 7);
    const RunReport ra = train(a, fx.splits(), cfg);
    const RunReport rb = train(b, fx.splits(), cfg);
    REQUIRE(ra.epochs.size() == rb.epochs.size());
    for (std::size_t e = 0; e < ra.epochs.size(); ++e) {
        REQUIRE(ra.epochs[e].train_loss == rb.epochs[e].train_loss);
        REQUIRE(ra.epochs[e].val_accuracy == rb.epochs[e].val_accuracy);
    }
    for (std::size_t i = 0; i < a.parameter_count(); ++i)
        REQUIRE(a.parameters()[i] == b.parameters()[i]);
}

TEST_CASE("one full-batch step without momentum equals the closed-form update") {
    Fixture fx;
    ClassifierModel m = fresh_model(fx.train, 11);
    const Vec theta0(m.parameters().begin(), m.parameters().end());

    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = static_cast<int>(fx.train.size());
    cfg.lr = 0.07;
    cfg.momentum = 0.0;
    cfg.weight_decay = 0.3;
    cfg.shuffle = false;
    cfg.method = LossSpec::parse("ce", {});

    ClassifierModel trained = m;
    train(trained, fx.splits(), cfg);

    // theta (1 - lr wd) - lr grad
    Vec grad(m.parameter_count(), 0.0);
    for (std::size_t n = 0; n < fx.train.size(); ++n) {
        const auto bw = m.backward(fx.train.row(n), fx.train.labels[n], LossSpec::parse("ce", {}));
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += bw.grad.flat[k];
    }
    for (std::size_t k = 0; k < grad.size(); ++k) {
        const double expect =
            theta0[k] * (1.0 - cfg.lr * cfg.weight_decay) -
            cfg.lr * grad[k] / static_cast<double>(fx.train.size());
        REQUIRE(std::abs(trained.parameters()[k] - expect) <= 1e-12);
    }
}

TEST_CASE("per-epoch (alpha, beta) mirror schedule_at exactly") {
    Fixture fx;
    for (const auto& spec :
         {ScheduleSpec::constant(), ScheduleSpec::two_phase(), ScheduleSpec::gradual()}) {
        ClassifierModel m = fresh_model(fx.train, 13);
        TrainConfig cfg;
        cfg.epochs = 12;
        cfg.lr = 0.01;
        cfg.seed = 9;
        cfg.method = spec;
        const RunReport rep = train(m, fx.splits(), cfg);
        REQUIRE(!rep.failed);
        for (const auto& row : rep.epochs) {
            const PhaseWeights w = schedule_at(spec, row.epoch, cfg.epochs);
            REQUIRE(row.alpha == w.alpha);
            REQUIRE(row.beta == w.beta);
            REQUIRE(row.focus == w.focus);
        }
    }
}

TEST_CASE("mixed weights (1,0) training is bitwise identical to the CE path") {
    Fixture fx;
    TrainConfig mixed_cfg;
    mixed_cfg.epochs = 10;
    mixed_cfg.lr = 0.02;
    mixed_cfg.seed = 31;
    mixed_cfg.method = LossSpec::parse("mixed", {{"alpha", 1.0}, {"beta", 0.0}});

    TrainConfig ce_cfg = mixed_cfg;
    ce_cfg.method = LossSpec::parse("ce", {});

    ClassifierModel a = fresh_model(fx.train, 17);
    ClassifierModel b = fresh_model(fx.train, 17);
    train(a, fx.splits(), mixed_cfg);
    train(b, fx.splits(), ce_cfg);
    for (std::size_t i = 0; i < a.parameter_count(); ++i)
        REQUIRE(a.parameters()[i] == b.parameters()[i]);
}

TEST_CASE("best epoch maximizes validation accuracy with earliest tie-break") {
    Fixture fx(4.0, 25);
    ClassifierModel m = fresh_model(fx.train, 19);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.lr = 0.03;
    cfg.seed = 23;
    const RunReport rep = train(m, fx.splits(), cfg);
    REQUIRE(!rep.failed);
    double best = -1.0;
    int best_epoch = -1;
    for (const auto& row : rep.epochs)
        if (row.val_accuracy > best) {
            best = row.val_accuracy;
            best_epoch = row.epoch;
        }
    CHECK(rep.best_val_epoch == best_epoch);
    CHECK(rep.val_accuracy_at_best == best);
    CHECK(rep.test_accuracy_at_best ==
          rep.epochs[static_cast<std::size_t>(best_epoch)].test_accuracy);
}

TEST_CASE("snapshots land on the requested epochs") {
    Fixture fx;
    ClassifierModel m = fresh_model(fx.train, 29);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.lr = 0.02;
    cfg.seed = 37;
    cfg.snapshot_epochs = {2, 7};
    const RunReport rep = train(m, fx.splits(), cfg);
    REQUIRE(rep.snapshots.size() == 2);
    CHECK(rep.snapshots[0].epoch == 2);
    CHECK(rep.snapshots[1].epoch == 7);
    CHECK(rep.snapshots[0].records.size() == fx.test.size());

    TrainConfig bad = cfg;
    bad.snapshot_epochs = {10};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("divergence aborts the run with a diagnostic") {
    // lr * wd = 100 multiplies parameters by ~ -99 per step: guaranteed
    // overflow within a few hundred updates.
    Fixture fx;
    ClassifierModel m = fresh_model(fx.train, 41);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.lr = 1000.0;
    cfg.weight_decay = 0.1;
    cfg.seed = 43;
    const RunReport rep = train(m, fx.splits(), cfg);
    CHECK(rep.failed);
    CHECK(!rep.failure_reason.empty());
}

TEST_CASE("lr_sweep basics") {
    Fixture fx(6.0, 20);
    auto factory = [&]() { return fresh_model(fx.train, 47); };
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.seed = 53;

    CHECK(default_lr_grid() == std::vector<double>{0.01, 0.005, 0.001});

    const SweepResult single = lr_sweep(factory, fx.splits(), cfg, {0.02});
    CHECK(single.best_index == 0);
    CHECK(single.reports.size() == 1);

    const SweepResult full = lr_sweep(factory, fx.splits(), cfg, default_lr_grid());
    CHECK(full.reports.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(!full.reports[i].failed);
        REQUIRE(full.best().val_accuracy_at_best >= full.reports[i].val_accuracy_at_best);
    }
}

TEST_CASE("lr_sweep picks the surviving run when one diverges") {
    Fixture fx;
    auto factory = [&]() { return fresh_model(fx.train, 59); };
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.weight_decay = 0.1;
    cfg.seed = 61;
    const SweepResult r = lr_sweep(factory, fx.splits(), cfg, {1000.0, 0.02});
    CHECK(r.reports[0].failed);
    CHECK(!r.reports[1].failed);
    CHECK(r.best_index == 1);

    CHECK_THROWS_AS(lr_sweep(factory, fx.splits(), cfg, std::vector<double>{1000.0}),
                    std::runtime_error);
}

TEST_CASE("lr_sweep breaks validation ties toward the smaller lr") {
    // Two lr values small enough to tie on validation accuracy.
    Fixture fx(10.0, 20);
    auto factory = [&]() { return fresh_model(fx.train, 67); };
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.seed = 71;
    const SweepResult r = lr_sweep(factory, fx.splits(), cfg, {1e-9, 1e-10});
    REQUIRE(r.reports[0].val_accuracy_at_best == r.reports[1].val_accuracy_at_best);
    CHECK(r.best_index == 1);  // the smaller lr
}

TEST_CASE("gradient volumes match quadrature and closed forms") {
    // target: alpha/2 + beta/6; nontarget: (alpha + beta/2)/2.
    CHECK(gradient_volume(MixWeights(1, 0), VolumeCase::target) ==
          doctest::Approx(0.5).epsilon(1e-9));
    CHECK(gradient_volume(MixWeights(1, 1), VolumeCase::target) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(gradient_volume(MixWeights(1, 2.5), VolumeCase::target) ==
          doctest::Approx(0.5 + 2.5 / 6.0).epsilon(1e-9));
    CHECK(gradient_volume(MixWeights(1, 0), VolumeCase::nontarget) ==
          doctest::Approx(0.5).epsilon(1e-9));
    CHECK(gradient_volume(MixWeights(0, 1), VolumeCase::nontarget) ==
          doctest::Approx(0.25).epsilon(1e-9));
    CHECK(gradient_volume(MixWeights(1, 1), VolumeCase::nontarget) ==
          doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("volume-matched lr scaling") {
    CHECK(volume_matched_ce_lr(0.1, MixWeights(1, 0)) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(volume_matched_ce_lr(0.3, MixWeights(1, 1)) ==
          doctest::Approx(0.3 * 4.0 / 3.0).epsilon(1e-9));

    double prev = 0.0;
    for (double beta = 0.5; beta <= 6.0; beta += 0.5) {
        const double lr = volume_matched_ce_lr(1.0, MixWeights(1, beta));
        REQUIRE(lr >= prev);
        prev = lr;
    }
    CHECK_THROWS_AS(volume_matched_ce_lr(0.0, MixWeights(1, 1)), std::invalid_argument);
}

TEST_CASE("report CSV has the fixed column layout") {
    Fixture fx;
    ClassifierModel m = fresh_model(fx.train, 73);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.lr = 0.01;
    cfg.seed = 79;
    const RunReport rep = train(m, fx.splits(), cfg);
    const std::string path = "/tmp/mixloss_report_test.csv";
    rep.write_csv(path);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "epoch,alpha,beta,F,train_loss,train_acc,val_acc,test_acc");
    int rows = 0;
    std::string line;
    while (std::getline(f, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("config validation rejects bad inputs") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.epochs = 10;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.batch_size = 8;
    cfg.lr_milestones = {{5, 0.1}, {5, 0.1}};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.lr_milestones = {{12, 0.1}};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
