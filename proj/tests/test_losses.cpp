#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixloss/losses.hpp"
#include "mixloss/rng.hpp"
#include "oracles.hpp"

using namespace mixloss;

namespace {

ProbabilityVector probs(Vec v) { return ProbabilityVector::from_raw(std::move(v)); }

// Random logits in +-8 for C classes.
Vec random_logits(RandomSource& rng, std::size_t c) {
    Vec q(c);
    for (auto& v : q) v = rng.uniform(-8, 8);
    return q;
}

}  // namespace

TEST_CASE("ce_loss values") {
    CHECK(ce_loss(probs({1.0, 0.0}), 0) == 0.0);
    CHECK(ce_loss(probs({std::exp(-1.0), 1.0 - std::exp(-1.0)}), 0) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ce_loss(probs({0.5, 0.5}), 0) == doctest::Approx(0.69314718055994531).epsilon(1e-15));
    CHECK_THROWS_AS(ce_loss(probs({0.5, 0.5}), 2), std::invalid_argument);
    CHECK_THROWS_AS(ce_loss(probs({0.5, 0.5}), -1), std::invalid_argument);
}

TEST_CASE("ce_loss clamps p_y = 0 instead of returning inf") {
    const double v = ce_loss(probs({0.0, 1.0}), 0);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(-std::log(1e-300)));
}

TEST_CASE("el_loss values") {
    CHECK(el_loss(probs({1.0, 0.0}), 0) == 0.0);
    CHECK(el_loss(probs({0.0, 1.0}), 0) == 1.0);
    CHECK(el_loss(probs({0.25, 0.75}), 0) == 0.75);
}

TEST_CASE("ce_grad closed form") {
    const LossEval e = ce_grad(LogitVector({0.0, 0.0}), 0);
    CHECK(e.grad_logits[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(e.grad_logits[1] == doctest::Approx(0.5).epsilon(1e-15));

    const LossEval f = ce_grad(LogitVector({1.0, 0.0}), 0);
    CHECK(f.grad_logits[0] == doctest::Approx(-0.26894142136999512).epsilon(1e-12));
    CHECK(f.grad_logits[1] == doctest::Approx(0.26894142136999512).epsilon(1e-12));
}

TEST_CASE("el_grad closed form and its 0.25 peak") {
    const LossEval e = el_grad(LogitVector({0.0, 0.0}), 0);
    CHECK(e.grad_logits[0] == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(e.grad_logits[1] == doctest::Approx(0.25).epsilon(1e-15));

    const LossEval f = el_grad(LogitVector({1.0, 0.0}), 0);
    CHECK(f.grad_logits[0] == doctest::Approx(-0.19661193324148185).epsilon(1e-12));

    // |p(p-1)| over a fine grid: maximum 0.25, attained at p = 0.5.
    double best = 0.0, best_p = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        const double p = i / 100000.0;
        const double mag = std::abs(p * (p - 1.0));
        if (mag > best) {
            best = mag;
            best_p = p;
        }
    }
    CHECK(best == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(best_p == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("mixed_loss reduces to its parts") {
    RandomSource rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const Vec q = random_logits(rng, 2 + rng.below(5));
        const auto p = softmax(LogitVector(q));
        const int y = static_cast<int>(rng.below(p.size()));
        CHECK(mixed_loss(p, y, MixWeights(1, 0)) == ce_loss(p, y));
        CHECK(mixed_loss(p, y, MixWeights(0, 1)) == el_loss(p, y));
    }
    CHECK(mixed_loss(probs({0.5, 0.5}), 0, MixWeights(1, 1)) ==
          doctest::Approx(1.1931471805599453).epsilon(1e-15));
}

TEST_CASE("mixed_grad trivial case and linearity") {
    const LossEval e = mixed_grad(LogitVector({0.0, 0.0}), 0, MixWeights(1, 1));
    CHECK(e.grad_logits[0] == doctest::Approx(-0.75).epsilon(1e-15));
    CHECK(e.grad_logits[1] == doctest::Approx(0.75).epsilon(1e-15));

    RandomSource rng(2);
    for (int rep = 0; rep < 300; ++rep) {
        const Vec q = random_logits(rng, 2 + rng.below(9));
        const int y = static_cast<int>(rng.below(q.size()));
        const double alpha = rng.uniform(0, 3), beta = rng.uniform(0.01, 5);
        const LossEval mix = mixed_grad(LogitVector(q), y, MixWeights(alpha, beta));
        const LossEval ce = ce_grad(LogitVector(q), y);
        const LossEval el = el_grad(LogitVector(q), y);
        for (std::size_t j = 0; j < q.size(); ++j)
            REQUIRE(std::abs(mix.grad_logits[j] -
                             (alpha * ce.grad_logits[j] + beta * el.grad_logits[j])) <= 1e-12);
    }
}

TEST_CASE("gradients sum to zero") {
    RandomSource rng(3);
    const MixWeights cases[] = {MixWeights(1, 0), MixWeights(0, 1), MixWeights(1, 1),
                                MixWeights(1, 2.5), MixWeights(1, 5)};
    for (int rep = 0; rep < 400; ++rep) {
        const Vec q = random_logits(rng, 2 + rng.below(9));
        const int y = static_cast<int>(rng.below(q.size()));
        const LossEval e = mixed_grad(LogitVector(q), y, cases[rng.below(5)]);
        double sum = 0.0;
        for (double g : e.grad_logits) sum += g;
        REQUIRE(std::abs(sum) <= 1e-10);
    }
}

TEST_CASE("mixed_grad matches central finite differences (1000 random cases)") {
    RandomSource rng(4);
    const MixWeights cases[] = {MixWeights(1, 0), MixWeights(0, 1), MixWeights(1, 1),
                                MixWeights(1, 2.5), MixWeights(1, 5)};
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t c = 2 + rng.below(9);  // C in {2..10}
        const Vec q = random_logits(rng, c);
        const int y = static_cast<int>(rng.below(c));
        const MixWeights w = cases[rep % 5];

        const LossEval analytic = mixed_grad(LogitVector(q), y, w);

        oracle::LVec ql(q.begin(), q.end());
        const auto fd = oracle::fd_gradient(
            [&](const oracle::LVec& v) { return oracle::mixed_loss_ld(v, y, w.alpha, w.beta); }, ql,
            1e-6L);
        for (std::size_t j = 0; j < c; ++j)
            REQUIRE(oracle::close(analytic.grad_logits[j], fd[j], 1e-6, 1e-9));
    }
}

TEST_CASE("true-class gradient magnitude peaks at 0.5(1 - alpha/beta)") {
    // Scan |beta p^2 + p(alpha - beta) - alpha| over p.
    auto located_peak = [](double alpha, double beta) {
        double best = -1.0, best_p = 0.0;
        for (int i = 0; i <= 1000000; ++i) {
            const double p = i / 1000000.0;
            const double mag = std::abs(beta * p * p + p * (alpha - beta) - alpha);
            if (mag > best) {
                best = mag;
                best_p = p;
            }
        }
        return best_p;
    };
    for (double beta : {2.5, 5.0, 100.0}) {
        const double expected = 0.5 * (1.0 - 1.0 / beta);
        CHECK(located_peak(1.0, beta) == doctest::Approx(expected).epsilon(1e-3));
    }
    CHECK(located_peak(0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(located_peak(1.0, 1.0) == doctest::Approx(0.0).scale(1).epsilon(1e-3));
}

TEST_CASE("mixed_grad FD check at a fixed 3-class point") {
    const Vec q = {1.0, 0.0, -1.0};
    const int y = 1;
    const MixWeights w(1.0, 2.5);
    const LossEval analytic = mixed_grad(LogitVector(q), y, w);
    oracle::LVec ql(q.begin(), q.end());
    const auto fd = oracle::fd_gradient(
        [&](const oracle::LVec& v) { return oracle::mixed_loss_ld(v, y, w.alpha, w.beta); }, ql, 1e-6L);
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(oracle::close(analytic.grad_logits[j], fd[j], 1e-6, 1e-9));
}

TEST_CASE("focal loss values and CE reduction") {
    CHECK(focal_loss(probs({1.0, 0.0}), 0) == 0.0);
    RandomSource rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const auto p = softmax(LogitVector(random_logits(rng, 3)));
        const int y = static_cast<int>(rng.below(3));
        CHECK(focal_loss(p, y, 0.0, 1.0) == doctest::Approx(ce_loss(p, y)).epsilon(1e-14));
    }
    // 0.25 * (1-0.5)^2 * ln 2
    CHECK(focal_loss(probs({0.5, 0.5}), 0, 2.0, 0.25) ==
          doctest::Approx(0.043321698784996582).epsilon(1e-14));
}

TEST_CASE("mae equals twice the expectation loss") {
    CHECK(mae_loss(probs({0.0, 1.0, 0.0}), 1) == 0.0);
    CHECK(mae_loss(probs({0.5, 0.5}), 0) == 1.0);
    RandomSource rng(6);
    for (int rep = 0; rep < 200; ++rep) {
        const auto p = softmax(LogitVector(random_logits(rng, 2 + rng.below(6))));
        const int y = static_cast<int>(rng.below(p.size()));
        REQUIRE(std::abs(mae_loss(p, y) - 2.0 * el_loss(p, y)) <= 1e-12);
    }
}

TEST_CASE("tce evaluates the printed formula verbatim") {
    // a = 0 collapses to (1 - log p) - 1 = -log p.
    RandomSource rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const auto p = softmax(LogitVector(random_logits(rng, 4)));
        const int y = static_cast<int>(rng.below(4));
        CHECK(tce_loss(p, y, 0.0) == doctest::Approx(ce_loss(p, y)).epsilon(1e-12));
    }
    // Value at p_y = 1 is nonzero for a > 0, exactly as printed.
    CHECK(tce_loss(probs({1.0, 0.0}), 0, 0.5) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK_THROWS_AS(tce_loss(probs({0.5, 0.5}), 0, 1.0), std::invalid_argument);

    // Strictly decreasing in p_y on a dense grid.
    for (double a : {0.1, 0.5, 0.9}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= 2000; ++i) {
            const double py = i / 2000.0;
            const double v = tce_loss(probs({py, 1.0 - py}), 0, a);
            REQUIRE(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("generalized CE limits") {
    RandomSource rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        const auto p = softmax(LogitVector(random_logits(rng, 3)));
        const int y = static_cast<int>(rng.below(3));
        CHECK(generalized_ce_loss(p, y, 1.0) == doctest::Approx(el_loss(p, y)).epsilon(1e-14));
        CHECK(generalized_ce_loss(p, y, 1e-4) == doctest::Approx(ce_loss(p, y)).epsilon(1e-3));
    }
    CHECK(generalized_ce_loss(probs({0.5, 0.5}), 0, 0.7) ==
          doctest::Approx(0.54918256189648837).epsilon(1e-14));
    CHECK_THROWS_AS(generalized_ce_loss(probs({0.5, 0.5}), 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(generalized_ce_loss(probs({0.5, 0.5}), 0, 1.5), std::invalid_argument);
}

TEST_CASE("mpce values") {
    CHECK(mpce_loss(probs({0.7, 0.3}), 0) == 0.0);           // argmax == y
    CHECK(mpce_loss(probs({0.25, 0.25, 0.25, 0.25}), 2) == 0.0);  // uniform
    CHECK(mpce_loss(probs({0.2, 0.8}), 0) == doctest::Approx(0.96566274746046022).epsilon(1e-14));
}

TEST_CASE("complement entropy of the renormalized non-target mass") {
    CHECK(complement_entropy(probs({0.5, 0.25, 0.25}), 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(complement_entropy(probs({0.5, 0.5, 0.0}), 0) == 0.0);   // concentrated
    CHECK(complement_entropy(probs({1.0, 0.0, 0.0}), 0) == 0.0);   // p_y = 1
    // Uniform non-target mass over C-1 classes -> ln(C-1).
    CHECK(complement_entropy(probs({0.4, 0.2, 0.2, 0.2}), 0) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("taylor remainder: exact CE-EL gap") {
    CHECK(taylor_remainder(1.0) == 0.0);
    CHECK(taylor_remainder(0.5) == doctest::Approx(0.19314718055994531).epsilon(1e-14));
    CHECK_THROWS_AS(taylor_remainder(0.0), std::invalid_argument);

    double max_gap = 0.0;
    for (int i = 0; i <= 100000; ++i) {
        const double p = 0.75 + 0.25 * i / 100000.0;
        max_gap = std::max(max_gap, taylor_remainder(p));
    }
    CHECK(max_gap <= 0.055);
}

TEST_CASE("EL lower-bounds CE; squared gap beats -8 log p") {
    RandomSource rng(9);
    for (int i = 0; i < 100000; ++i) {
        const double p = rng.uniform01();
        if (p <= 0.0) continue;
        REQUIRE(1.0 - p <= -std::log(p));
        REQUIRE((1.0 - p) * (1.0 - p) <= -8.0 * std::log(p));
    }
}

TEST_CASE("CE gradient magnitude at y approaches 1 for vanishing p_y") {
    const LossEval e = ce_grad(LogitVector({-30.0, 30.0}), 0);
    CHECK(std::abs(e.grad_logits[0]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("comparison-loss gradients match finite differences") {
    RandomSource rng(10);
    const char* names[] = {"focal", "mae", "tce", "gce", "mpce"};
    for (const char* name : names) {
        LossSpec spec = LossSpec::parse(name, {});
        spec.experimental_ok = true;
        for (int rep = 0; rep < 120; ++rep) {
            const std::size_t c = 2 + rng.below(5);
            const Vec q = random_logits(rng, c);
            const int y = static_cast<int>(rng.below(c));
            // mpce is only piecewise-smooth: keep a clear argmax margin.
            if (spec.kind == LossSpec::Kind::mpce) {
                Vec sorted = q;
                std::sort(sorted.begin(), sorted.end());
                if (sorted[c - 1] - sorted[c - 2] < 0.2) continue;
            }
            const LossEval analytic = spec.eval(LogitVector(q), y);

            oracle::LVec ql(q.begin(), q.end());
            const auto fd = oracle::fd_gradient(
                [&](const oracle::LVec& v) {
                    const auto pl = oracle::softmax_ld(v);
                    Vec pd(pl.size());
                    for (std::size_t i = 0; i < pl.size(); ++i) pd[i] = static_cast<double>(pl[i]);
                    // Renormalize double rounding so from_raw accepts it.
                    double s = 0.0;
                    for (double x : pd) s += x;
                    for (double& x : pd) x /= s;
                    return static_cast<long double>(spec.value(ProbabilityVector::from_raw(pd), y));
                },
                ql, 1e-6L);
            for (std::size_t j = 0; j < c; ++j)
                REQUIRE(oracle::close(analytic.grad_logits[j], fd[j], 1e-5, 1e-7));
        }
    }
}

TEST_CASE("LossSpec round-trips names and parameters") {
    LossSpec focal = LossSpec::parse("focal", {{"gamma", 3.0}, {"weight", 0.5}});
    CHECK(focal.name() == "focal");
    CHECK(focal.gamma == 3.0);
    CHECK(focal.weight == 0.5);
    CHECK(focal.params().at("gamma") == 3.0);

    LossSpec mixed = LossSpec::parse("mixed", {{"alpha", 1.0}, {"beta", 2.5}});
    CHECK(mixed.weights.beta == 2.5);

    CHECK_THROWS_AS(LossSpec::parse("nope", {}), std::invalid_argument);
}

TEST_CASE("mpce is gated behind the experimental flag") {
    LossSpec spec = LossSpec::parse("mpce", {});
    const auto p = probs({0.2, 0.8});
    CHECK_THROWS_AS(spec.value(p, 0), std::invalid_argument);
    spec.experimental_ok = true;
    CHECK_NOTHROW(spec.value(p, 0));
}

TEST_CASE("cot exposes the value but refuses a training gradient") {
    LossSpec spec = LossSpec::parse("cot", {});
    CHECK(spec.value(probs({0.5, 0.25, 0.25}), 0) == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(spec.eval(LogitVector({0.0, 0.0, 0.0}), 0), std::logic_error);
}

TEST_CASE("MixWeights invariants") {
    CHECK_THROWS_AS(MixWeights(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(MixWeights(-1.0, 2.0), std::invalid_argument);
    CHECK_NOTHROW(MixWeights(0.0, 1.0));
}
