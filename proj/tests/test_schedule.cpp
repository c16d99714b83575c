#include "doctest.h"

#include <cmath>

#include "mixloss/schedule.hpp"

using namespace mixloss;

TEST_CASE("weights_for_focus matches the closed form") {
    const PhaseWeights w0 = weights_for_focus(0.0);
    CHECK(w0.alpha == 1.0);
    CHECK(w0.beta == 1.0);

    const PhaseWeights w4 = weights_for_focus(0.4);
    CHECK(w4.alpha == 1.0);
    CHECK(w4.beta == doctest::Approx(5.0).epsilon(1e-12));

    const PhaseWeights w5 = weights_for_focus(0.5);
    CHECK(w5.alpha == 0.0);
    CHECK(w5.beta == 1.0);

    CHECK_THROWS_AS(weights_for_focus(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(weights_for_focus(0.6), std::invalid_argument);
}

TEST_CASE("beta stays finite and >= 1 below the singular focus") {
    for (int i = 0; i < 1000; ++i) {
        const double f = 0.4999 * i / 999.0;
        const PhaseWeights w = weights_for_focus(f);
        REQUIRE(std::isfinite(w.beta));
        REQUIRE(w.beta >= 1.0);
    }
}

TEST_CASE("focus_of inverts weights_for_focus") {
    CHECK(focus_of(MixWeights(1, 1)).focus == 0.0);
    CHECK(focus_of(MixWeights(1, 2.5)).focus == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(focus_of(MixWeights(0, 1)).focus == 0.5);
    CHECK_THROWS_AS(focus_of(MixWeights(1, 0)), std::invalid_argument);

    for (int i = 0; i < 500; ++i) {
        const double f = 0.5 * i / 500.0;  // [0, 0.5)
        const PhaseWeights w = weights_for_focus(f);
        const FocusValue back = focus_of(w.mix());
        REQUIRE(std::abs(back.focus - f) <= 1e-12);
        REQUIRE(!back.out_of_range);
    }
}

TEST_CASE("focus_of flags out-of-range weights") {
    const FocusValue v = focus_of(MixWeights(3.0, 1.0));  // raw -1
    CHECK(v.out_of_range);
    CHECK(v.focus == 0.0);
}

TEST_CASE("constant protocol pins F = 0") {
    const ScheduleSpec spec = ScheduleSpec::constant();
    for (int e = 0; e < 50; ++e) {
        const PhaseWeights w = schedule_at(spec, e, 50);
        REQUIRE(w.alpha == 1.0);
        REQUIRE(w.beta == 1.0);
        REQUIRE(w.focus == 0.0);
    }
}

TEST_CASE("two-phase switches at floor(0.95 T)") {
    const ScheduleSpec spec = ScheduleSpec::two_phase();
    for (int e = 0; e < 100; ++e) {
        const PhaseWeights w = schedule_at(spec, e, 100);
        if (e < 95) {
            REQUIRE(w.focus == 0.0);
        } else {
            REQUIRE(w.focus == 0.5);
            REQUIRE(w.alpha == 0.0);
            REQUIRE(w.beta == 1.0);
        }
    }
}

TEST_CASE("gradual ladder boundaries at floor(k T / L)") {
    const ScheduleSpec spec = ScheduleSpec::gradual();

    // 240 epochs: steps exactly at 40, 80, 120, 160, 200.
    const int expected_switches[] = {40, 80, 120, 160, 200};
    int found = 0;
    double prev = schedule_at(spec, 0, 240).focus;
    for (int e = 1; e < 240; ++e) {
        const double f = schedule_at(spec, e, 240).focus;
        if (f != prev) {
            REQUIRE(found < 5);
            REQUIRE(e == expected_switches[found]);
            ++found;
        }
        prev = f;
    }
    CHECK(found == 5);

    // Six epochs: one rung per epoch.
    const double ladder[] = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    for (int e = 0; e < 6; ++e)
        REQUIRE(schedule_at(spec, e, 6).focus == doctest::Approx(ladder[e]).epsilon(1e-15));
}

TEST_CASE("every protocol starts at (1, 1)") {
    for (const auto& spec :
         {ScheduleSpec::constant(), ScheduleSpec::two_phase(), ScheduleSpec::gradual()}) {
        for (int total : {6, 50, 90, 100, 240}) {
            const PhaseWeights w = schedule_at(spec, 0, total);
            REQUIRE(w.alpha == 1.0);
            REQUIRE(w.beta == 1.0);
        }
    }
}

TEST_CASE("focus never decreases with epoch") {
    for (const auto& spec :
         {ScheduleSpec::constant(), ScheduleSpec::two_phase(), ScheduleSpec::gradual()}) {
        for (int total : {6, 7, 13, 90, 100, 240}) {
            double prev = -1.0;
            for (int e = 0; e < total; ++e) {
                const double f = schedule_at(spec, e, total).focus;
                REQUIRE(f >= prev);
                prev = f;
            }
        }
    }
}

TEST_CASE("schedule_at rejects out-of-range epochs") {
    const ScheduleSpec spec = ScheduleSpec::constant();
    CHECK_THROWS_AS(schedule_at(spec, 50, 50), std::invalid_argument);
    CHECK_THROWS_AS(schedule_at(spec, -1, 50), std::invalid_argument);
    CHECK_THROWS_AS(schedule_at(ScheduleSpec::gradual(), 0, 3), std::invalid_argument);
}

TEST_CASE("protocol strings parse and print") {
    CHECK(ScheduleSpec::parse("f0").protocol == ScheduleSpec::Protocol::constant_f0);
    CHECK(ScheduleSpec::parse("f0-05").protocol == ScheduleSpec::Protocol::two_phase);
    CHECK(ScheduleSpec::parse("f0..05").protocol == ScheduleSpec::Protocol::gradual);
    CHECK(ScheduleSpec::parse("f0..05").name() == "f0..05");
    CHECK_THROWS_AS(ScheduleSpec::parse("bogus"), std::invalid_argument);
}

TEST_CASE("spec validation catches bad ladders and fractions") {
    ScheduleSpec bad = ScheduleSpec::constant();
    bad.protocol = ScheduleSpec::Protocol::gradual;
    bad.focus_ladder = {0.0, 0.2, 0.1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.focus_ladder = {0.0, 0.6};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK_THROWS_AS(ScheduleSpec::two_phase(0.0), std::invalid_argument);
    CHECK_THROWS_AS(ScheduleSpec::two_phase(1.0), std::invalid_argument);
}
