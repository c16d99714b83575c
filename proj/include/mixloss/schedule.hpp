#pragma once

#include <string>
#include <vector>

#include "mixloss/losses.hpp"

namespace mixloss {

// Mixing weights for one training phase, tied to the focus value F: the
// p(y|x) at which the true-class gradient magnitude of alpha*CE + beta*EL
// peaks. F < 0.5 maps to (alpha, beta) = (1, 1/(1-2F)); F = 0.5 to (0, 1).
struct PhaseWeights {
    double alpha;
    double beta;
    double focus;

    MixWeights mix() const { return MixWeights(alpha, beta); }
};

PhaseWeights weights_for_focus(double focus);

struct FocusValue {
    double focus;          // clamped to [0, 0.5]
    bool out_of_range;     // raw value fell outside [0, 0.5]
};
// Inverse map: the focus implied by arbitrary mixing weights,
// 0.5 * (1 - alpha/beta). Rejects beta = 0 (pure CE has no interior peak).
FocusValue focus_of(const MixWeights& w);

// The three focus protocols. Config strings: "f0" (constant F=0),
// "f0-05" (two phase: F=0 then F=0.5 for the tail), "f0..05"
// (gradual ladder over equal-length phases).
struct ScheduleSpec {
    enum class Protocol { constant_f0, two_phase, gradual };

    Protocol protocol = Protocol::constant_f0;
    double switch_fraction = 0.95;                              // two_phase
    std::vector<double> focus_ladder = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};  // gradual

    static ScheduleSpec constant();
    static ScheduleSpec two_phase(double switch_fraction = 0.95);
    static ScheduleSpec gradual(std::vector<double> ladder = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5});

    static ScheduleSpec parse(const std::string& protocol_name);
    std::string name() const;

    void validate() const;
};

// Weights in force at a given epoch. Phase boundaries for the gradual
// protocol are floor(k*total/L) for phase k of L phases; remainder epochs
// belong to the last phase.
PhaseWeights schedule_at(const ScheduleSpec& spec, int epoch, int total_epochs);

}  // namespace mixloss
