#include "mixloss/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixloss {

PhaseWeights weights_for_focus(double focus) {
    if (!(focus >= 0.0) || !(focus <= 0.5))
        throw std::invalid_argument("weights_for_focus: F must be in [0, 0.5], got " +
                                    std::to_string(focus));
    if (focus == 0.5) return PhaseWeights{0.0, 1.0, 0.5};
    return PhaseWeights{1.0, 1.0 / (1.0 - 2.0 * focus), focus};
}

FocusValue focus_of(const MixWeights& w) {
    if (w.beta == 0.0)
        throw std::invalid_argument("focus_of: beta = 0 (pure CE) has no interior focus");
    const double raw = 0.5 * (1.0 - w.alpha / w.beta);
    FocusValue out;
    out.out_of_range = raw < 0.0 || raw > 0.5;
    out.focus = std::clamp(raw, 0.0, 0.5);
    return out;
}

ScheduleSpec ScheduleSpec::constant() { return ScheduleSpec{}; }

ScheduleSpec ScheduleSpec::two_phase(double switch_fraction) {
    ScheduleSpec s;
    s.protocol = Protocol::two_phase;
    s.switch_fraction = switch_fraction;
    s.validate();
    return s;
}

ScheduleSpec ScheduleSpec::gradual(std::vector<double> ladder) {
    ScheduleSpec s;
    s.protocol = Protocol::gradual;
    s.focus_ladder = std::move(ladder);
    s.validate();
    return s;
}

ScheduleSpec ScheduleSpec::parse(const std::string& protocol_name) {
    if (protocol_name == "f0") return constant();
    if (protocol_name == "f0-05") return two_phase();
    if (protocol_name == "f0..05") return gradual();
    throw std::invalid_argument("ScheduleSpec: unknown protocol '" + protocol_name +
                                "' (expected f0, f0-05 or f0..05)");
}

std::string ScheduleSpec::name() const {
    switch (protocol) {
        case Protocol::constant_f0: return "f0";
        case Protocol::two_phase: return "f0-05";
        case Protocol::gradual: return "f0..05";
    }
    return "f0";
}

void ScheduleSpec::validate() const {
    if (protocol == Protocol::two_phase) {
        if (!(switch_fraction > 0.0) || !(switch_fraction < 1.0))
            throw std::invalid_argument("ScheduleSpec: switch_fraction must be in (0,1)");
    }
    if (protocol == Protocol::gradual) {
        if (focus_ladder.empty())
            throw std::invalid_argument("ScheduleSpec: focus ladder must be non-empty");
        for (std::size_t i = 0; i < focus_ladder.size(); ++i) {
            const double f = focus_ladder[i];
            if (!(f >= 0.0) || !(f <= 0.5))
                throw std::invalid_argument("ScheduleSpec: ladder entries must lie in [0, 0.5]");
            if (i > 0 && !(f > focus_ladder[i - 1]))
                throw std::invalid_argument("ScheduleSpec: focus ladder must be strictly increasing");
        }
    }
}

PhaseWeights schedule_at(const ScheduleSpec& spec, int epoch, int total_epochs) {
    if (total_epochs < 1) throw std::invalid_argument("schedule_at: total_epochs must be >= 1");
    if (epoch < 0 || epoch >= total_epochs)
        throw std::invalid_argument("schedule_at: epoch " + std::to_string(epoch) +
                                    " outside [0, " + std::to_string(total_epochs) + ")");
    spec.validate();

    switch (spec.protocol) {
        case ScheduleSpec::Protocol::constant_f0:
            return weights_for_focus(0.0);
        case ScheduleSpec::Protocol::two_phase: {
            const int switch_epoch =
                static_cast<int>(std::floor(spec.switch_fraction * static_cast<double>(total_epochs)));
            return weights_for_focus(epoch < switch_epoch ? 0.0 : 0.5);
        }
        case ScheduleSpec::Protocol::gradual: {
            const int phases = static_cast<int>(spec.focus_ladder.size());
            if (total_epochs < phases)
                throw std::invalid_argument("schedule_at: gradual protocol needs total_epochs >= " +
                                            std::to_string(phases) + " (one per ladder rung)");
            // Phase k spans [floor(k*T/L), floor((k+1)*T/L)); the remainder
            // of a non-divisible T lands in the final phase.
            int phase = 0;
            for (int k = phases - 1; k >= 0; --k) {
                const long long start = static_cast<long long>(k) * total_epochs / phases;
                if (epoch >= start) {
                    phase = k;
                    break;
                }
            }
            return weights_for_focus(spec.focus_ladder[static_cast<std::size_t>(phase)]);
        }
    }
    throw std::logic_error("schedule_at: unreachable");
}

}  // namespace mixloss
