#pragma once

#include <cstddef>

#include "mixloss/linalg.hpp"

namespace mixloss {

// Pre-softmax scores for C classes. At least two entries, all finite.
struct LogitVector {
    Vec values;

    explicit LogitVector(Vec v);
    std::size_t size() const { return values.size(); }
};

// Pseudo-probabilities for C classes: entries >= 0 and summing to 1
// within 1e-9.
struct ProbabilityVector {
    Vec values;

    static ProbabilityVector from_raw(Vec v);
    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

private:
    ProbabilityVector() = default;
    friend ProbabilityVector softmax(const LogitVector&);
};

// Max-subtracted softmax: p_i = exp(q_i - max q) / sum_k exp(q_k - max q).
ProbabilityVector softmax(const LogitVector& q);

// log of softmax(q) computed without intermediate underflow:
// q_i - max q - log1p(sum over non-argmax of exp(q_k - max q)).
Vec log_softmax(const LogitVector& q);

}  // namespace mixloss
