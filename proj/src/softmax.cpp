#include "mixloss/softmax.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mixloss {

LogitVector::LogitVector(Vec v) : values(std::move(v)) {
    if (values.size() < 2) throw std::invalid_argument("LogitVector: need at least 2 classes");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw std::invalid_argument("LogitVector: non-finite entry at index " + std::to_string(i));
}

ProbabilityVector ProbabilityVector::from_raw(Vec v) {
    if (v.size() < 2) throw std::invalid_argument("ProbabilityVector: need at least 2 classes");
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0))
            throw std::invalid_argument("ProbabilityVector: negative or non-finite entry at index " +
                                        std::to_string(i));
        sum += v[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("ProbabilityVector: entries sum to " + std::to_string(sum) +
                                    ", expected 1 within 1e-9");
    ProbabilityVector p;
    p.values = std::move(v);
    return p;
}

ProbabilityVector softmax(const LogitVector& q) {
    const Vec& v = q.values;
    double m = v[0];
    for (double x : v) m = std::max(m, x);

    Vec e(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        e[i] = std::exp(v[i] - m);
        sum += e[i];
    }
    ProbabilityVector p;
    p.values.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) p.values[i] = e[i] / sum;
    return p;
}

Vec log_softmax(const LogitVector& q) {
    const Vec& v = q.values;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[arg]) arg = i;
    const double m = v[arg];

    double rest = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (i != arg) rest += std::exp(v[i] - m);
    const double log_z = std::log1p(rest);

    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - m - log_z;
    return out;
}

}  // namespace mixloss
