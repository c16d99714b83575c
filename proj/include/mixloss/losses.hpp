#pragma once

#include <map>
#include <string>

#include "mixloss/softmax.hpp"

namespace mixloss {

// Mixing weights for alpha*CE + beta*EL. Both nonnegative, not both zero.
struct MixWeights {
    double alpha = 1.0;
    double beta = 1.0;

    MixWeights() = default;
    MixWeights(double a, double b);
};

// A loss value together with its gradient w.r.t. the logits.
struct LossEval {
    double value = 0.0;
    Vec grad_logits;
};

double ce_loss(const ProbabilityVector& p, int y);
double el_loss(const ProbabilityVector& p, int y);
double mixed_loss(const ProbabilityVector& p, int y, const MixWeights& w);

LossEval ce_grad(const LogitVector& q, int y);
LossEval el_grad(const LogitVector& q, int y);
LossEval mixed_grad(const LogitVector& q, int y, const MixWeights& w);

// Comparison losses.
double focal_loss(const ProbabilityVector& p, int y, double gamma = 2.0, double weight = 0.25);
double mae_loss(const ProbabilityVector& p, int y);
double tce_loss(const ProbabilityVector& p, int y, double a);
double generalized_ce_loss(const ProbabilityVector& p, int y, double qexp);
double mpce_loss(const ProbabilityVector& p, int y);  // experimental; see LossSpec
double complement_entropy(const ProbabilityVector& p, int y);

// Exact gap between CE and its first-order approximation EL:
// (-log p_y) - (1 - p_y).
double taylor_remainder(double p_y);

// A loss identity plus its parameters, as serialized in experiment configs.
// Names: ce, el, mixed, focal, mae, tce, gce, mpce, cot.
// Parameter keys: alpha, beta, gamma, weight, tce_alpha, q_exponent.
struct LossSpec {
    enum class Kind { ce, el, mixed, focal, mae, tce, gce, mpce, cot };

    Kind kind = Kind::ce;
    MixWeights weights{1.0, 1.0};  // mixed only
    double gamma = 2.0;            // focal
    double weight = 0.25;          // focal
    double tce_alpha = 0.5;        // tce
    double q_exponent = 0.7;       // gce
    bool experimental_ok = false;  // must be set to use mpce

    static LossSpec parse(const std::string& name, const std::map<std::string, double>& params);
    std::string name() const;
    std::map<std::string, double> params() const;

    double value(const ProbabilityVector& p, int y) const;
    // Loss value and gradient w.r.t. logits. cot has no training gradient
    // here (its two-pass optimization is out of scope) and throws.
    LossEval eval(const LogitVector& q, int y) const;
};

}  // namespace mixloss
