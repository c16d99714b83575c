#include "mixloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixloss {

namespace {

// Floor keeps -log finite; gradients always use the unclamped softmax.
constexpr double kProbFloor = 1e-300;

void check_label(std::size_t classes, int y, const char* who) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
        throw std::invalid_argument(std::string(who) + ": label " + std::to_string(y) +
                                    " out of range for " + std::to_string(classes) + " classes");
}

double clamped(double p_y) { return std::min(1.0, std::max(p_y, kProbFloor)); }

// d(loss)/d(p_y) chained through the softmax Jacobian row for losses that
// depend on the probabilities only through p_y:
// dL/dq_j = dL/dp_y * p_y * (delta_{jy} - p_j).
Vec chain_scalar(const ProbabilityVector& p, int y, double dloss_dpy) {
    const std::size_t n = p.size();
    const double py = p[static_cast<std::size_t>(y)];
    Vec g(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double d = (static_cast<int>(j) == y ? 1.0 : 0.0) - p[j];
        g[j] = dloss_dpy * py * d;
    }
    return g;
}

}  // namespace

MixWeights::MixWeights(double a, double b) : alpha(a), beta(b) {
    if (!(alpha >= 0.0) || !(beta >= 0.0))
        throw std::invalid_argument("MixWeights: alpha and beta must be nonnegative");
    if (alpha + beta <= 0.0)
        throw std::invalid_argument("MixWeights: alpha + beta must be positive");
}

double ce_loss(const ProbabilityVector& p, int y) {
    check_label(p.size(), y, "ce_loss");
    return -std::log(clamped(p[static_cast<std::size_t>(y)]));
}

double el_loss(const ProbabilityVector& p, int y) {
    check_label(p.size(), y, "el_loss");
    return 1.0 - p[static_cast<std::size_t>(y)];
}

double mixed_loss(const ProbabilityVector& p, int y, const MixWeights& w) {
    check_label(p.size(), y, "mixed_loss");
    return w.alpha * ce_loss(p, y) + w.beta * el_loss(p, y);
}

LossEval ce_grad(const LogitVector& q, int y) {
    check_label(q.size(), y, "ce_grad");
    const ProbabilityVector p = softmax(q);
    LossEval out;
    out.value = ce_loss(p, y);
    out.grad_logits.resize(p.size());
    for (std::size_t j = 0; j < p.size(); ++j)
        out.grad_logits[j] = (static_cast<int>(j) == y) ? p[j] - 1.0 : p[j];
    return out;
}

LossEval el_grad(const LogitVector& q, int y) {
    check_label(q.size(), y, "el_grad");
    const ProbabilityVector p = softmax(q);
    const double py = p[static_cast<std::size_t>(y)];
    LossEval out;
    out.value = el_loss(p, y);
    out.grad_logits.resize(p.size());
    for (std::size_t j = 0; j < p.size(); ++j)
        out.grad_logits[j] = (static_cast<int>(j) == y) ? py * (py - 1.0) : py * p[j];
    return out;
}

LossEval mixed_grad(const LogitVector& q, int y, const MixWeights& w) {
    check_label(q.size(), y, "mixed_grad");
    const ProbabilityVector p = softmax(q);
    const double py = p[static_cast<std::size_t>(y)];
    LossEval out;
    out.value = mixed_loss(p, y, w);
    out.grad_logits.resize(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (static_cast<int>(j) == y)
            out.grad_logits[j] = w.beta * py * py + py * (w.alpha - w.beta) - w.alpha;
        else
            out.grad_logits[j] = p[j] * (w.beta * py + w.alpha);
    }
    return out;
}

double focal_loss(const ProbabilityVector& p, int y, double gamma, double weight) {
    check_label(p.size(), y, "focal_loss");
    if (!(gamma >= 0.0)) throw std::invalid_argument("focal_loss: gamma must be >= 0");
    if (!(weight > 0.0)) throw std::invalid_argument("focal_loss: weight must be > 0");
    const double py = p[static_cast<std::size_t>(y)];
    return weight * std::pow(1.0 - py, gamma) * (-std::log(clamped(py)));
}

double mae_loss(const ProbabilityVector& p, int y) {
    check_label(p.size(), y, "mae_loss");
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double target = (static_cast<int>(j) == y) ? 1.0 : 0.0;
        s += std::abs(target - p[j]);
    }
    return s;
}

double tce_loss(const ProbabilityVector& p, int y, double a) {
    check_label(p.size(), y, "tce_loss");
    if (!(a < 1.0)) throw std::invalid_argument("tce_loss: a must be < 1");
    const double one_minus_a = 1.0 - a;
    const double base = 1.0 - std::log(clamped(p[static_cast<std::size_t>(y)]));
    return (std::pow(base, one_minus_a) - 1.0 / one_minus_a) / one_minus_a;
}

double generalized_ce_loss(const ProbabilityVector& p, int y, double qexp) {
    check_label(p.size(), y, "generalized_ce_loss");
    if (!(qexp > 0.0) || !(qexp <= 1.0))
        throw std::invalid_argument("generalized_ce_loss: q exponent must be in (0,1]");
    return (1.0 - std::pow(p[static_cast<std::size_t>(y)], qexp)) / qexp;
}

double mpce_loss(const ProbabilityVector& p, int y) {
    check_label(p.size(), y, "mpce_loss");
    double pmax = p[0];
    for (std::size_t j = 1; j < p.size(); ++j) pmax = std::max(pmax, p[j]);
    const double py = p[static_cast<std::size_t>(y)];
    return -(pmax - py) * std::log(clamped(py));
}

double complement_entropy(const ProbabilityVector& p, int y) {
    check_label(p.size(), y, "complement_entropy");
    const double py = p[static_cast<std::size_t>(y)];
    const double rest = 1.0 - py;
    if (rest <= 0.0) return 0.0;
    double h = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (static_cast<int>(j) == y) continue;
        const double r = p[j] / rest;
        if (r > 0.0) h -= r * std::log(r);
    }
    return h;
}

double taylor_remainder(double p_y) {
    if (!(p_y > 0.0) || !(p_y <= 1.0))
        throw std::invalid_argument("taylor_remainder: p_y must be in (0,1]");
    return -std::log(p_y) - (1.0 - p_y);
}

LossSpec LossSpec::parse(const std::string& name, const std::map<std::string, double>& params) {
    LossSpec s;
    auto get = [&](const char* key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (name == "ce") s.kind = Kind::ce;
    else if (name == "el") s.kind = Kind::el;
    else if (name == "mixed") s.kind = Kind::mixed;
    else if (name == "focal") s.kind = Kind::focal;
    else if (name == "mae") s.kind = Kind::mae;
    else if (name == "tce") s.kind = Kind::tce;
    else if (name == "gce") s.kind = Kind::gce;
    else if (name == "mpce") s.kind = Kind::mpce;
    else if (name == "cot") s.kind = Kind::cot;
    else throw std::invalid_argument("LossSpec: unknown loss name '" + name + "'");

    s.weights = MixWeights(get("alpha", 1.0), get("beta", 1.0));
    s.gamma = get("gamma", 2.0);
    s.weight = get("weight", 0.25);
    s.tce_alpha = get("tce_alpha", 0.5);
    s.q_exponent = get("q_exponent", 0.7);
    return s;
}

std::string LossSpec::name() const {
    switch (kind) {
        case Kind::ce: return "ce";
        case Kind::el: return "el";
        case Kind::mixed: return "mixed";
        case Kind::focal: return "focal";
        case Kind::mae: return "mae";
        case Kind::tce: return "tce";
        case Kind::gce: return "gce";
        case Kind::mpce: return "mpce";
        case Kind::cot: return "cot";
    }
    return "ce";
}

std::map<std::string, double> LossSpec::params() const {
    switch (kind) {
        case Kind::mixed: return {{"alpha", weights.alpha}, {"beta", weights.beta}};
        case Kind::focal: return {{"gamma", gamma}, {"weight", weight}};
        case Kind::tce: return {{"tce_alpha", tce_alpha}};
        case Kind::gce: return {{"q_exponent", q_exponent}};
        default: return {};
    }
}

double LossSpec::value(const ProbabilityVector& p, int y) const {
    switch (kind) {
        case Kind::ce: return ce_loss(p, y);
        case Kind::el: return el_loss(p, y);
        case Kind::mixed: return mixed_loss(p, y, weights);
        case Kind::focal: return focal_loss(p, y, gamma, weight);
        case Kind::mae: return mae_loss(p, y);
        case Kind::tce: return tce_loss(p, y, tce_alpha);
        case Kind::gce: return generalized_ce_loss(p, y, q_exponent);
        case Kind::mpce:
            if (!experimental_ok)
                throw std::invalid_argument(
                    "mpce is experimental (known not to converge); set experimental_ok to use it");
            return mpce_loss(p, y);
        case Kind::cot: return complement_entropy(p, y);
    }
    throw std::logic_error("LossSpec::value: unreachable");
}

LossEval LossSpec::eval(const LogitVector& q, int y) const {
    const ProbabilityVector p = softmax(q);
    const double py = p[static_cast<std::size_t>(y)];
    LossEval out;
    switch (kind) {
        case Kind::ce: return ce_grad(q, y);
        case Kind::el: return el_grad(q, y);
        case Kind::mixed: return mixed_grad(q, y, weights);
        case Kind::focal: {
            out.value = focal_loss(p, y, gamma, weight);
            const double one_m = 1.0 - py;
            const double neg_log = -std::log(clamped(py));
            const double power_term = gamma > 0.0 ? gamma * std::pow(one_m, gamma - 1.0) * neg_log : 0.0;
            const double dldp = weight * (-power_term - std::pow(one_m, gamma) / clamped(py));
            out.grad_logits = chain_scalar(p, y, dldp);
            return out;
        }
        case Kind::mae: {
            out.value = mae_loss(p, y);
            out.grad_logits = chain_scalar(p, y, -2.0);
            return out;
        }
        case Kind::tce: {
            out.value = tce_loss(p, y, tce_alpha);
            const double base = 1.0 - std::log(clamped(py));
            const double dldp = -std::pow(base, -tce_alpha) / clamped(py);
            out.grad_logits = chain_scalar(p, y, dldp);
            return out;
        }
        case Kind::gce: {
            out.value = generalized_ce_loss(p, y, q_exponent);
            const double dldp = -std::pow(clamped(py), q_exponent - 1.0);
            out.grad_logits = chain_scalar(p, y, dldp);
            return out;
        }
        case Kind::mpce: {
            out.value = value(p, y);
            std::size_t jmax = 0;
            for (std::size_t j = 1; j < p.size(); ++j)
                if (p[j] > p[jmax]) jmax = j;
            // L = -(p_max - p_y) log p_y; subgradient at argmax ties uses the
            // first maximizer.
            const double neg_log = -std::log(clamped(py));
            const double margin = p[jmax] - py;
            Vec dldprob(p.size(), 0.0);
            dldprob[jmax] += neg_log;
            dldprob[static_cast<std::size_t>(y)] += -neg_log - margin / clamped(py);
            out.grad_logits.assign(p.size(), 0.0);
            for (std::size_t j = 0; j < p.size(); ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    const double jac = p[k] * ((k == j ? 1.0 : 0.0) - p[j]);
                    g += dldprob[k] * jac;
                }
                out.grad_logits[j] = g;
            }
            return out;
        }
        case Kind::cot:
            throw std::logic_error("cot: training gradient not provided (value only)");
    }
    throw std::logic_error("LossSpec::eval: unreachable");
}

}  // namespace mixloss
