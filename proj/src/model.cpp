#include "mixloss/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mixloss/data.hpp"

namespace mixloss {

void GradientBundle::add_scaled(const GradientBundle& g, double s) {
    if (flat.size() != g.flat.size())
        throw std::invalid_argument("GradientBundle::add_scaled: shape mismatch");
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += s * g.flat[i];
}

ClassifierModel::ClassifierModel(Arch arch, int input_dim, int classes)
    : arch_(arch), input_dim_(input_dim), classes_(classes) {
    if (input_dim < 1) throw std::invalid_argument("ClassifierModel: input_dim must be >= 1");
    if (classes < 2) throw std::invalid_argument("ClassifierModel: classes must be >= 2");
    const std::size_t i = static_cast<std::size_t>(input_dim);
    const std::size_t c = static_cast<std::size_t>(classes);
    const std::size_t count = (arch == Arch::linear) ? i * c + c : i * i + i + i * c + c;
    params_.assign(count, 0.0);
}

std::size_t ClassifierModel::w1_at(int i, int j) const {
    const std::size_t cols =
        (arch_ == Arch::linear) ? static_cast<std::size_t>(classes_) : static_cast<std::size_t>(input_dim_);
    return static_cast<std::size_t>(i) * cols + static_cast<std::size_t>(j);
}

std::size_t ClassifierModel::b1_at(int j) const {
    const std::size_t i = static_cast<std::size_t>(input_dim_);
    const std::size_t cols =
        (arch_ == Arch::linear) ? static_cast<std::size_t>(classes_) : i;
    return i * cols + static_cast<std::size_t>(j);
}

std::size_t ClassifierModel::w2_at(int i, int j) const {
    const std::size_t d = static_cast<std::size_t>(input_dim_);
    return d * d + d + static_cast<std::size_t>(i) * static_cast<std::size_t>(classes_) +
           static_cast<std::size_t>(j);
}

std::size_t ClassifierModel::b2_at(int j) const {
    const std::size_t d = static_cast<std::size_t>(input_dim_);
    return d * d + d + d * static_cast<std::size_t>(classes_) + static_cast<std::size_t>(j);
}

ClassifierModel ClassifierModel::init(Arch arch, int input_dim, int classes, RandomSource& rng) {
    ClassifierModel m(arch, input_dim, classes);
    auto fill_glorot = [&](std::size_t offset, int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        const std::size_t n = static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out);
        for (std::size_t k = 0; k < n; ++k) m.params_[offset + k] = rng.uniform(-bound, bound);
    };
    if (arch == Arch::linear) {
        fill_glorot(0, input_dim, classes);
    } else {
        fill_glorot(0, input_dim, input_dim);
        fill_glorot(m.w2_at(0, 0), input_dim, classes);
    }
    return m;
}

void ClassifierModel::set_parameters(const Vec& theta) {
    if (theta.size() != params_.size())
        throw std::invalid_argument("set_parameters: expected " + std::to_string(params_.size()) +
                                    " values, got " + std::to_string(theta.size()));
    params_ = theta;
}

LogitVector ClassifierModel::forward(const Vec& x) const {
    if (static_cast<int>(x.size()) != input_dim_)
        throw std::invalid_argument("forward: feature length " + std::to_string(x.size()) +
                                    " != input_dim " + std::to_string(input_dim_));
    if (!all_finite(x)) throw std::invalid_argument("forward: non-finite feature");

    const int I = input_dim_, C = classes_;
    Vec logits(static_cast<std::size_t>(C), 0.0);
    if (arch_ == Arch::linear) {
        for (int c = 0; c < C; ++c) {
            double s = params_[b1_at(c)];
            for (int i = 0; i < I; ++i) s += params_[w1_at(i, c)] * x[static_cast<std::size_t>(i)];
            logits[static_cast<std::size_t>(c)] = s;
        }
    } else {
        Vec hidden(static_cast<std::size_t>(I), 0.0);
        for (int j = 0; j < I; ++j) {
            double s = params_[b1_at(j)];
            for (int i = 0; i < I; ++i) s += params_[w1_at(i, j)] * x[static_cast<std::size_t>(i)];
            hidden[static_cast<std::size_t>(j)] = s > 0.0 ? s : 0.0;
        }
        for (int c = 0; c < C; ++c) {
            double s = params_[b2_at(c)];
            for (int j = 0; j < I; ++j) s += params_[w2_at(j, c)] * hidden[static_cast<std::size_t>(j)];
            logits[static_cast<std::size_t>(c)] = s;
        }
    }
    return LogitVector(std::move(logits));
}

ClassifierModel::Backward ClassifierModel::backward(const Vec& x, int y, const MixWeights& w) const {
    return backward_with(x, [&](const LogitVector& q) { return mixed_grad(q, y, w); });
}

ClassifierModel::Backward ClassifierModel::backward(const Vec& x, int y, const LossSpec& loss) const {
    return backward_with(x, [&](const LogitVector& q) { return loss.eval(q, y); });
}

ClassifierModel::Backward ClassifierModel::backward_with(const Vec& x,
                                                         const LogitObjective& at_logits) const {
    if (static_cast<int>(x.size()) != input_dim_)
        throw std::invalid_argument("backward: feature length mismatch");

    const int I = input_dim_, C = classes_;
    Backward out;
    out.grad.flat.assign(params_.size(), 0.0);

    if (arch_ == Arch::linear) {
        const LogitVector q = forward(x);
        const LossEval le = at_logits(q);
        out.loss = le.value;
        for (int c = 0; c < C; ++c) {
            const double gl = le.grad_logits[static_cast<std::size_t>(c)];
            out.grad.flat[b1_at(c)] = gl;
            for (int i = 0; i < I; ++i)
                out.grad.flat[w1_at(i, c)] = gl * x[static_cast<std::size_t>(i)];
        }
        return out;
    }

    // mlp1: recompute pre-activations so the ReLU mask is exact.
    Vec pre(static_cast<std::size_t>(I), 0.0);
    Vec hidden(static_cast<std::size_t>(I), 0.0);
    for (int j = 0; j < I; ++j) {
        double s = params_[b1_at(j)];
        for (int i = 0; i < I; ++i) s += params_[w1_at(i, j)] * x[static_cast<std::size_t>(i)];
        pre[static_cast<std::size_t>(j)] = s;
        hidden[static_cast<std::size_t>(j)] = s > 0.0 ? s : 0.0;
    }
    Vec logits(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
        double s = params_[b2_at(c)];
        for (int j = 0; j < I; ++j) s += params_[w2_at(j, c)] * hidden[static_cast<std::size_t>(j)];
        logits[static_cast<std::size_t>(c)] = s;
    }
    const LossEval le = at_logits(LogitVector(std::move(logits)));
    out.loss = le.value;

    for (int c = 0; c < C; ++c) {
        const double gl = le.grad_logits[static_cast<std::size_t>(c)];
        out.grad.flat[b2_at(c)] = gl;
        for (int j = 0; j < I; ++j)
            out.grad.flat[w2_at(j, c)] = gl * hidden[static_cast<std::size_t>(j)];
    }
    for (int j = 0; j < I; ++j) {
        if (!(pre[static_cast<std::size_t>(j)] > 0.0)) continue;  // ReLU' at 0 is 0
        double dh = 0.0;
        for (int c = 0; c < C; ++c)
            dh += params_[w2_at(j, c)] * le.grad_logits[static_cast<std::size_t>(c)];
        out.grad.flat[b1_at(j)] = dh;
        for (int i = 0; i < I; ++i)
            out.grad.flat[w1_at(i, j)] = dh * x[static_cast<std::size_t>(i)];
    }
    return out;
}

int ClassifierModel::predict(const Vec& x) const {
    const LogitVector q = forward(x);
    int best = 0;
    for (std::size_t j = 1; j < q.values.size(); ++j)
        if (q.values[j] > q.values[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
    return best;
}

double ClassifierModel::accuracy(const Dataset& data) const {
    if (data.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t n = 0; n < data.size(); ++n)
        if (predict(data.row(n)) == data.labels[n]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

void ClassifierModel::save_checkpoint(std::ostream& out) const {
    out << "mixloss-checkpoint v1\n";
    out << "arch " << arch_name(arch_) << "\n";
    out << "input_dim " << input_dim_ << "\n";
    out << "classes " << classes_ << "\n";
    out << "params " << params_.size() << "\n";
    char buf[64];
    for (double v : params_) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << "\n";
    }
}

void ClassifierModel::save_checkpoint(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    save_checkpoint(f);
}

ClassifierModel ClassifierModel::load_checkpoint(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "mixloss-checkpoint v1")
        throw std::runtime_error("load_checkpoint: bad or missing header");
    std::string key, arch_str;
    int input_dim = 0, classes = 0;
    std::size_t count = 0;
    in >> key >> arch_str;
    if (key != "arch") throw std::runtime_error("load_checkpoint: expected arch line");
    in >> key >> input_dim;
    if (key != "input_dim") throw std::runtime_error("load_checkpoint: expected input_dim line");
    in >> key >> classes;
    if (key != "classes") throw std::runtime_error("load_checkpoint: expected classes line");
    in >> key >> count;
    if (key != "params") throw std::runtime_error("load_checkpoint: expected params line");

    ClassifierModel m(parse_arch(arch_str), input_dim, classes);
    if (m.params_.size() != count)
        throw std::runtime_error("load_checkpoint: parameter count " + std::to_string(count) +
                                 " inconsistent with architecture");
    for (std::size_t i = 0; i < count; ++i)
        if (!(in >> m.params_[i]))
            throw std::runtime_error("load_checkpoint: truncated at parameter " + std::to_string(i));
    return m;
}

ClassifierModel ClassifierModel::load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    return load_checkpoint(f);
}

std::string ClassifierModel::arch_name(Arch a) {
    return a == Arch::linear ? "linear" : "mlp1";
}

ClassifierModel::Arch ClassifierModel::parse_arch(const std::string& name) {
    if (name == "linear") return Arch::linear;
    if (name == "mlp1") return Arch::mlp1;
    throw std::invalid_argument("parse_arch: unknown architecture '" + name + "'");
}

}  // namespace mixloss
