#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>

#include "mixloss/losses.hpp"
#include "mixloss/rng.hpp"

namespace mixloss {

struct Dataset;  // data.hpp

// Per-parameter gradients, congruent to a model's flat parameter layout.
struct GradientBundle {
    Vec flat;

    std::size_t size() const { return flat.size(); }
    void zero() { std::fill(flat.begin(), flat.end(), 0.0); }
    void add_scaled(const GradientBundle& g, double s);
};

// Linear or one-hidden-layer softmax classifier over I features and C
// classes. Parameters live in one flat array; layout (row-major):
//   linear: W (I x C), b (C)
//   mlp1:   W1 (I x I), b1 (I), W2 (I x C), b2 (C)  with ReLU between
// Logits are W^T x + b (per-column read of W).
class ClassifierModel {
public:
    enum class Arch { linear, mlp1 };

    // Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
    static ClassifierModel init(Arch arch, int input_dim, int classes, RandomSource& rng);

    Arch arch() const { return arch_; }
    int input_dim() const { return input_dim_; }
    int classes() const { return classes_; }
    std::size_t parameter_count() const { return params_.size(); }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    void set_parameters(const Vec& theta);

    LogitVector forward(const Vec& x) const;

    // Loss and the exact gradient of the mixed loss w.r.t. every
    // parameter. ReLU subgradient at 0 is 0.
    struct Backward {
        double loss;
        GradientBundle grad;
    };
    Backward backward(const Vec& x, int y, const MixWeights& w) const;
    Backward backward(const Vec& x, int y, const LossSpec& loss) const;

    // Backprop of an arbitrary logit-level gradient; `at_logits` receives
    // the logits and returns (scalar, d scalar / d logits).
    using LogitObjective = std::function<LossEval(const LogitVector&)>;
    Backward backward_with(const Vec& x, const LogitObjective& at_logits) const;

    // Argmax with lowest-index tie break.
    int predict(const Vec& x) const;
    double accuracy(const Dataset& data) const;

    // Versioned textual checkpoint: header lines ("mixloss-checkpoint v1",
    // "arch <linear|mlp1>", "input_dim <I>", "classes <C>", "params <P>")
    // followed by one %.17g parameter per line. Round-trips bitwise.
    void save_checkpoint(std::ostream& out) const;
    void save_checkpoint(const std::string& path) const;
    static ClassifierModel load_checkpoint(std::istream& in);
    static ClassifierModel load_checkpoint(const std::string& path);

    static std::string arch_name(Arch a);
    static Arch parse_arch(const std::string& name);

private:
    ClassifierModel(Arch arch, int input_dim, int classes);

    // Flat-layout offsets.
    std::size_t w1_at(int i, int j) const;   // first matrix
    std::size_t b1_at(int j) const;
    std::size_t w2_at(int i, int j) const;   // mlp1 second matrix
    std::size_t b2_at(int j) const;

    Arch arch_;
    int input_dim_;
    int classes_;
    Vec params_;
};

}  // namespace mixloss
