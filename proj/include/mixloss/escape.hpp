#pragma once

#include <functional>

#include "mixloss/data.hpp"
#include "mixloss/landscape.hpp"
#include "mixloss/model.hpp"

namespace mixloss {

// Dense P x P work is capped; beyond this the matrices do not fit the
// desk-scale contract.
constexpr std::size_t kEscapeParameterCap = 2000;

// Per-parameter SGD noise covariance of a loss over a dataset:
//   (1/m) [ (1/N) sum_i g_i g_i^T - g_bar g_bar^T ]
// with g_i the per-sample flattened gradient and m the batch size.
struct CovarianceMatrix {
    Matrix sigma;
    int batch_size;
    std::size_t sample_count;
};
CovarianceMatrix noise_covariance(const ClassifierModel& model, const Dataset& data,
                                  const LossSpec& loss, int batch_size);

// Central finite differences of an arbitrary gradient field, step
// h_k = base_step * (1 + |theta_k|), symmetrized as (H + H^T)/2.
using GradientField = std::function<Vec(const Vec&)>;
Matrix fd_hessian(const GradientField& grad, const Vec& theta, double base_step = 1e-4);

// Hessian of the mean loss over a dataset at the model's current
// parameters (finite differences of the analytic gradient).
Matrix hessian(const ClassifierModel& model, const Dataset& data, const LossSpec& loss,
               double base_step = 1e-4);

Vec mean_loss_gradient(const ClassifierModel& model, const Dataset& data, const LossSpec& loss);
double mean_loss_value(const ClassifierModel& model, const Dataset& data, const LossSpec& loss);

// (t * eta / 2) Tr(H Sigma); pass include_learning_rate = false for the
// plain (t/2) Tr(H Sigma) form.
double escaping_efficiency_estimate(const Matrix& hessian, const Matrix& sigma, double t,
                                    double eta, bool include_learning_rate = true);

// Ingredients of the escaping-efficiency comparison bound: expectation of
// true-class probability gradient outer products, negated mean Hessian of
// that probability, and the batch maximum of p(y|x).
struct EscapeQuantities {
    Matrix f_p;
    Matrix h_p;
    double m_cap;
};
EscapeQuantities escape_quantities(const ClassifierModel& model, const Dataset& batch);

// (beta^3 + 3 beta^2 / M + beta (2/M^2 + 1/M)) * Tr(F_p F_p^T + 2 H_p F_p).
double ee_rhs_bound(const EscapeQuantities& quants, double beta);

struct SdeConfig {
    double eta = 0.1;       // learning rate inside the diffusion sqrt(eta * Sigma)
    double dt = 1e-3;
    double t = 0.1;
    enum class Noise { full_covariance, isotropic, zero };
    Noise noise = Noise::full_covariance;
    double isotropic_sigma2 = 1.0;
    std::uint64_t seed = 0;
    int trajectories = 2000;

    void validate() const;
};

// Euler-Maruyama simulation of dW = -grad L dt + sqrt(eta Sigma) dB from
// w0. Reports E[L(W_t) - L(w_ref)] over independent trajectories with its
// standard error; trajectories draw from streams derived from (seed,
// index), so aggregation is order-independent.
struct SdeResult {
    double ee_mean;          // E[L(W_t)] - L(w_ref)
    double ee_stderr;
    double mean_final_loss;
    Vec example_trajectory;  // losses along trajectory 0, every step
};
SdeResult sde_simulate(const Landscape& landscape, const Vec& w0, const SdeConfig& cfg,
                       const Matrix* sigma = nullptr, const Vec* w_ref = nullptr);

// Adapter exposing (data loss + optional L2 term) over a model's
// parameters as a Landscape.
class ModelLossLandscape : public Landscape {
public:
    ModelLossLandscape(ClassifierModel model, const Dataset& data, LossSpec loss,
                       double l2_coefficient = 0.0);

    std::size_t dim() const override;
    double value(const Vec& w) const override;
    Vec gradient(const Vec& w) const override;

private:
    mutable ClassifierModel model_;
    const Dataset& data_;
    LossSpec loss_;
    double l2_;
};

}  // namespace mixloss
