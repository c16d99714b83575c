#include "mixloss/escape.hpp"

#include <cmath>
#include <stdexcept>

namespace mixloss {

namespace {

void check_cap(std::size_t p) {
    if (p > kEscapeParameterCap)
        throw std::invalid_argument("escape: " + std::to_string(p) + " parameters exceed the dense cap of " +
                                    std::to_string(kEscapeParameterCap));
}

Vec sample_gradient(const ClassifierModel& model, const Dataset& data, std::size_t n,
                    const LossSpec& loss) {
    return model.backward(data.row(n), data.labels[n], loss).grad.flat;
}

}  // namespace

CovarianceMatrix noise_covariance(const ClassifierModel& model, const Dataset& data,
                                  const LossSpec& loss, int batch_size) {
    data.validate();
    if (batch_size < 1) throw std::invalid_argument("noise_covariance: batch size must be >= 1");
    const std::size_t p = model.parameter_count();
    check_cap(p);

    const std::size_t n = data.size();
    Matrix second_moment(p, p);
    Vec mean(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec g = sample_gradient(model, data, i, loss);
        add_outer_product(second_moment, g, 1.0 / static_cast<double>(n));
        for (std::size_t k = 0; k < p; ++k) mean[k] += g[k] / static_cast<double>(n);
    }
    add_outer_product(second_moment, mean, -1.0);

    CovarianceMatrix out;
    out.sigma = scale(second_moment, 1.0 / static_cast<double>(batch_size));
    out.sigma = symmetrize(out.sigma);  // removes rounding asymmetry
    out.batch_size = batch_size;
    out.sample_count = n;
    return out;
}

Matrix fd_hessian(const GradientField& grad, const Vec& theta, double base_step) {
    const std::size_t p = theta.size();
    check_cap(p);
    Matrix h(p, p);
    Vec probe = theta;
    for (std::size_t k = 0; k < p; ++k) {
        const double step = base_step * (1.0 + std::abs(theta[k]));
        probe[k] = theta[k] + step;
        const Vec g_plus = grad(probe);
        probe[k] = theta[k] - step;
        const Vec g_minus = grad(probe);
        probe[k] = theta[k];
        if (g_plus.size() != p || g_minus.size() != p)
            throw std::invalid_argument("fd_hessian: gradient field dimension mismatch");
        for (std::size_t j = 0; j < p; ++j) h(j, k) = (g_plus[j] - g_minus[j]) / (2.0 * step);
    }
    if (!all_finite(h.a)) throw std::runtime_error("fd_hessian: non-finite entries");
    return symmetrize(h);
}

Vec mean_loss_gradient(const ClassifierModel& model, const Dataset& data, const LossSpec& loss) {
    const std::size_t p = model.parameter_count();
    Vec g(p, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Vec gi = sample_gradient(model, data, i, loss);
        for (std::size_t k = 0; k < p; ++k) g[k] += gi[k];
    }
    for (double& v : g) v /= static_cast<double>(data.size());
    return g;
}

double mean_loss_value(const ClassifierModel& model, const Dataset& data, const LossSpec& loss) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ProbabilityVector pv = softmax(model.forward(data.row(i)));
        s += loss.value(pv, data.labels[i]);
    }
    return s / static_cast<double>(data.size());
}

Matrix hessian(const ClassifierModel& model, const Dataset& data, const LossSpec& loss,
               double base_step) {
    data.validate();
    check_cap(model.parameter_count());
    ClassifierModel probe = model;
    const Vec theta(model.parameters().begin(), model.parameters().end());
    auto grad_field = [&](const Vec& w) {
        probe.set_parameters(w);
        return mean_loss_gradient(probe, data, loss);
    };
    return fd_hessian(grad_field, theta, base_step);
}

double escaping_efficiency_estimate(const Matrix& hessian, const Matrix& sigma, double t,
                                    double eta, bool include_learning_rate) {
    if (hessian.rows != sigma.rows || hessian.cols != sigma.cols || !hessian.square())
        throw std::invalid_argument("escaping_efficiency_estimate: dimension mismatch");
    const double tr = trace_of_product(hessian, sigma);
    return 0.5 * t * (include_learning_rate ? eta : 1.0) * tr;
}

EscapeQuantities escape_quantities(const ClassifierModel& model, const Dataset& batch) {
    batch.validate();
    const std::size_t p = model.parameter_count();
    check_cap(p);

    EscapeQuantities out;
    out.f_p = Matrix(p, p);
    out.h_p = Matrix(p, p);
    out.m_cap = 0.0;

    ClassifierModel probe = model;
    const Vec theta(model.parameters().begin(), model.parameters().end());
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vec x = batch.row(i);
        const int y = batch.labels[i];

        // d p(y|x) / d logits chained through the model.
        auto prob_objective = [&](const LogitVector& q) {
            const ProbabilityVector pv = softmax(q);
            const double py = pv[static_cast<std::size_t>(y)];
            LossEval le;
            le.value = py;
            le.grad_logits.resize(pv.size());
            for (std::size_t j = 0; j < pv.size(); ++j) {
                const double d = (static_cast<int>(j) == y ? 1.0 : 0.0) - pv[j];
                le.grad_logits[j] = py * d;
            }
            return le;
        };

        const auto bw = model.backward_with(x, prob_objective);
        out.m_cap = std::max(out.m_cap, bw.loss);
        add_outer_product(out.f_p, bw.grad.flat, inv_n);

        auto prob_grad_field = [&](const Vec& w) {
            probe.set_parameters(w);
            return probe.backward_with(x, prob_objective).grad.flat;
        };
        const Matrix h_i = fd_hessian(prob_grad_field, theta);
        for (std::size_t k = 0; k < out.h_p.a.size(); ++k) out.h_p.a[k] -= inv_n * h_i.a[k];
    }
    return out;
}

double ee_rhs_bound(const EscapeQuantities& quants, double beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("ee_rhs_bound: beta must be >= 0");
    if (!(quants.m_cap > 0.0)) throw std::invalid_argument("ee_rhs_bound: M must be positive");
    const double m = quants.m_cap;
    const double coeff = beta * beta * beta + 3.0 * beta * beta / m +
                         beta * (2.0 / (m * m) + 1.0 / m);
    // Tr(F F^T + 2 H F)
    const Matrix ft = transpose(quants.f_p);
    const double tr = trace_of_product(quants.f_p, ft) + 2.0 * trace_of_product(quants.h_p, quants.f_p);
    return coeff * tr;
}

void SdeConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SdeConfig: dt must be > 0");
    if (!(t >= dt)) throw std::invalid_argument("SdeConfig: total time must be >= dt");
    if (!(eta >= 0.0)) throw std::invalid_argument("SdeConfig: eta must be >= 0");
    if (trajectories < 1) throw std::invalid_argument("SdeConfig: need at least 1 trajectory");
}

SdeResult sde_simulate(const Landscape& landscape, const Vec& w0, const SdeConfig& cfg,
                       const Matrix* sigma, const Vec* w_ref) {
    cfg.validate();
    const std::size_t p = landscape.dim();
    if (w0.size() != p) throw std::invalid_argument("sde_simulate: start point dimension mismatch");

    Matrix diffusion;  // sqrt(eta * Sigma)
    bool has_diffusion = false;
    switch (cfg.noise) {
        case SdeConfig::Noise::full_covariance: {
            if (!sigma) throw std::invalid_argument("sde_simulate: full covariance mode needs Sigma");
            if (sigma->rows != p || sigma->cols != p)
                throw std::invalid_argument("sde_simulate: Sigma dimension mismatch");
            diffusion = psd_sqrt(scale(*sigma, cfg.eta));
            has_diffusion = true;
            break;
        }
        case SdeConfig::Noise::isotropic: {
            Matrix iso = Matrix::identity(p);
            diffusion = scale(iso, std::sqrt(cfg.eta * cfg.isotropic_sigma2));
            has_diffusion = true;
            break;
        }
        case SdeConfig::Noise::zero:
            break;
    }

    const int steps = static_cast<int>(std::llround(cfg.t / cfg.dt));
    const double sqrt_dt = std::sqrt(cfg.dt);
    const double ref_loss = landscape.value(w_ref ? *w_ref : w0);
    const RandomSource root(cfg.seed);

    double sum = 0.0, sum_sq = 0.0;
    SdeResult out;
    for (int traj = 0; traj < cfg.trajectories; ++traj) {
        RandomSource rng = root.split(static_cast<std::uint64_t>(traj));
        Vec w = w0;
        Vec noise(p, 0.0);
        for (int s = 0; s < steps; ++s) {
            const Vec g = landscape.gradient(w);
            if (has_diffusion)
                for (std::size_t k = 0; k < p; ++k) noise[k] = rng.normal();
            for (std::size_t k = 0; k < p; ++k) {
                double dw = -g[k] * cfg.dt;
                if (has_diffusion) {
                    double nk = 0.0;
                    for (std::size_t j = 0; j < p; ++j) nk += diffusion(k, j) * noise[j];
                    dw += sqrt_dt * nk;
                }
                w[k] += dw;
            }
            if (traj == 0) out.example_trajectory.push_back(landscape.value(w));
        }
        const double excess = landscape.value(w) - ref_loss;
        sum += excess;
        sum_sq += excess * excess;
    }

    const double r = static_cast<double>(cfg.trajectories);
    out.ee_mean = sum / r;
    out.mean_final_loss = out.ee_mean + ref_loss;
    const double var = std::max(0.0, sum_sq / r - out.ee_mean * out.ee_mean);
    out.ee_stderr = cfg.trajectories > 1 ? std::sqrt(var / (r - 1.0)) : 0.0;
    return out;
}

ModelLossLandscape::ModelLossLandscape(ClassifierModel model, const Dataset& data, LossSpec loss,
                                       double l2_coefficient)
    : model_(std::move(model)), data_(data), loss_(std::move(loss)), l2_(l2_coefficient) {
    data_.validate();
}

std::size_t ModelLossLandscape::dim() const { return model_.parameter_count(); }

double ModelLossLandscape::value(const Vec& w) const {
    model_.set_parameters(w);
    double v = mean_loss_value(model_, data_, loss_);
    if (l2_ > 0.0) v += 0.5 * l2_ * dot(w, w);
    return v;
}

Vec ModelLossLandscape::gradient(const Vec& w) const {
    model_.set_parameters(w);
    Vec g = mean_loss_gradient(model_, data_, loss_);
    if (l2_ > 0.0)
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += l2_ * w[k];
    return g;
}

}  // namespace mixloss
