#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>

#include "mixloss/linalg.hpp"

namespace mixloss {

// A differentiable scalar field over parameter vectors; drift source for
// the SDE simulator and target of the Hessian estimators.
class Landscape {
public:
    virtual ~Landscape() = default;
    virtual std::size_t dim() const = 0;
    virtual double value(const Vec& w) const = 0;
    virtual Vec gradient(const Vec& w) const = 0;
};

// L(w) = 0.5 * w^T A w with symmetric A.
class QuadraticLandscape : public Landscape {
public:
    explicit QuadraticLandscape(Matrix a) : a_(std::move(a)) {
        if (!a_.square()) throw std::invalid_argument("QuadraticLandscape: matrix must be square");
    }

    std::size_t dim() const override { return a_.rows; }

    double value(const Vec& w) const override {
        return 0.5 * dot(w, matvec(a_, w));
    }

    Vec gradient(const Vec& w) const override { return matvec(a_, w); }

    const Matrix& hessian() const { return a_; }

private:
    Matrix a_;
};

// 1-D quartic with minima at -1 and +1 whose curvatures differ by a
// configurable ratio: f'(x) = 4a(x+1)(x-m)(x-1) with m = (r-1)/(r+1),
// so f''(-1) = 8a(1+m) = r * f''(+1). The sharp minimum sits at -1.
class DoubleWellLandscape : public Landscape {
public:
    DoubleWellLandscape(double sharpness_ratio, double scale = 1.0)
        : ratio_(sharpness_ratio), scale_(scale) {
        if (!(sharpness_ratio > 0.0))
            throw std::invalid_argument("DoubleWellLandscape: sharpness ratio must be positive");
        mid_ = (ratio_ - 1.0) / (ratio_ + 1.0);
    }

    std::size_t dim() const override { return 1; }

    double value(const Vec& w) const override {
        const double x = w.at(0);
        return scale_ * (x * x * x * x - (4.0 / 3.0) * mid_ * x * x * x - 2.0 * x * x + 4.0 * mid_ * x);
    }

    Vec gradient(const Vec& w) const override {
        const double x = w.at(0);
        return {4.0 * scale_ * (x + 1.0) * (x - mid_) * (x - 1.0)};
    }

    double sharp_minimum() const { return -1.0; }
    double wide_minimum() const { return 1.0; }
    double barrier_position() const { return mid_; }
    double curvature_at(double x) const {
        // f'' = 4a(3x^2 - 2mx - 1)
        return 4.0 * scale_ * (3.0 * x * x - 2.0 * mid_ * x - 1.0);
    }

private:
    double ratio_;
    double scale_;
    double mid_;
};

}  // namespace mixloss
