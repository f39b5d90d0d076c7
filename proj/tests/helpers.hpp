#pragma once
// Shared test fixtures: finite-difference oracles, toy objectives, sampling.

#include <cmath>
#include <functional>
#include <optional>

#include "tensoropt/detail/rng.hpp"
#include "tensoropt/oracle.hpp"
#include "tensoropt/space.hpp"

namespace testutil {

using tensoropt::DerivativeOracle;
using tensoropt::DualVector;
using tensoropt::Vector;

// Central finite-difference gradient of a scalar function.
inline DualVector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                              double step = 1e-6) {
  DualVector g(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double rel_vec_err(const Vector& got, const Vector& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

// f == 0 everywhere; isolates the regularizer in model tests.
class ZeroOracle final : public DerivativeOracle {
 public:
  explicit ZeroOracle(int dim, int order = 2) : dim_(dim), order_(order) {}
  int dim() const override { return dim_; }
  int order() const override { return order_; }
  double value(const Vector&) const override { return 0.0; }
  DualVector gradient(const Vector&) const override { return DualVector::Zero(dim_); }
  DualVector hessian_apply(const Vector&, const Vector&) const override {
    return DualVector::Zero(dim_);
  }
  DualVector third_apply(const Vector&, const Vector&) const override {
    return DualVector::Zero(dim_);
  }

 private:
  int dim_;
  int order_;
};

// f(x) = <g, x>; zero curvature.
class LinearOracle final : public DerivativeOracle {
 public:
  explicit LinearOracle(DualVector g) : g_(std::move(g)) {}
  int dim() const override { return static_cast<int>(g_.size()); }
  int order() const override { return 2; }
  double value(const Vector& x) const override { return g_.dot(x); }
  DualVector gradient(const Vector&) const override { return g_; }
  DualVector hessian_apply(const Vector&, const Vector&) const override {
    return DualVector::Zero(g_.size());
  }

 private:
  DualVector g_;
};

}  // namespace testutil
