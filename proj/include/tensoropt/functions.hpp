#pragma once
// Builtin smooth objectives used by the benchmark harness and the tests.

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>

#include "tensoropt/detail/rng.hpp"
#include "tensoropt/oracle.hpp"
#include "tensoropt/space.hpp"

namespace tensoropt {

// f(x) = 1/2 x^T Q x - b^T x with Q symmetric positive definite.
class QuadraticOracle final : public DerivativeOracle {
 public:
  QuadraticOracle(Eigen::MatrixXd q, Vector b, int order = 2)
      : q_(std::move(q)), b_(std::move(b)), order_(order) {
    if (q_.rows() != q_.cols() || q_.rows() != b_.size()) {
      throw std::invalid_argument("QuadraticOracle: shape mismatch");
    }
    if (order_ != 2 && order_ != 3) throw std::invalid_argument("QuadraticOracle: order in {2,3}");
  }

  int dim() const override { return static_cast<int>(b_.size()); }
  int order() const override { return order_; }
  double value(const Vector& x) const override { return 0.5 * x.dot(q_ * x) - b_.dot(x); }
  DualVector gradient(const Vector& x) const override { return q_ * x - b_; }
  DualVector hessian_apply(const Vector&, const Vector& h) const override { return q_ * h; }
  DualVector third_apply(const Vector&, const Vector&) const override {
    return DualVector::Zero(b_.size());
  }
  std::optional<HolderHint> holder_hint() const override { return HolderHint{1.0, 0.0}; }

  Vector minimizer() const { return q_.llt().solve(b_); }
  double min_value() const { return value(minimizer()); }
  const Eigen::MatrixXd& q() const { return q_; }

 private:
  Eigen::MatrixXd q_;
  Vector b_;
  int order_;
};

// Seeded random SPD quadratic with eigenvalues in [0.5, 5].
inline QuadraticOracle make_random_quadratic(int dim, std::uint64_t seed) {
  detail::Rng rng(seed);
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd orth = qr.householderQ();
  Vector eig(dim);
  for (int i = 0; i < dim; ++i) eig[i] = rng.uniform(0.5, 5.0);
  Eigen::MatrixXd q = orth * eig.asDiagonal() * orth.transpose();
  q = 0.5 * (q + q.transpose().eval());
  return QuadraticOracle(std::move(q), rng.normal_vector(dim));
}

// One-dimensional f(x) = |x|^{2+nu}/(2+nu); its Hessian (1+nu)|x|^nu is
// exactly nu-Holder with constant 1+nu.
class Power1DOracle final : public DerivativeOracle {
 public:
  explicit Power1DOracle(double nu) : nu_(nu) {
    if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("Power1DOracle: nu in [0,1]");
  }

  int dim() const override { return 1; }
  int order() const override { return 2; }
  double value(const Vector& x) const override {
    return std::pow(std::abs(x[0]), 2.0 + nu_) / (2.0 + nu_);
  }
  DualVector gradient(const Vector& x) const override {
    DualVector g(1);
    g[0] = x[0] == 0.0 ? 0.0 : std::pow(std::abs(x[0]), 1.0 + nu_) * (x[0] > 0 ? 1.0 : -1.0);
    return g;
  }
  DualVector hessian_apply(const Vector& x, const Vector& h) const override {
    DualVector v(1);
    v[0] = (1.0 + nu_) * std::pow(std::abs(x[0]), nu_) * h[0];
    return v;
  }
  std::optional<HolderHint> holder_hint() const override { return HolderHint{nu_, 1.0 + nu_}; }
  double nu() const { return nu_; }

 private:
  double nu_;
};

}  // namespace tensoropt
