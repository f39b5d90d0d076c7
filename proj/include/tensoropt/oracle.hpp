#pragma once
// Derivative oracles, the degree-p Taylor model Phi_{x,p}, and the regularized
// model Omega^{(alpha)}_{x,p,H}(y) = Phi_{x,p}(y) + (H/p!) ||y-x||^{p+alpha}.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>

#include "tensoropt/detail/rng.hpp"
#include "tensoropt/space.hpp"

namespace tensoropt {

// Known smoothness of an oracle: the p-th derivative is nu-Holder continuous
// with the given constant.
struct HolderHint {
  double nu = 1.0;
  double constant = 0.0;
};

// Pure, reentrant supplier of f and its directional derivatives up to order p.
// hessian_apply(x, h) is the linear form D^2 f(x)[h, .]; third_apply(x, h) is
// D^3 f(x)[h, h, .] and is required only for order-3 oracles.
class DerivativeOracle {
 public:
  virtual ~DerivativeOracle() = default;

  virtual int dim() const = 0;
  virtual int order() const = 0;  // p in {2, 3}
  virtual double value(const Vector& x) const = 0;
  virtual DualVector gradient(const Vector& x) const = 0;
  virtual DualVector hessian_apply(const Vector& x, const Vector& h) const = 0;

  virtual DualVector third_apply(const Vector& /*x*/, const Vector& /*h*/) const {
    throw std::logic_error("DerivativeOracle::third_apply: oracle has order < 3");
  }

  virtual std::optional<HolderHint> holder_hint() const { return std::nullopt; }
};

// alpha-selector: alpha = nu when nu is known, alpha = 1 otherwise.
struct SmoothnessParams {
  double nu = 1.0;
  double alpha = 1.0;
  bool nu_known = false;

  static SmoothnessParams known(double nu) {
    if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("SmoothnessParams: nu must be in [0,1]");
    return SmoothnessParams{nu, nu, true};
  }

  static SmoothnessParams universal() { return SmoothnessParams{1.0, 1.0, false}; }
};

// Degree-p Taylor polynomial of f around a fixed center. Value and gradient of
// the polynomial at arbitrary points are evaluated through the oracle's
// directional derivative contractions; nothing is materialized.
class TaylorModel {
 public:
  TaylorModel(const DerivativeOracle& oracle, Vector center)
      : oracle_(&oracle), center_(std::move(center)), degree_(oracle.order()) {
    require_dim(center_, oracle.dim(), "TaylorModel");
    require_finite(center_, "TaylorModel center");
    if (degree_ != 2 && degree_ != 3) throw std::invalid_argument("TaylorModel: order must be 2 or 3");
    f0_ = oracle.value(center_);
    g0_ = oracle.gradient(center_);
  }

  double value(const Vector& y) const {
    require_dim(y, center_.size(), "TaylorModel::value");
    const Vector h = y - center_;
    double v = f0_ + pairing(g0_, h);
    const DualVector h2 = oracle_->hessian_apply(center_, h);
    v += 0.5 * pairing(h2, h);
    if (degree_ == 3) v += pairing(oracle_->third_apply(center_, h), h) / 6.0;
    return v;
  }

  DualVector gradient(const Vector& y) const {
    require_dim(y, center_.size(), "TaylorModel::gradient");
    const Vector h = y - center_;
    DualVector g = g0_ + oracle_->hessian_apply(center_, h);
    if (degree_ == 3) g += 0.5 * oracle_->third_apply(center_, h);
    return g;
  }

  const Vector& center() const { return center_; }
  int degree() const { return degree_; }
  double f_center() const { return f0_; }
  const DualVector& grad_center() const { return g0_; }
  const DerivativeOracle& oracle() const { return *oracle_; }

 private:
  const DerivativeOracle* oracle_;
  Vector center_;
  int degree_;
  double f0_ = 0.0;
  DualVector g0_;
};

// Omega^{(alpha)}_{x,p,H}. The regularizer vanishes at the center, and its
// gradient there is taken as 0 (continuous extension; p + alpha > 1 always).
class RegularizedModel {
 public:
  RegularizedModel(TaylorModel taylor, double h_coeff, double alpha, const MetricSpace& space)
      : taylor_(std::move(taylor)), h_(h_coeff), alpha_(alpha), space_(&space) {
    if (!(h_ > 0.0)) throw std::invalid_argument("RegularizedModel: H must be positive");
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw std::invalid_argument("RegularizedModel: alpha must be in [0,1]");
    require_dim(taylor_.center(), space.dim(), "RegularizedModel");
    double fac = 1.0;
    for (int i = 2; i <= taylor_.degree(); ++i) fac *= i;
    reg_coeff_ = h_ / fac;  // H / p!
  }

  double value(const Vector& y) const {
    const double r = space_->primal_norm(y - taylor_.center());
    return taylor_.value(y) + reg_coeff_ * std::pow(r, power());
  }

  DualVector gradient(const Vector& y) const {
    const Vector h = y - taylor_.center();
    const double r = space_->primal_norm(h);
    if (r == 0.0) return taylor_.grad_center();
    return taylor_.gradient(y) + (reg_coeff_ * power() * std::pow(r, power() - 2.0)) * space_->apply(h);
  }

  const TaylorModel& taylor() const { return taylor_; }
  const Vector& center() const { return taylor_.center(); }
  double regularization_coeff() const { return h_; }      // H
  double alpha() const { return alpha_; }
  double power() const { return taylor_.degree() + alpha_; }  // p + alpha
  int degree() const { return taylor_.degree(); }
  const MetricSpace& space() const { return *space_; }

 private:
  TaylorModel taylor_;
  double h_;
  double alpha_;
  const MetricSpace* space_;
  double reg_coeff_ = 0.0;
};

// Dense Hessian of the oracle at x, built column by column from
// hessian_apply. Intended for small problems (the secular subsolver).
inline Eigen::MatrixXd materialize_hessian(const DerivativeOracle& oracle, const Vector& x) {
  const int n = oracle.dim();
  Eigen::MatrixXd hess(n, n);
  Vector e = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    hess.col(j) = oracle.hessian_apply(x, e);
    e[j] = 0.0;
  }
  return hess;
}

namespace detail {

// Largest |eigenvalue| of the pencil (Delta, B) where Delta h =
// hessian_apply(x, h) - hessian_apply(y, h): power iteration on B^{-1} Delta,
// which is self-adjoint in the B-inner product.
inline double hessian_difference_norm(const DerivativeOracle& oracle, const MetricSpace& space,
                                      const Vector& x, const Vector& y, Rng& rng,
                                      int max_iters = 50, double tol = 1e-8) {
  Vector h = rng.normal_vector(oracle.dim());
  const double hn = space.primal_norm(h);
  if (hn == 0.0) return 0.0;
  h /= hn;
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const DualVector dh = oracle.hessian_apply(x, h) - oracle.hessian_apply(y, h);
    const double rayleigh = pairing(dh, h);
    Vector next = space.solve(dh);
    const double nn = space.primal_norm(next);
    if (nn <= 1e-300) return std::abs(rayleigh);
    next /= nn;
    if (it > 0 && std::abs(std::abs(rayleigh) - std::abs(lambda)) <= tol * std::max(1.0, std::abs(rayleigh))) {
      return std::abs(rayleigh);
    }
    lambda = rayleigh;
    h = next;
  }
  return std::abs(lambda);
}

}  // namespace detail

// Empirical lower estimate of the Holder constant H_{f,2}(nu): the maximum of
// ||D^2 f(x) - D^2 f(y)|| / ||x - y||^nu over seeded standard-normal pairs,
// with the operator norm obtained by symmetric power iteration. Supported for
// order-2 oracles only.
inline double estimate_holder_constant(const DerivativeOracle& oracle, const MetricSpace& space,
                                       double nu, int sample_pairs, std::uint64_t seed) {
  if (oracle.order() != 2) {
    throw std::invalid_argument("estimate_holder_constant: only p = 2 is supported");
  }
  if (sample_pairs < 1) throw std::invalid_argument("estimate_holder_constant: sample_pairs must be >= 1");
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("estimate_holder_constant: nu must be in [0,1]");
  detail::Rng rng(seed);
  const int n = oracle.dim();
  double best = 0.0;
  for (int s = 0; s < sample_pairs; ++s) {
    const Vector x = rng.normal_vector(n);
    const Vector y = rng.normal_vector(n);
    const double dist = space.primal_norm(x - y);
    if (dist <= 1e-300) continue;
    const double opnorm = detail::hessian_difference_norm(oracle, space, x, y, rng);
    best = std::max(best, opnorm / std::pow(dist, nu));
  }
  return best;
}

inline double estimate_holder_constant(const DerivativeOracle& oracle, double nu, int sample_pairs,
                                       std::uint64_t seed) {
  return estimate_holder_constant(oracle, MetricSpace::identity(oracle.dim()), nu, sample_pairs, seed);
}

}  // namespace tensoropt
