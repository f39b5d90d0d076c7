#pragma once
// The parametric family of difficult functions
//   f_k(x) = (1/(p+nu)) [ sum_{i<k} |x_i - x_{i+1}|^{p+nu} + sum_{i>=k} |x_i|^{p+nu} ] - x_1,
// its derivatives, closed-form optimum, Holder constant, and the lower-bound
// envelope for p-order methods.

#include <cmath>
#include <stdexcept>
#include <utility>

#include "tensoropt/detail/rng.hpp"
#include "tensoropt/oracle.hpp"
#include "tensoropt/space.hpp"

namespace tensoropt {

struct HardInstance {
  int n = 2;      // ambient dimension
  int k = 2;      // chain length, 2 <= k <= n
  int p = 2;      // derivative order of the methods run on it
  double nu = 1.0;

  void validate() const {
    if (n < 2 || k < 2 || k > n) throw std::invalid_argument("HardInstance: need 2 <= k <= n");
    if (p < 2) throw std::invalid_argument("HardInstance: need p >= 2");
    if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("HardInstance: nu must be in [0,1]");
  }
};

class SingularDerivative : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The banded operator A_k: (A_k x)_i = x_i - x_{i+1} for i < k, x_i otherwise.
struct BandedDifference {
  const HardInstance* inst;

  Vector apply(const Vector& x) const {
    require_dim(x, inst->n, "BandedDifference::apply");
    Vector u = x;
    for (int i = 0; i < inst->k - 1; ++i) u[i] = x[i] - x[i + 1];
    return u;
  }

  Vector apply_transpose(const Vector& v) const {
    require_dim(v, inst->n, "BandedDifference::apply_transpose");
    Vector w = v;
    for (int i = 1; i < inst->k; ++i) w[i] = v[i] - v[i - 1];
    return w;
  }

  // largest singular value by power iteration on A^T A
  double operator_norm(int iters = 200, std::uint64_t seed = 0) const {
    detail::Rng rng(seed);
    Vector h = rng.normal_vector(inst->n);
    h.normalize();
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
      Vector w = apply_transpose(apply(h));
      lambda = h.dot(w);
      const double wn = w.norm();
      if (wn <= 1e-300) return 0.0;
      h = w / wn;
    }
    return std::sqrt(std::max(0.0, lambda));
  }
};

namespace detail {

// eta_{p+nu}(u) = (1/(p+nu)) sum |u_i|^{p+nu}; per-coordinate derivatives of
// phi(u) = |u|^{p+nu}/(p+nu):
//   phi'(u)   = |u|^{p+nu-2} u
//   phi''(u)  = (p+nu-1)|u|^{p+nu-2}
//   phi'''(u) = (p+nu-1)(p+nu-2)|u|^{p+nu-3} sgn(u)
inline double eta_d1(double u, double q) { return u == 0.0 ? 0.0 : std::pow(std::abs(u), q - 1.0) * (u > 0 ? 1.0 : -1.0); }
inline double eta_d2(double u, double q) { return (q - 1.0) * (u == 0.0 && q == 2.0 ? 1.0 : std::pow(std::abs(u), q - 2.0)); }
inline double eta_d3(double u, double q) {
  if (u == 0.0) return 0.0;  // q >= 3 here; limit/sign convention at the kink
  return (q - 1.0) * (q - 2.0) * std::pow(std::abs(u), q - 3.0) * (u > 0 ? 1.0 : -1.0);
}

}  // namespace detail

inline double hard_value(const HardInstance& inst, const Vector& x) {
  inst.validate();
  require_dim(x, inst.n, "hard_value");
  const double q = inst.p + inst.nu;
  double s = 0.0;
  for (int i = 0; i < inst.k - 1; ++i) s += std::pow(std::abs(x[i] - x[i + 1]), q);
  for (int i = inst.k - 1; i < inst.n; ++i) s += std::pow(std::abs(x[i]), q);
  return s / q - x[0];
}

inline DualVector hard_gradient(const HardInstance& inst, const Vector& x) {
  inst.validate();
  require_dim(x, inst.n, "hard_gradient");
  const double q = inst.p + inst.nu;
  const BandedDifference a{&inst};
  Vector u = a.apply(x);
  for (int i = 0; i < inst.n; ++i) u[i] = detail::eta_d1(u[i], q);
  DualVector g = a.apply_transpose(u);
  g[0] -= 1.0;
  return g;
}

inline DualVector hard_hessian_apply(const HardInstance& inst, const Vector& x, const Vector& h) {
  inst.validate();
  require_dim(x, inst.n, "hard_hessian_apply");
  require_dim(h, inst.n, "hard_hessian_apply");
  const double q = inst.p + inst.nu;
  const BandedDifference a{&inst};
  const Vector u = a.apply(x);
  Vector v = a.apply(h);
  for (int i = 0; i < inst.n; ++i) v[i] *= detail::eta_d2(u[i], q);
  return a.apply_transpose(v);
}

// D^3 f_k(x)[h, h, .]; defined when p + nu >= 3. For p + nu < 3 the third
// derivative blows up at zeros of A_k x, reported as SingularDerivative.
inline DualVector hard_third_apply(const HardInstance& inst, const Vector& x, const Vector& h) {
  inst.validate();
  require_dim(x, inst.n, "hard_third_apply");
  require_dim(h, inst.n, "hard_third_apply");
  const double q = inst.p + inst.nu;
  const BandedDifference a{&inst};
  const Vector u = a.apply(x);
  if (q < 3.0 && u.cwiseAbs().minCoeff() == 0.0) {
    throw SingularDerivative("hard_third_apply: unbounded third derivative at a kink (p+nu < 3)");
  }
  Vector v = a.apply(h);
  for (int i = 0; i < inst.n; ++i) v[i] = detail::eta_d3(u[i], q) * v[i] * v[i];
  return a.apply_transpose(v);
}

// Unique global minimizer x* with coordinates (k - i + 1)_+ (1-based i) and
// optimal value f* = -(p+nu-1) k/(p+nu).
inline std::pair<Vector, double> hard_optimum(const HardInstance& inst) {
  inst.validate();
  Vector x = Vector::Zero(inst.n);
  for (int i = 0; i < inst.k; ++i) x[i] = inst.k - i;
  const double q = inst.p + inst.nu;
  return {std::move(x), -(q - 1.0) * inst.k / q};
}

// H_{f_k,p}(nu) = 2^{(2+nu)/2} prod_{i=1}^{p-1}(p+nu-i); independent of k.
inline double hard_holder_constant(int p, double nu) {
  if (p < 2) throw std::invalid_argument("hard_holder_constant: p >= 2");
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("hard_holder_constant: nu in [0,1]");
  double prod = 1.0;
  for (int i = 1; i <= p - 1; ++i) prod *= (p + nu - i);
  return std::pow(2.0, (2.0 + nu) / 2.0) * prod;
}

// Minimal residual any subspace-respecting p-order method can guarantee on
// the hard instance at iteration t:
//   H_f d^{p+nu} / (C_{p,nu} (t+1)^{(3(p+nu)-2)/2}),
//   C_{p,nu} = 2^{(3p+4nu+2)/2} prod_{i=0}^{p-1}(p+nu-i) / (3^{(p+nu)/2}(p+nu-1)).
inline double lower_bound_envelope(int p, double nu, int t, double x0_dist, double holder_const) {
  if (t < 1) throw std::invalid_argument("lower_bound_envelope: t >= 1");
  if (p < 2) throw std::invalid_argument("lower_bound_envelope: p >= 2");
  const double q = p + nu;
  double prod = 1.0;
  for (int i = 0; i <= p - 1; ++i) prod *= (q - i);
  const double c = std::pow(2.0, (3.0 * p + 4.0 * nu + 2.0) / 2.0) * prod /
                   (std::pow(3.0, q / 2.0) * (q - 1.0));
  return holder_const * std::pow(x0_dist, q) / (c * std::pow(t + 1.0, (3.0 * q - 2.0) / 2.0));
}

// DerivativeOracle adapter for a hard instance.
class HardOracle final : public DerivativeOracle {
 public:
  explicit HardOracle(HardInstance inst) : inst_(inst) { inst_.validate(); }

  int dim() const override { return inst_.n; }
  int order() const override { return inst_.p; }
  double value(const Vector& x) const override { return hard_value(inst_, x); }
  DualVector gradient(const Vector& x) const override { return hard_gradient(inst_, x); }
  DualVector hessian_apply(const Vector& x, const Vector& h) const override {
    return hard_hessian_apply(inst_, x, h);
  }
  DualVector third_apply(const Vector& x, const Vector& h) const override {
    return hard_third_apply(inst_, x, h);
  }
  std::optional<HolderHint> holder_hint() const override {
    return HolderHint{inst_.nu, hard_holder_constant(inst_.p, inst_.nu)};
  }
  const HardInstance& instance() const { return inst_; }

 private:
  HardInstance inst_;
};

}  // namespace tensoropt
