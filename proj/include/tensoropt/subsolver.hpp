#pragma once
// Inexact minimization of the regularized model. A returned trial point x+
// carries the certificate pair
//     Omega(x+) <= f(center)   and   ||grad Omega(x+)||_* <= theta ||x+ - center||^{p+alpha-1}
// (the gradient condition may instead be met at the absolute floor
// inner_gtol, which guards the theta = 0 and tiny-step regimes).

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tensoropt/oracle.hpp"
#include "tensoropt/space.hpp"

namespace tensoropt {

enum class SubsolverMode { Auto, Secular, FirstOrder };

struct SubsolverOptions {
  double theta = 0.1;          // certificate slack; any theta >= 0 is admissible
  int max_inner_iters = 10000;
  double inner_gtol = 1e-13;   // absolute gradient floor
  SubsolverMode mode = SubsolverMode::Auto;
  int dense_limit = 2000;      // max dimension for the dense secular path
  std::vector<double>* inner_value_log = nullptr;  // per-iteration Omega values (first-order mode)
};

struct TrialPoint {
  Vector point;
  double model_value = 0.0;          // Omega(x+)
  double model_gradient_norm = 0.0;  // ||grad Omega(x+)||_*
  double step_norm = 0.0;            // ||x+ - center||
  double f_value = 0.0;              // f(x+)
  DualVector f_gradient;
  int inner_iters = 0;
  bool secular_fallback = false;     // secular hit the hard case and fell back
};

class SubsolverStall : public std::runtime_error {
 public:
  SubsolverStall(std::string msg, TrialPoint best_so_far)
      : std::runtime_error(std::move(msg)), best(std::move(best_so_far)) {}
  TrialPoint best;
};

class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool certificate_pair_holds(const TrialPoint& trial, double f_center, double power,
                                   const SubsolverOptions& opts) {
  if (!(trial.model_value <= f_center)) return false;
  if (trial.model_gradient_norm <= opts.inner_gtol) return true;
  return trial.model_gradient_norm <= opts.theta * std::pow(trial.step_norm, power - 1.0);
}

inline TrialPoint make_trial(const RegularizedModel& model, const Vector& point, int inner_iters) {
  const DerivativeOracle& oracle = model.taylor().oracle();
  TrialPoint t;
  t.point = point;
  t.model_value = model.value(point);
  t.model_gradient_norm = model.space().dual_norm(model.gradient(point));
  t.step_norm = model.space().primal_norm(point - model.center());
  t.f_value = oracle.value(point);
  t.f_gradient = oracle.gradient(point);
  t.inner_iters = inner_iters;
  if (!std::isfinite(t.model_value) || !std::isfinite(t.f_value)) {
    throw NumericalError("subsolver: non-finite value at trial point");
  }
  return t;
}

inline TrialPoint center_trial(const RegularizedModel& model) {
  TrialPoint t;
  t.point = model.center();
  t.model_value = model.taylor().f_center();
  t.model_gradient_norm = model.space().dual_norm(model.taylor().grad_center());
  t.step_norm = 0.0;
  t.f_value = model.taylor().f_center();
  t.f_gradient = model.taylor().grad_center();
  t.inner_iters = 0;
  return t;
}

struct SecularHardCase : std::exception {};

}  // namespace detail

// Monotone first-order descent on Omega: one safeguarded gradient step off the
// center, then Barzilai-Borwein steps with Armijo backtracking, stopping at
// the certificate pair (or the inner_gtol floor). Works for any p and any B.
inline TrialPoint first_order_inner(const RegularizedModel& model, const SubsolverOptions& opts,
                                    const Vector* warm_start = nullptr) {
  const MetricSpace& space = model.space();
  const Vector& center = model.center();
  const double f_center = model.taylor().f_center();
  const double power = model.power();
  constexpr double kArmijo = 1e-4;
  constexpr double kBacktrack = 0.5;
  constexpr int kMaxBacktracks = 60;

  const DualVector& g0 = model.taylor().grad_center();
  const double g0n = space.dual_norm(g0);
  if (g0n <= opts.inner_gtol) return detail::center_trial(model);

  int iters = 0;
  Vector y;
  double val = 0.0;
  if (warm_start != nullptr && space.primal_norm(*warm_start - center) > 0.0) {
    y = *warm_start;
    val = model.value(y);
    if (!(val <= f_center)) {
      y = center;  // warm start unusable, restart from the gradient step below
    }
  }
  if (y.size() == 0 || (y - center).isZero(0.0)) {
    // first iterate: center - c B^{-1} grad f(center), c by backtracking
    const Vector d = -space.solve(g0);
    const double slope = pairing(g0, d);  // = -||g0||_*^2 < 0
    double step = 1.0 / std::max(1.0, g0n);
    int bt = 0;
    for (;; ++bt) {
      y = center + step * d;
      val = model.value(y);
      ++iters;
      if (std::isfinite(val) && val <= f_center + kArmijo * step * slope) break;
      if (bt >= kMaxBacktracks) throw NumericalError("first_order_inner: no descent along -grad");
      step *= kBacktrack;
    }
  }

  Vector prev_point = center;
  DualVector prev_grad = g0;
  double bb_step = 1.0;
  TrialPoint best;
  double best_gap = std::numeric_limits<double>::infinity();

  while (true) {
    if (opts.inner_value_log != nullptr) opts.inner_value_log->push_back(val);
    DualVector grad = model.gradient(y);
    const double gn = space.dual_norm(grad);
    const double step_norm = space.primal_norm(y - center);

    const bool cert_value = val <= f_center;
    const bool cert_grad = gn <= opts.inner_gtol || gn <= opts.theta * std::pow(step_norm, power - 1.0);
    if (cert_value && cert_grad) {
      TrialPoint t = detail::make_trial(model, y, iters);
      return t;
    }
    if (gn < best_gap) {
      best_gap = gn;
      best = detail::make_trial(model, y, iters);
    }
    if (iters >= opts.max_inner_iters) {
      throw SubsolverStall("first_order_inner: max_inner_iters exceeded", best);
    }

    // BB1 step length from the last displacement/gradient pair
    const Vector s = y - prev_point;
    const DualVector dg = grad - prev_grad;
    const double sy = s.dot(dg);
    if (sy > 0.0) bb_step = std::clamp(s.dot(s) / sy, 1e-12, 1e12);
    prev_point = y;
    prev_grad = grad;

    const Vector d = -space.solve(grad);
    const double slope = pairing(grad, d);
    // near the model minimum the Armijo decrease falls below representable
    // resolution; the floor keeps steps acceptable there (monotone up to
    // rounding)
    const double floor = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(val));
    double step = bb_step;
    int bt = 0;
    for (;; ++bt) {
      const Vector cand = y + step * d;
      const double cand_val = model.value(cand);
      ++iters;
      if (std::isfinite(cand_val) && cand_val <= val + kArmijo * step * slope + floor) {
        y = cand;
        val = cand_val;
        break;
      }
      if (bt >= kMaxBacktracks || iters >= opts.max_inner_iters) {
        throw SubsolverStall("first_order_inner: line search failed", best);
      }
      step *= kBacktrack;
    }
  }
}

// Near-exact solver for p = 2 with Identity/Diagonal B. The stationarity
// system (H_f(x) + sigma(r) B) h = -g with sigma(r) = H (2+alpha)/2 r^alpha is
// closed by the scalar secular equation ||h(r)|| = r, solved by safeguarded
// Newton/bisection on the radius. Returns the global minimizer whenever the
// shifted system stays positive definite along the path; otherwise falls back
// to the first-order inner solver.
inline TrialPoint secular_solve_p2(const RegularizedModel& model, const SubsolverOptions& opts = {}) {
  if (model.degree() != 2) throw std::invalid_argument("secular_solve_p2: requires p = 2");
  const MetricSpace& space = model.space();
  if (!space.is_diagonal_like()) {
    throw std::invalid_argument("secular_solve_p2: requires Identity or Diagonal metric");
  }
  const int n = space.dim();
  if (n > opts.dense_limit) throw std::invalid_argument("secular_solve_p2: dimension above dense_limit");

  const Vector& center = model.center();
  const DualVector& g = model.taylor().grad_center();
  if (space.dual_norm(g) <= opts.inner_gtol) return detail::center_trial(model);

  const double alpha = model.alpha();
  const double hcoef = model.regularization_coeff();
  const double sigma_coef = hcoef * (2.0 + alpha) / 2.0;  // H (p+alpha)/p! for p = 2
  const Eigen::MatrixXd hess = materialize_hessian(model.taylor().oracle(), center);
  const Vector bdiag = space.diagonal_entries();

  int factorizations = 0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  auto solve_for = [&](double sigma, Vector& h) -> bool {
    Eigen::MatrixXd shifted = hess;
    shifted.diagonal() += sigma * bdiag;
    llt.compute(shifted);
    ++factorizations;
    if (llt.info() != Eigen::Success) return false;
    h = llt.solve(-g);
    return true;
  };

  auto finish = [&](const Vector& h) {
    TrialPoint t = detail::make_trial(model, center + h, factorizations);
    if (detail::certificate_pair_holds(t, model.taylor().f_center(), model.power(), opts)) return t;
    // polish: a few monotone first-order steps from the secular point
    SubsolverOptions polish = opts;
    polish.inner_value_log = nullptr;
    TrialPoint refined = first_order_inner(model, polish, &t.point);
    refined.inner_iters += factorizations;
    return refined;
  };

  try {
    if (alpha == 0.0) {
      // constant shift, no radius equation
      Vector h;
      if (!solve_for(sigma_coef, h)) throw detail::SecularHardCase{};
      return finish(h);
    }

    auto rho = [&](double r, Vector& h) -> double {  // ||h(r)||_B, or NaN on factorization failure
      if (!solve_for(sigma_coef * std::pow(r, alpha), h)) return std::numeric_limits<double>::quiet_NaN();
      return space.primal_norm(h);
    };

    // bracket the root of phi(r) = rho(r) - r; rho is decreasing in r and the
    // shifted system becomes positive definite for r large enough (NaN from a
    // failed factorization keeps the doubling going)
    double r_hi = 1.0;
    Vector h;
    double rho_hi = rho(r_hi, h);
    int guard = 0;
    while (!(rho_hi < r_hi)) {
      r_hi *= 2.0;
      rho_hi = rho(r_hi, h);
      if (++guard > 400) throw detail::SecularHardCase{};
    }
    double r_lo = 0.5 * r_hi;
    double rho_lo = rho(r_lo, h);
    guard = 0;
    while (!(std::isnan(rho_lo) || rho_lo > r_lo)) {
      r_hi = r_lo;
      r_lo *= 0.5;
      rho_lo = rho(r_lo, h);
      if (++guard > 2000) throw NumericalError("secular_solve_p2: bracketing failed (lower)");
      if (r_lo < 1e-280) break;
    }

    // safeguarded Newton on phi(r) = rho(r) - r inside [r_lo, r_hi]; an
    // indefinite factorization inside the bracket raises r_lo (the positive
    // definite region is an upper interval of r)
    double r = 0.5 * (r_lo + r_hi);
    Vector h_r;
    bool have_point = false;
    for (int it = 0; it < 200; ++it) {
      const double rr = rho(r, h_r);
      if (std::isnan(rr)) {
        r_lo = r;
        r = 0.5 * (r_lo + r_hi);
        if (!(r > r_lo && r < r_hi)) throw detail::SecularHardCase{};
        continue;
      }
      have_point = true;
      const double phi = rr - r;
      if (std::abs(phi) <= 1e-12 * std::max(r, 1e-300)) return finish(h_r);
      if (phi > 0.0) r_lo = r; else r_hi = r;
      // rho'(r) = -sigma'(r) <B h, (H + sigma B)^{-1} B h> / rho(r), reusing the factorization
      const double sigma_prime = sigma_coef * alpha * std::pow(r, alpha - 1.0);
      const Vector bh = space.apply(h_r);
      const Vector w = llt.solve(bh);
      const double rho_prime = -sigma_prime * bh.dot(w) / rr;
      double next = r - phi / (rho_prime - 1.0);
      if (!(next > r_lo && next < r_hi)) next = 0.5 * (r_lo + r_hi);
      r = next;
    }
    if (!have_point) throw detail::SecularHardCase{};
    return finish(h_r);  // bracket collapsed to rounding; accept and verify
  } catch (const detail::SecularHardCase&) {
    TrialPoint t = first_order_inner(model, opts);
    t.secular_fallback = true;
    return t;
  }
}

// Compute a trial point for min_y Omega(y) satisfying the certificate pair.
// f_center must equal f(center); it anchors the first certificate.
inline TrialPoint solve_model(const RegularizedModel& model, double f_center, const SubsolverOptions& opts) {
  if (!std::isfinite(f_center)) throw std::invalid_argument("solve_model: f_center must be finite");
  const bool secular_ok = model.degree() == 2 && model.space().is_diagonal_like() &&
                          model.space().dim() <= opts.dense_limit;
  TrialPoint trial;
  if (opts.mode == SubsolverMode::Secular ||
      (opts.mode == SubsolverMode::Auto && secular_ok)) {
    trial = secular_solve_p2(model, opts);
  } else {
    trial = first_order_inner(model, opts);
  }
  if (trial.step_norm > 0.0 &&
      !detail::certificate_pair_holds(trial, f_center, model.power(), opts)) {
    throw SubsolverStall("solve_model: certificates not met at returned point", trial);
  }
  return trial;
}

}  // namespace tensoropt
