#pragma once
// The four outer schemes: tensor method, adaptive tensor method, accelerated
// tensor method, adaptive accelerated tensor method. Adaptive variants run a
// doubling line search on the scaling coefficient H_t and set
// H_{t+1} = 2^{i_t - 1} H_t; accepted steps satisfy the descent tests
//   basic:       f(x_t) - f(x+) >= [1/(8 (p+1)! M^{1/(p+a-1)})] ||grad f(x+)||_*^{(p+a)/(p+a-1)}
//   accelerated: <grad f(x+), y_t - x+> >= (1/4) [(p-1)!/M]^{1/(p+a-1)} ||grad f(x+)||_*^{(p+a)/(p+a-1)}

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tensoropt/oracle.hpp"
#include "tensoropt/space.hpp"
#include "tensoropt/subsolver.hpp"

namespace tensoropt {

struct StoppingRule {
  std::optional<double> f_star;  // enables the residual criterion
  double eps = 0.0;              // target residual, used when f_star is known
  double gtol = 0.0;             // dual gradient-norm threshold (0 disables)
  int max_outer_iters = 1000;

  void validate() const {
    if (max_outer_iters < 1) throw std::invalid_argument("StoppingRule: max_outer_iters >= 1");
    if (eps < 0.0 || gtol < 0.0) throw std::invalid_argument("StoppingRule: eps, gtol >= 0");
    if (eps > 0.0 && !f_star) throw std::invalid_argument("StoppingRule: eps requires f_star");
  }
};

enum class RunStatus {
  Converged,          // residual criterion met
  GradientConverged,  // gradient criterion met
  IterationLimit,
  DescentFailure,     // fixed-M descent test failed; adaptive variant advised
  SubsolverStall,
  LineSearchBlowup,   // doubling cap exceeded; oracle likely inconsistent
};

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::GradientConverged: return "gradient_converged";
    case RunStatus::IterationLimit: return "iteration_limit";
    case RunStatus::DescentFailure: return "descent_failure";
    case RunStatus::SubsolverStall: return "subsolver_stall";
    default: return "line_search_blowup";
  }
}

struct IterationRow {
  int t = 0;
  double f = 0.0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;
  double h_coeff = 0.0;  // accepted 2^{i_t} H_t (adaptive) or the fixed M
  int inner_iters = 0;
  int ls_trials = 0;     // i_t
  long long oracle_calls = 0;
  long long wall_ns = 0;
};

struct RunRecord {
  std::vector<IterationRow> rows;
  RunStatus status = RunStatus::IterationLimit;
  std::string message;
  Vector x_final;
  double f_final = std::numeric_limits<double>::quiet_NaN();
  double best_residual = std::numeric_limits<double>::quiet_NaN();
  long long oracle_calls = 0;
  long long h_exponent = 0;  // sum of (i_t - 1) = log2(H_T / H_0), exact

  bool converged() const {
    return status == RunStatus::Converged || status == RunStatus::GradientConverged;
  }
};

// psi_t(x) = lin_const + <lin_coeff, x> + (1/(p+alpha)) ||x - x0||^{p+alpha},
// accumulated from the a_t-weighted linearizations of f.
class EstimatingSequence {
 public:
  EstimatingSequence(Vector anchor, double power)
      : anchor_(std::move(anchor)), power_(power), lin_coeff_(DualVector::Zero(anchor_.size())) {
    if (power_ < 2.0) throw std::invalid_argument("EstimatingSequence: power must be >= 2");
  }

  void add_term(double a, const Vector& x_new, double f_new, const DualVector& g_new) {
    if (!(a > 0.0)) throw std::invalid_argument("EstimatingSequence: a must be positive");
    lin_coeff_ += a * g_new;
    lin_const_ += a * (f_new - pairing(g_new, x_new));
    big_a_ += a;
  }

  double value(const Vector& x, const MetricSpace& space) const {
    const double r = space.primal_norm(x - anchor_);
    return lin_const_ + pairing(lin_coeff_, x) + std::pow(r, power_) / power_;
  }

  const Vector& anchor() const { return anchor_; }
  double power() const { return power_; }
  const DualVector& lin_coeff() const { return lin_coeff_; }
  double lin_const() const { return lin_const_; }
  double big_a() const { return big_a_; }  // A_t

 private:
  Vector anchor_;
  double power_;
  DualVector lin_coeff_;
  double lin_const_ = 0.0;
  double big_a_ = 0.0;
};

// M_nu = max{ 3 H_f / 2, 3 theta (p-1)! }: a fixed scaling coefficient that
// keeps every trial acceptable when nu and H_f are known.
inline double fixed_regularization_constant(double nu, double h_f, double theta, int p) {
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("fixed_regularization_constant: nu in [0,1]");
  if (h_f < 0.0 || theta < 0.0) throw std::invalid_argument("fixed_regularization_constant: H_f, theta >= 0");
  if (p < 2) throw std::invalid_argument("fixed_regularization_constant: p >= 2");
  if (h_f == 0.0 && theta == 0.0) {
    throw std::invalid_argument("fixed_regularization_constant: H_f and theta cannot both be zero");
  }
  double fac = 1.0;
  for (int i = 2; i <= p - 1; ++i) fac *= i;
  return std::max(1.5 * h_f, 3.0 * theta * fac);
}

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double descent_rhs_basic(double m_coeff, int p, double alpha, double grad_norm) {
  const double q = p + alpha;
  return std::pow(grad_norm, q / (q - 1.0)) /
         (8.0 * factorial(p + 1) * std::pow(m_coeff, 1.0 / (q - 1.0)));
}

inline double descent_rhs_accel(double m_coeff, int p, double alpha, double grad_norm) {
  const double q = p + alpha;
  return 0.25 * std::pow(factorial(p - 1) / m_coeff, 1.0 / (q - 1.0)) *
         std::pow(grad_norm, q / (q - 1.0));
}

inline double a_t_coeff(double m_coeff, int p) {
  return factorial(p - 1) / (std::ldexp(1.0, 3 * p - 1) * m_coeff);
}

}  // namespace detail

// Relative residual of the a_t equation a^{p+alpha} = c (A + a)^{p+alpha-1}.
inline double a_t_equation_residual(double a, double big_a, double m_coeff, int p, double alpha) {
  const double q = p + alpha;
  const double c = detail::a_t_coeff(m_coeff, p);
  const double phi = std::pow(a, q) - c * std::pow(big_a + a, q - 1.0);
  return std::abs(phi) / std::max(std::pow(a, q), c);
}

// Unique positive root of a^{p+alpha} = [(p-1)!/(2^{3p-1} M)] (A + a)^{p+alpha-1}.
inline double solve_a_t(double big_a, double m_coeff, int p, double alpha) {
  if (big_a < 0.0 || !(m_coeff > 0.0)) throw std::invalid_argument("solve_a_t: A >= 0, M > 0");
  if (p < 2 || !(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("solve_a_t: p >= 2, alpha in [0,1]");
  const double q = p + alpha;
  const double c = detail::a_t_coeff(m_coeff, p);
  if (big_a == 0.0) return c;  // a^{q} = c a^{q-1}

  auto phi = [&](double a) { return std::pow(a, q) - c * std::pow(big_a + a, q - 1.0); };
  double hi = std::max(1.0, c);
  int guard = 0;
  while (phi(hi) <= 0.0) {
    hi *= 2.0;
    if (++guard > 4000) throw NumericalError("solve_a_t: bracketing failed");
  }
  double lo = 0.0;

  // Newton on the log form psi(a) = q ln a - ln c - (q-1) ln(A+a), strictly
  // increasing, safeguarded by the [lo, hi] bracket
  double a = 0.5 * hi;
  const double logc = std::log(c);
  for (int it = 0; it < 200; ++it) {
    const double psi = q * std::log(a) - logc - (q - 1.0) * std::log(big_a + a);
    if (psi > 0.0) hi = a; else lo = a;
    const double dpsi = q / a - (q - 1.0) / (big_a + a);
    double next = a - psi / dpsi;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - a) <= 1e-16 * a) { a = next; break; }
    a = next;
  }
  return a;
}

// v = argmin psi: from c + ||v - x0||^{r-2} B (v - x0) = 0,
// v = x0 - tau B^{-1} c with tau = ||c||_*^{(2-r)/(r-1)}.
inline Vector estimating_argmin(const EstimatingSequence& est, const MetricSpace& space) {
  const DualVector& c = est.lin_coeff();
  const double cn = space.dual_norm(c);
  if (cn == 0.0) return est.anchor();
  const double r = est.power();
  const double tau = std::pow(cn, (2.0 - r) / (r - 1.0));
  Vector v = est.anchor() - tau * space.solve(c);
  // stationarity re-check, independent of the closed form above
  const Vector w = v - est.anchor();
  const double wn = space.primal_norm(w);
  const DualVector gpsi = c + std::pow(wn, r - 2.0) * space.apply(w);
  if (space.dual_norm(gpsi) > 1e-9 * std::max(1.0, cn)) {
    throw NumericalError("estimating_argmin: stationarity residual too large");
  }
  return v;
}

inline double estimating_argmin_residual(const EstimatingSequence& est, const MetricSpace& space,
                                         const Vector& v) {
  const DualVector& c = est.lin_coeff();
  const Vector w = v - est.anchor();
  const double wn = space.primal_norm(w);
  DualVector gpsi = c;
  if (wn > 0.0) gpsi += std::pow(wn, est.power() - 2.0) * space.apply(w);
  return space.dual_norm(gpsi) / std::max(1.0, space.dual_norm(c));
}

// Everything a per-iteration observer may want to re-verify: certificates,
// descent tests, estimating-sequence inequalities. Pointers are valid only
// during the callback. Accelerated-only fields are null/NaN for the basic
// methods.
struct IterationEvent {
  int t = 0;
  const Vector* x_prev = nullptr;
  const Vector* center = nullptr;  // x_t for basic methods, y_t for accelerated
  double f_prev = 0.0;
  double f_center = 0.0;
  const TrialPoint* trial = nullptr;
  double accepted_m = 0.0;  // final 2^{i_t} H_t, or the fixed M
  int ls_trials = 0;        // i_t
  int p = 0;
  double alpha = 1.0;
  const EstimatingSequence* est = nullptr;  // state after the update
  const Vector* v_next = nullptr;
  double a_t = std::numeric_limits<double>::quiet_NaN();
  double gamma_t = std::numeric_limits<double>::quiet_NaN();
  double big_a_prev = std::numeric_limits<double>::quiet_NaN();
  double big_a_next = std::numeric_limits<double>::quiet_NaN();
  double a_residual = std::numeric_limits<double>::quiet_NaN();
  double argmin_residual = std::numeric_limits<double>::quiet_NaN();
};

struct RunHooks {
  std::function<void(const IterationEvent&)> on_accept;
  int max_doublings = 60;  // per-iteration cap on the H line search
};

namespace detail {

class RunClock {
 public:
  long long elapsed_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline double residual_of(double f, const StoppingRule& stop) {
  return stop.f_star ? f - *stop.f_star : std::numeric_limits<double>::quiet_NaN();
}

inline bool stop_check(const StoppingRule& stop, double f, double grad_norm, int t, RunStatus& status) {
  if (stop.f_star && stop.eps > 0.0 && f - *stop.f_star <= stop.eps) {
    status = RunStatus::Converged;
    return true;
  }
  if (stop.gtol > 0.0 && grad_norm <= stop.gtol) {
    status = RunStatus::GradientConverged;
    return true;
  }
  if (t >= stop.max_outer_iters) {
    status = RunStatus::IterationLimit;
    return true;
  }
  return false;
}

inline void finalize(RunRecord& rec, const Vector& x, double f) {
  rec.x_final = x;
  rec.f_final = f;
  rec.best_residual = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : rec.rows) {
    if (std::isnan(row.residual)) continue;
    if (std::isnan(rec.best_residual) || row.residual < rec.best_residual) {
      rec.best_residual = row.residual;
    }
  }
}

inline void validate_run_inputs(const DerivativeOracle& oracle, const MetricSpace& space,
                                const Vector& x0, const StoppingRule& stop) {
  stop.validate();
  require_dim(x0, oracle.dim(), "run: x0");
  require_finite(x0, "run: x0");
  if (space.dim() != oracle.dim()) throw std::invalid_argument("run: space/oracle dimension mismatch");
}

// Shared body of Algorithms 1 and 2. When adaptive is false the coefficient is
// fixed at h0 and a failed descent test aborts with DescentFailure.
inline RunRecord run_basic(const DerivativeOracle& oracle, const MetricSpace& space,
                           const SmoothnessParams& params, double h0, Vector x0,
                           const StoppingRule& stop, const SubsolverOptions& sub,
                           const RunHooks& hooks, bool adaptive) {
  validate_run_inputs(oracle, space, x0, stop);
  if (!(h0 > 0.0)) throw std::invalid_argument("run: scaling coefficient must be positive");
  const int p = oracle.order();
  const double alpha = params.alpha;

  RunClock clock;
  RunRecord rec;
  Vector x = std::move(x0);
  double f_x = oracle.value(x);
  DualVector g_x = oracle.gradient(x);
  double gn = space.dual_norm(g_x);
  rec.rows.push_back({0, f_x, residual_of(f_x, stop), gn, h0, 0, 0, 0, clock.elapsed_ns()});

  double h_t = h0;
  int t = 0;
  while (true) {
    if (stop_check(stop, f_x, gn, t, rec.status)) break;

    TaylorModel taylor(oracle, x);
    TrialPoint trial;
    double m_t = h_t;
    int i = 0;
    bool blowup = false;
    for (;; ++i) {
      if (i > hooks.max_doublings) {
        blowup = true;
        break;
      }
      m_t = std::ldexp(h_t, i);  // 2^i H_t, exact
      const RegularizedModel model(taylor, m_t, alpha, space);
      ++rec.oracle_calls;
      bool solved = true;
      try {
        trial = solve_model(model, f_x, sub);
      } catch (const SubsolverStall&) {
        solved = false;  // count the call, raise H and retry
      }
      if (solved) {
        const double rhs = descent_rhs_basic(m_t, p, alpha, space.dual_norm(trial.f_gradient));
        if (f_x - trial.f_value >= rhs) break;
      }
      if (!adaptive) {
        rec.status = solved ? RunStatus::DescentFailure : RunStatus::SubsolverStall;
        rec.message = solved ? "descent test failed with fixed M; use the adaptive variant"
                             : "subsolver stalled with fixed M";
        finalize(rec, x, f_x);
        return rec;
      }
    }
    if (blowup) {
      rec.status = RunStatus::LineSearchBlowup;
      rec.message = "doubling cap exceeded; oracle or model inconsistent";
      break;
    }
    const int i_t = i;

    if (hooks.on_accept) {
      IterationEvent ev;
      ev.t = t;
      ev.x_prev = &x;
      ev.center = &x;
      ev.f_prev = f_x;
      ev.f_center = f_x;
      ev.trial = &trial;
      ev.accepted_m = m_t;
      ev.ls_trials = i_t;
      ev.p = p;
      ev.alpha = alpha;
      hooks.on_accept(ev);
    }

    x = trial.point;
    f_x = trial.f_value;
    g_x = trial.f_gradient;
    gn = space.dual_norm(g_x);
    if (adaptive) {
      h_t = std::ldexp(m_t, -1);  // H_{t+1} = 2^{i_t - 1} H_t
      rec.h_exponent += i_t - 1;
    }
    ++t;
    rec.rows.push_back({t, f_x, residual_of(f_x, stop), gn, m_t, trial.inner_iters, i_t,
                        rec.oracle_calls, clock.elapsed_ns()});
  }
  finalize(rec, x, f_x);
  return rec;
}

// Shared body of Algorithms 3 and 4.
inline RunRecord run_accelerated_impl(const DerivativeOracle& oracle, const MetricSpace& space,
                                      const SmoothnessParams& params, double h0, Vector x0,
                                      const StoppingRule& stop, const SubsolverOptions& sub,
                                      const RunHooks& hooks, bool adaptive) {
  validate_run_inputs(oracle, space, x0, stop);
  if (!(h0 > 0.0)) throw std::invalid_argument("run: scaling coefficient must be positive");
  const int p = oracle.order();
  const double alpha = params.alpha;
  const double q = p + alpha;

  RunClock clock;
  RunRecord rec;
  Vector x = std::move(x0);
  Vector v = x;
  EstimatingSequence est(x, q);
  double f_x = oracle.value(x);
  DualVector g_x = oracle.gradient(x);
  double gn = space.dual_norm(g_x);
  rec.rows.push_back({0, f_x, residual_of(f_x, stop), gn, h0, 0, 0, 0, clock.elapsed_ns()});

  double h_t = h0;
  int t = 0;
  while (true) {
    if (stop_check(stop, f_x, gn, t, rec.status)) break;

    TrialPoint trial;
    Vector y;
    double f_y = 0.0, a_t = 0.0, gamma_t = 0.0, m_t = h_t;
    int i = 0;
    bool blowup = false;
    for (;; ++i) {
      if (i > hooks.max_doublings) {
        blowup = true;
        break;
      }
      m_t = std::ldexp(h_t, i);
      a_t = solve_a_t(est.big_a(), m_t, p, alpha);
      gamma_t = a_t / (est.big_a() + a_t);
      y = (1.0 - gamma_t) * x + gamma_t * v;
      f_y = oracle.value(y);
      const RegularizedModel model(TaylorModel(oracle, y), m_t, alpha, space);
      ++rec.oracle_calls;
      bool solved = true;
      try {
        trial = solve_model(model, f_y, sub);
      } catch (const SubsolverStall&) {
        solved = false;
      }
      if (solved) {
        const double gn_new = space.dual_norm(trial.f_gradient);
        const double lhs = pairing(trial.f_gradient, y - trial.point);
        if (lhs >= descent_rhs_accel(m_t, p, alpha, gn_new)) break;
      }
      if (!adaptive) {
        rec.status = solved ? RunStatus::DescentFailure : RunStatus::SubsolverStall;
        rec.message = solved ? "descent test failed with fixed M; use the adaptive variant"
                             : "subsolver stalled with fixed M";
        finalize(rec, x, f_x);
        return rec;
      }
    }
    if (blowup) {
      rec.status = RunStatus::LineSearchBlowup;
      rec.message = "doubling cap exceeded; oracle or model inconsistent";
      break;
    }
    const int i_t = i;

    const double big_a_prev = est.big_a();
    const Vector x_prev = x;
    x = trial.point;
    f_x = trial.f_value;
    g_x = trial.f_gradient;
    gn = space.dual_norm(g_x);
    est.add_term(a_t, x, f_x, g_x);
    v = estimating_argmin(est, space);

    if (hooks.on_accept) {
      IterationEvent ev;
      ev.t = t;
      ev.x_prev = &x_prev;
      ev.center = &y;
      ev.f_prev = rec.rows.back().f;
      ev.f_center = f_y;
      ev.trial = &trial;
      ev.accepted_m = m_t;
      ev.ls_trials = i_t;
      ev.p = p;
      ev.alpha = alpha;
      ev.est = &est;
      ev.v_next = &v;
      ev.a_t = a_t;
      ev.gamma_t = gamma_t;
      ev.big_a_prev = big_a_prev;
      ev.big_a_next = est.big_a();
      ev.a_residual = a_t_equation_residual(a_t, big_a_prev, m_t, p, alpha);
      ev.argmin_residual = estimating_argmin_residual(est, space, v);
      hooks.on_accept(ev);
    }

    if (adaptive) {
      h_t = std::ldexp(m_t, -1);
      rec.h_exponent += i_t - 1;
    }
    ++t;
    rec.rows.push_back({t, f_x, residual_of(f_x, stop), gn, m_t, trial.inner_iters, i_t,
                        rec.oracle_calls, clock.elapsed_ns()});
  }
  finalize(rec, x, f_x);
  return rec;
}

}  // namespace detail

// Algorithm 1: fixed scaling coefficient M. For guarantees the caller should
// pick M at least max{3 H_f/2, 3 theta (p-1)!} (fixed_regularization_constant).
inline RunRecord run_tensor(const DerivativeOracle& oracle, const MetricSpace& space,
                            const SmoothnessParams& params, double m_coeff, Vector x0,
                            const StoppingRule& stop, const SubsolverOptions& sub = {},
                            const RunHooks& hooks = {}) {
  return detail::run_basic(oracle, space, params, m_coeff, std::move(x0), stop, sub, hooks, false);
}

// Algorithm 2.
inline RunRecord run_adaptive_tensor(const DerivativeOracle& oracle, const MetricSpace& space,
                                     const SmoothnessParams& params, double h0, Vector x0,
                                     const StoppingRule& stop, const SubsolverOptions& sub = {},
                                     const RunHooks& hooks = {}) {
  return detail::run_basic(oracle, space, params, h0, std::move(x0), stop, sub, hooks, true);
}

// Algorithm 3: fixed M, estimating-sequence acceleration.
inline RunRecord run_accelerated(const DerivativeOracle& oracle, const MetricSpace& space,
                                 const SmoothnessParams& params, double m_coeff, Vector x0,
                                 const StoppingRule& stop, const SubsolverOptions& sub = {},
                                 const RunHooks& hooks = {}) {
  return detail::run_accelerated_impl(oracle, space, params, m_coeff, std::move(x0), stop, sub,
                                      hooks, false);
}

// Algorithm 4.
inline RunRecord run_adaptive_accelerated(const DerivativeOracle& oracle, const MetricSpace& space,
                                          const SmoothnessParams& params, double h0, Vector x0,
                                          const StoppingRule& stop, const SubsolverOptions& sub = {},
                                          const RunHooks& hooks = {}) {
  return detail::run_accelerated_impl(oracle, space, params, h0, std::move(x0), stop, sub, hooks,
                                      true);
}

}  // namespace tensoropt
