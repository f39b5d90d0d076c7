#pragma once
// Experiment harness: strict JSON configs, deterministic runs with persisted
// artifacts (trace CSV, config echo, summary JSON), empirical rate fits, and
// comparison of observed residuals against the theoretical envelopes.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tensoropt/functions.hpp"
#include "tensoropt/hardfn.hpp"
#include "tensoropt/methods.hpp"
#include "tensoropt/oracle.hpp"

namespace tensoropt::bench {

using nlohmann::json;
namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MethodKind { Tensor, AdaptiveTensor, Accelerated, AdaptiveAccelerated };

inline MethodKind parse_method(const std::string& name) {
  if (name == "tensor") return MethodKind::Tensor;
  if (name == "adaptive-tensor") return MethodKind::AdaptiveTensor;
  if (name == "accelerated") return MethodKind::Accelerated;
  if (name == "adaptive-accelerated") return MethodKind::AdaptiveAccelerated;
  throw ConfigError("unknown method '" + name +
                    "' (expected tensor | adaptive-tensor | accelerated | adaptive-accelerated)");
}

inline const char* method_name(MethodKind k) {
  switch (k) {
    case MethodKind::Tensor: return "tensor";
    case MethodKind::AdaptiveTensor: return "adaptive-tensor";
    case MethodKind::Accelerated: return "accelerated";
    default: return "adaptive-accelerated";
  }
}

inline bool is_adaptive(MethodKind k) {
  return k == MethodKind::AdaptiveTensor || k == MethodKind::AdaptiveAccelerated;
}

// A resolved problem instance: the oracle plus whatever closed-form data is
// known about it.
struct Instance {
  std::shared_ptr<const DerivativeOracle> oracle;
  std::string name;
  int p = 2;
  double nu = 1.0;
  std::optional<double> f_star;
  std::optional<double> holder_const;
  std::optional<Vector> x_star;
  std::optional<HardInstance> hard;  // set when the instance is from the hard family
};

// Plugin point for external objectives: factories are registered by name and
// invoked with the instance spec's "params" object.
class FunctionRegistry {
 public:
  using Factory = std::function<Instance(const json&)>;

  static FunctionRegistry& instance() {
    static FunctionRegistry reg;
    return reg;
  }

  void register_factory(const std::string& name, Factory f) { factories_[name] = std::move(f); }
  bool contains(const std::string& name) const { return factories_.count(name) > 0; }

  Instance make(const std::string& name, const json& params) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ConfigError("external instance '" + name + "' not registered");
    return it->second(params);
  }

 private:
  std::map<std::string, Factory> factories_;
};

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const char* where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (item.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
T require_field(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + ": bad value for '" + key + "'");
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const char* where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + ": bad value for '" + key + "'");
  }
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

struct ExperimentConfig {
  json instance;  // normalized instance spec, kept verbatim for the echo
  MethodKind method = MethodKind::AdaptiveTensor;
  bool nu_known = true;
  double theta = 0.1;
  double h0 = 1.0;                 // adaptive methods
  std::optional<double> m_fixed;   // non-adaptive methods (required there)
  double eps = 0.0;
  double gtol = 0.0;
  int max_outer_iters = 1000;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> x0;
  std::string output_dir;
  bool record_timing = false;
};

inline Instance resolve_instance(const json& spec) {
  if (!spec.is_object()) throw ConfigError("instance: must be an object");
  const std::string kind = detail::require_field<std::string>(spec, "kind", "instance");
  if (kind == "hard") {
    detail::reject_unknown_keys(spec, {"kind", "n", "k", "p", "nu"}, "instance(hard)");
    HardInstance h;
    h.n = detail::require_field<int>(spec, "n", "instance(hard)");
    h.k = detail::require_field<int>(spec, "k", "instance(hard)");
    h.p = detail::field_or<int>(spec, "p", 2, "instance(hard)");
    h.nu = detail::require_field<double>(spec, "nu", "instance(hard)");
    try {
      h.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("instance(hard): ") + e.what());
    }
    Instance inst;
    inst.oracle = std::make_shared<HardOracle>(h);
    inst.name = "hard_k" + std::to_string(h.k) + "_n" + std::to_string(h.n);
    inst.p = h.p;
    inst.nu = h.nu;
    auto [xs, fs] = hard_optimum(h);
    inst.f_star = fs;
    inst.x_star = std::move(xs);
    inst.holder_const = hard_holder_constant(h.p, h.nu);
    inst.hard = h;
    return inst;
  }
  if (kind == "builtin-smooth") {
    detail::reject_unknown_keys(spec, {"kind", "name", "dim", "seed", "nu"}, "instance(builtin)");
    const std::string name = detail::require_field<std::string>(spec, "name", "instance(builtin)");
    if (name == "quadratic") {
      const int dim = detail::require_field<int>(spec, "dim", "instance(builtin)");
      if (dim < 1) throw ConfigError("instance(builtin): dim >= 1");
      const auto seed = detail::field_or<std::uint64_t>(spec, "seed", 0, "instance(builtin)");
      auto oracle = std::make_shared<QuadraticOracle>(make_random_quadratic(dim, seed));
      Instance inst;
      inst.name = "quadratic_d" + std::to_string(dim);
      inst.p = 2;
      inst.nu = 1.0;
      inst.f_star = oracle->min_value();
      inst.x_star = oracle->minimizer();
      inst.holder_const = 0.0;
      inst.oracle = std::move(oracle);
      return inst;
    }
    if (name == "power1d") {
      const double nu = detail::require_field<double>(spec, "nu", "instance(builtin)");
      if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("instance(builtin): nu must be in [0,1]");
      Instance inst;
      inst.oracle = std::make_shared<Power1DOracle>(nu);
      inst.name = "power1d";
      inst.p = 2;
      inst.nu = nu;
      inst.f_star = 0.0;
      inst.x_star = Vector::Zero(1);
      inst.holder_const = 1.0 + nu;
      return inst;
    }
    throw ConfigError("instance(builtin): unknown name '" + name + "'");
  }
  if (kind == "external") {
    detail::reject_unknown_keys(spec, {"kind", "name", "params"}, "instance(external)");
    const std::string name = detail::require_field<std::string>(spec, "name", "instance(external)");
    return FunctionRegistry::instance().make(name, spec.contains("params") ? spec.at("params") : json::object());
  }
  throw ConfigError("instance: unknown kind '" + kind + "'");
}

inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: must be a JSON object");
  detail::reject_unknown_keys(j, {"instance", "method", "params", "output_dir", "record_timing"},
                              "config");
  ExperimentConfig cfg;
  if (!j.contains("instance")) throw ConfigError("config: missing 'instance'");
  cfg.instance = j.at("instance");
  resolve_instance(cfg.instance);  // validate eagerly
  cfg.method = parse_method(detail::require_field<std::string>(j, "method", "config"));
  cfg.output_dir = detail::field_or<std::string>(j, "output_dir", "", "config");
  cfg.record_timing = detail::field_or<bool>(j, "record_timing", false, "config");

  const json params = j.contains("params") ? j.at("params") : json::object();
  detail::reject_unknown_keys(
      params, {"nu_known", "theta", "H0", "M", "eps", "gtol", "max_outer_iters", "seed", "x0"},
      "params");
  cfg.nu_known = detail::field_or<bool>(params, "nu_known", true, "params");
  cfg.theta = detail::field_or<double>(params, "theta", 0.1, "params");
  cfg.h0 = detail::field_or<double>(params, "H0", 1.0, "params");
  if (params.contains("M")) cfg.m_fixed = detail::require_field<double>(params, "M", "params");
  cfg.eps = detail::field_or<double>(params, "eps", 0.0, "params");
  cfg.gtol = detail::field_or<double>(params, "gtol", 0.0, "params");
  cfg.max_outer_iters = detail::field_or<int>(params, "max_outer_iters", 1000, "params");
  cfg.seed = detail::field_or<std::uint64_t>(params, "seed", 0, "params");
  if (params.contains("x0")) {
    cfg.x0 = detail::require_field<std::vector<double>>(params, "x0", "params");
  }

  if (cfg.theta < 0.0) throw ConfigError("params: theta >= 0");
  if (!(cfg.h0 > 0.0)) throw ConfigError("params: H0 > 0");
  if (cfg.m_fixed && !(*cfg.m_fixed > 0.0)) throw ConfigError("params: M > 0");
  if (cfg.eps < 0.0 || cfg.eps >= 1.0) throw ConfigError("params: eps in [0, 1)");
  if (cfg.gtol < 0.0) throw ConfigError("params: gtol >= 0");
  if (cfg.max_outer_iters < 1) throw ConfigError("params: max_outer_iters >= 1");
  if (!is_adaptive(cfg.method) && !cfg.m_fixed) {
    throw ConfigError("params: non-adaptive methods require M");
  }
  return cfg;
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json params{{"nu_known", cfg.nu_known}, {"theta", cfg.theta},
              {"H0", cfg.h0},             {"eps", cfg.eps},
              {"gtol", cfg.gtol},         {"max_outer_iters", cfg.max_outer_iters},
              {"seed", cfg.seed}};
  if (cfg.m_fixed) params["M"] = *cfg.m_fixed;
  if (cfg.x0) params["x0"] = *cfg.x0;
  return json{{"instance", cfg.instance},
              {"method", method_name(cfg.method)},
              {"params", params},
              {"output_dir", cfg.output_dir},
              {"record_timing", cfg.record_timing}};
}

inline const char* kTraceHeader = "t,f,residual,grad_norm,H,inner_iters,ls_trials,oracle_calls,wall_ns";

inline void write_trace_csv(const RunRecord& rec, const fs::path& path, bool record_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << kTraceHeader << "\n";
  for (const auto& r : rec.rows) {
    out << r.t << ',' << detail::format_double(r.f) << ',' << detail::format_double(r.residual)
        << ',' << detail::format_double(r.grad_norm) << ',' << detail::format_double(r.h_coeff)
        << ',' << r.inner_iters << ',' << r.ls_trials << ',' << r.oracle_calls << ','
        << (record_timing ? r.wall_ns : 0LL) << "\n";
  }
}

inline RunRecord read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,f,residual", 0) != 0) {
    throw std::runtime_error("bad trace header in " + path.string());
  }
  RunRecord rec;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    IterationRow r;
    std::istringstream ss(line);
    std::string tok;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("short trace row in " + path.string());
      return tok;
    };
    r.t = std::stoi(next());
    r.f = std::stod(next());
    r.residual = std::stod(next());
    r.grad_norm = std::stod(next());
    r.h_coeff = std::stod(next());
    r.inner_iters = std::stoi(next());
    r.ls_trials = std::stoi(next());
    r.oracle_calls = std::stoll(next());
    r.wall_ns = std::stoll(next());
    rec.rows.push_back(r);
  }
  if (!rec.rows.empty()) {
    rec.oracle_calls = rec.rows.back().oracle_calls;
    rec.f_final = rec.rows.back().f;
    for (const auto& r : rec.rows) {
      if (!std::isnan(r.residual) &&
          (std::isnan(rec.best_residual) || r.residual < rec.best_residual)) {
        rec.best_residual = r.residual;
      }
    }
  }
  return rec;
}

struct ExperimentResult {
  RunRecord record;
  Instance instance;
  fs::path trace_path;
  fs::path summary_path;
  fs::path config_path;
  bool converged = false;
};

// Output root override for relative output_dir values.
inline fs::path resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("TENSOROPT_OUT_ROOT")) return fs::path(root) / p;
  return p;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  Instance inst = resolve_instance(cfg.instance);
  const MetricSpace space = MetricSpace::identity(inst.oracle->dim());

  Vector x0 = Vector::Zero(inst.oracle->dim());
  if (cfg.x0) {
    if (static_cast<int>(cfg.x0->size()) != inst.oracle->dim()) {
      throw ConfigError("params: x0 dimension mismatch");
    }
    x0 = Eigen::Map<const Vector>(cfg.x0->data(), static_cast<Eigen::Index>(cfg.x0->size()));
  }

  StoppingRule stop;
  stop.f_star = inst.f_star;
  stop.eps = cfg.eps;
  stop.gtol = cfg.gtol;
  stop.max_outer_iters = cfg.max_outer_iters;
  if (cfg.eps > 0.0 && !inst.f_star) throw ConfigError("params: eps given but instance has no known f*");

  SubsolverOptions sub;
  sub.theta = cfg.theta;

  const SmoothnessParams params =
      cfg.nu_known ? SmoothnessParams::known(inst.nu) : SmoothnessParams::universal();

  ExperimentResult res;
  res.instance = inst;
  switch (cfg.method) {
    case MethodKind::Tensor:
      res.record = run_tensor(*inst.oracle, space, params, *cfg.m_fixed, x0, stop, sub);
      break;
    case MethodKind::AdaptiveTensor:
      res.record = run_adaptive_tensor(*inst.oracle, space, params, cfg.h0, x0, stop, sub);
      break;
    case MethodKind::Accelerated:
      res.record = run_accelerated(*inst.oracle, space, params, *cfg.m_fixed, x0, stop, sub);
      break;
    case MethodKind::AdaptiveAccelerated:
      res.record = run_adaptive_accelerated(*inst.oracle, space, params, cfg.h0, x0, stop, sub);
      break;
  }
  res.converged = res.record.converged();

  if (!cfg.output_dir.empty()) {
    const fs::path dir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(dir);
    res.trace_path = dir / "trace.csv";
    res.summary_path = dir / "summary.json";
    res.config_path = dir / "config.json";
    write_trace_csv(res.record, res.trace_path, cfg.record_timing);
    {
      std::ofstream out(res.config_path, std::ios::binary);
      out << config_to_json(cfg).dump(2) << "\n";
    }
    json summary{{"instance", inst.name},
                 {"method", method_name(cfg.method)},
                 {"status", to_string(res.record.status)},
                 {"converged", res.converged},
                 {"iterations", res.record.rows.empty() ? 0 : res.record.rows.back().t},
                 {"f_final", res.record.f_final},
                 {"oracle_calls", res.record.oracle_calls},
                 {"h_exponent", res.record.h_exponent}};
    if (!res.record.message.empty()) summary["message"] = res.record.message;
    if (!std::isnan(res.record.best_residual)) summary["best_residual"] = res.record.best_residual;
    std::ofstream out(res.summary_path, std::ios::binary);
    out << summary.dump(2) << "\n";
  }
  return res;
}

// --- empirical rate fits ----------------------------------------------------

struct RateFit {
  int t_lo = 0;
  int t_hi = 0;
  double exponent = 0.0;   // decay rate: residual ~ (t - t_shift)^{-exponent}
  double r_squared = 0.0;
  int t_shift = 0;         // transient length m, grid-searched for fit quality
};

// Least-squares slope of log(residual) against log(t - m) over the best
// window: the transient m is grid-searched over {0..min(10, T/2)} and the
// window may drop a trailing segment (runs that finish superlinearly leave the
// power-law regime near the end), always keeping at least half of the
// post-transient points and no fewer than 5. Maximal R^2 wins.
inline std::optional<RateFit> fit_rate(const RunRecord& rec) {
  struct Pt {
    int t;
    double logres;
  };
  std::vector<Pt> pts;
  for (const auto& r : rec.rows) {
    if (r.t >= 1 && std::isfinite(r.residual) && r.residual > 0.0) {
      pts.push_back({r.t, std::log(r.residual)});
    }
  }
  if (pts.size() < 10) return std::nullopt;
  const int t_max = pts.back().t;
  const int m_max = std::min(10, t_max / 2);

  std::optional<RateFit> best;
  for (int m = 0; m <= m_max; ++m) {
    std::vector<Pt> post;
    for (const auto& pt : pts) {
      if (pt.t > m) post.push_back(pt);
    }
    const int n_post = static_cast<int>(post.size());
    if (n_post < 10) continue;
    const int min_len = std::max(5, (n_post + 1) / 2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int hi = 0; hi < n_post; ++hi) {
      const double x = std::log(static_cast<double>(post[hi].t - m));
      const double y = post[hi].logres;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      syy += y * y;
      const int n = hi + 1;
      if (n < min_len) continue;
      const double vx = sxx - sx * sx / n;
      const double vy = syy - sy * sy / n;
      const double cxy = sxy - sx * sy / n;
      if (vx <= 0.0) continue;
      const double slope = cxy / vx;
      const double r2 = vy > 1e-30 ? (cxy * cxy) / (vx * vy) : 0.0;
      if (!best || r2 > best->r_squared) {
        best = RateFit{post.front().t, post[hi].t, -slope, r2, m};
      }
    }
  }
  return best;
}

// --- theory constants and envelopes ------------------------------------------

struct TheoryConstants {
  double m_nu_basic = 0.0;  // max{3Hf/2, 3 theta (p-1)!}
  double m_nu_accel = 0.0;  // (p+nu-1)(Hf + theta (p-1)!)
  std::optional<double> n_eps_universal;       // basic adaptive bound, alpha = 1; needs eps and R
  std::optional<double> ntilde_eps_universal;  // accelerated adaptive bound, alpha = 1; needs eps and R
  std::optional<double> xi_delta;              // max{theta, (3Hf/2)^{p/(p+nu-1)} (4/delta)^{(1-nu)/(p+nu-1)}}
  std::optional<double> ratio_lhs;             // eps^{-1/(p+nu)}
  std::optional<double> ratio_rhs;             // 6 eps^{-2/(3(p+nu)-2)}
};

inline TheoryConstants theory_constants(int p, double nu, double theta, double h_f,
                                        std::optional<double> eps = std::nullopt,
                                        std::optional<double> radius = std::nullopt,
                                        std::optional<double> delta = std::nullopt) {
  if (p < 2 || !(nu >= 0.0 && nu <= 1.0) || theta < 0.0 || h_f < 0.0) {
    throw std::invalid_argument("theory_constants: bad arguments");
  }
  const double fac = tensoropt::detail::factorial(p - 1);
  TheoryConstants tc;
  tc.m_nu_basic = std::max(1.5 * h_f, 3.0 * theta * fac);
  tc.m_nu_accel = (p + nu - 1.0) * (h_f + theta * fac);
  if (eps && radius && *eps > 0.0 && *radius > 0.0) {
    const double growth = std::pow(4.0 * *radius / *eps, (1.0 - nu) / (p + nu - 1.0));
    tc.n_eps_universal = std::max(theta, std::pow(1.5 * h_f, p / (p + nu - 1.0)) * growth);
    tc.ntilde_eps_universal =
        std::max(4.0 * theta * fac, std::pow(4.0 * h_f, p / (p + nu - 1.0)) * growth);
  }
  if (delta && *delta > 0.0) {
    tc.xi_delta = std::max(theta, std::pow(1.5 * h_f, p / (p + nu - 1.0)) *
                                      std::pow(4.0 / *delta, (1.0 - nu) / (p + nu - 1.0)));
  }
  if (eps && *eps > 0.0) {
    tc.ratio_lhs = std::pow(*eps, -1.0 / (p + nu));
    tc.ratio_rhs = 6.0 * std::pow(*eps, -2.0 / (3.0 * (p + nu) - 2.0));
  }
  return tc;
}

struct CompareOptions {
  std::optional<double> d0;       // level-set diameter stand-in (user-supplied)
  std::optional<double> radius;   // R(eps) stand-in (user-supplied, universal branch)
  std::optional<double> eps;      // target accuracy used in N(eps)
  double theta = 0.1;
  double h0 = 1.0;                // H0 for adaptive methods, M for fixed ones
  bool alpha_is_nu = true;
  int transient = 0;              // m in the (t - m) denominators
};

struct BoundsRow {
  int t = 0;
  double observed = std::numeric_limits<double>::quiet_NaN();  // min residual up to t
  double upper = std::numeric_limits<double>::quiet_NaN();
  double lower = std::numeric_limits<double>::quiet_NaN();
  bool violation = false;  // observed fell below the lower envelope
};

struct BoundsReport {
  std::vector<BoundsRow> rows;
  bool partial = false;  // some constants were unavailable; upper envelope omitted
  int violations = 0;
};

// Per-iteration comparison of the observed residual against the upper bound of
// the method's convergence theorem and the lower-bound envelope of the hard
// family. Lower envelopes assume the canonical x0 = 0 start; at iteration t
// the binding instance is f_{2t+1}, whose optimum norm is known in closed
// form.
inline BoundsReport compare_bounds(const RunRecord& rec, const Instance& inst, MethodKind kind,
                                   const CompareOptions& opts = {}) {
  if (!inst.f_star || !inst.holder_const || !inst.x_star) {
    throw std::invalid_argument("compare_bounds: instance needs known f*, H_f, x*");
  }
  const int p = inst.p;
  const double nu = inst.nu;
  const double alpha = opts.alpha_is_nu ? nu : 1.0;
  const double q = p + alpha;
  const double h_f = *inst.holder_const;
  const double fac_p1 = tensoropt::detail::factorial(p + 1);
  const double fac_pm1 = tensoropt::detail::factorial(p - 1);

  // scaling-coefficient bound entering the theorems
  std::optional<double> m_bound;
  bool partial = false;
  switch (kind) {
    case MethodKind::Tensor:
      m_bound = opts.h0;  // the fixed M plays the role of M_nu
      break;
    case MethodKind::AdaptiveTensor: {
      if (opts.alpha_is_nu) {
        m_bound = 2.0 * std::max(opts.h0, std::max(1.5 * h_f, 3.0 * opts.theta * fac_pm1));
      } else if (opts.eps && opts.radius) {
        const auto tc = theory_constants(p, nu, opts.theta, h_f, opts.eps, opts.radius);
        m_bound = 2.0 * std::max(opts.h0, *tc.n_eps_universal);
      }
      break;
    }
    case MethodKind::Accelerated:
      m_bound = opts.h0;
      break;
    case MethodKind::AdaptiveAccelerated: {
      if (opts.alpha_is_nu) {
        m_bound = 2.0 * std::max(opts.h0, (p + nu - 1.0) * (h_f + opts.theta * fac_pm1));
      } else if (opts.eps && opts.radius) {
        const auto tc = theory_constants(p, nu, opts.theta, h_f, opts.eps, opts.radius);
        m_bound = 2.0 * std::max(opts.h0, *tc.ntilde_eps_universal);
      }
      break;
    }
  }

  const bool basic = kind == MethodKind::Tensor || kind == MethodKind::AdaptiveTensor;
  std::optional<double> dist;  // ||x0 - x*||, with x0 = 0 assumed for hard instances
  if (inst.x_star) dist = inst.x_star->norm();

  BoundsReport report;
  double running_min = std::numeric_limits<double>::infinity();
  for (const auto& row : rec.rows) {
    if (row.t < 1 || !std::isfinite(row.residual)) continue;
    running_min = std::min(running_min, row.residual);
    BoundsRow out;
    out.t = row.t;
    out.observed = running_min;

    if (basic) {
      if (m_bound && opts.d0 && row.t > opts.transient) {
        out.upper = std::pow(24.0 * p * fac_p1, q - 1.0) * *m_bound * std::pow(*opts.d0, q) /
                    std::pow(static_cast<double>(row.t - opts.transient), q - 1.0);
      } else if (!m_bound || !opts.d0) {
        partial = true;
      }
    } else {
      if (m_bound && dist && row.t >= 2) {
        const double scale = kind == MethodKind::Accelerated ? std::ldexp(1.0, 3 * p - 1)
                                                             : std::ldexp(1.0, 3 * p);
        out.upper = scale * *m_bound * std::pow(q, q - 1.0) * std::pow(*dist, q) /
                    (fac_pm1 * std::pow(static_cast<double>(row.t - 1), q));
      } else if (!m_bound || !dist) {
        partial = true;
      }
    }

    if (inst.hard && 2 * row.t + 1 <= inst.hard->n) {
      const int kk = 2 * row.t + 1;
      const double norm2 = kk * (kk + 1.0) * (2.0 * kk + 1.0) / 6.0;
      out.lower = lower_bound_envelope(p, nu, row.t, std::sqrt(norm2), h_f);
      out.violation = out.observed < out.lower * (1.0 - 1e-12);
      if (out.violation) ++report.violations;
    }
    report.rows.push_back(out);
  }
  report.partial = partial;
  return report;
}

}  // namespace tensoropt::bench
