// Command-line harness: run experiments from JSON configs, fit empirical
// rates, compare traces against theory envelopes, render SVG plots, and print
// the theory constants.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tensoropt/bench.hpp"
#include "tensoropt/plot.hpp"

namespace fs = std::filesystem;
using namespace tensoropt;
using namespace tensoropt::bench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMethodFailure = 1;
constexpr int kExitConfigError = 2;

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j;
}

// instance spec strings like "hard:k=5,n=11,p=2,nu=1.0"
Instance parse_instance_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if (kind != "hard") {
    throw ConfigError("only 'hard:...' instance specs are supported here (got '" + spec + "')");
  }
  json j{{"kind", "hard"}};
  std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  std::stringstream ss(rest);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("bad instance spec field '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "k" || key == "n" || key == "p") {
      j[key] = std::stoi(val);
    } else if (key == "nu") {
      j[key] = std::stod(val);
    } else {
      throw ConfigError("unknown instance spec key '" + key + "'");
    }
  }
  return resolve_instance(j);
}

int cmd_run(const std::vector<std::string>& config_paths) {
  std::vector<ExperimentConfig> configs;
  for (const auto& path : config_paths) {
    configs.push_back(parse_config(load_json(path)));
  }
  // independent runs, one worker each; all writes go to per-run directories
  std::vector<std::future<ExperimentResult>> futures;
  futures.reserve(configs.size());
  for (const auto& cfg : configs) {
    futures.push_back(std::async(configs.size() > 1 ? std::launch::async : std::launch::deferred,
                                 [&cfg] { return run_experiment(cfg); }));
  }
  int exit_code = kExitOk;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    const ExperimentResult res = futures[i].get();
    std::cout << config_paths[i] << ": " << to_string(res.record.status) << ", iterations="
              << (res.record.rows.empty() ? 0 : res.record.rows.back().t)
              << ", oracle_calls=" << res.record.oracle_calls;
    if (!std::isnan(res.record.best_residual)) {
      std::cout << ", best_residual=" << res.record.best_residual;
    }
    std::cout << "\n";
    if (!res.trace_path.empty()) std::cout << "  trace: " << res.trace_path.string() << "\n";
    if (!res.converged) exit_code = kExitMethodFailure;
  }
  return exit_code;
}

int cmd_fit(const std::string& trace_path, bool as_json) {
  const RunRecord rec = read_trace_csv(trace_path);
  const auto fit = fit_rate(rec);
  if (!fit) {
    std::cerr << "fit unavailable: need at least 10 post-transient points with positive residuals\n";
    return kExitMethodFailure;
  }
  if (as_json) {
    json j{{"exponent", fit->exponent},
           {"r_squared", fit->r_squared},
           {"t_shift", fit->t_shift},
           {"window", {fit->t_lo, fit->t_hi}}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "residual ~ (t - " << fit->t_shift << ")^-" << fit->exponent
              << "  (r^2 = " << fit->r_squared << ", window t in [" << fit->t_lo << ", "
              << fit->t_hi << "])\n";
  }
  return kExitOk;
}

int cmd_compare(const std::string& trace_path, const std::string& instance_spec,
                const std::string& method, const CompareOptions& opts, const std::string& out_csv) {
  const RunRecord rec = read_trace_csv(trace_path);
  const Instance inst = parse_instance_spec(instance_spec);
  const BoundsReport report = compare_bounds(rec, inst, parse_method(method), opts);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_csv.empty()) {
    file.open(out_csv, std::ios::binary);
    if (!file) throw ConfigError("cannot open " + out_csv);
    out = &file;
  }
  *out << "t,observed,upper,lower,violation\n";
  for (const auto& row : report.rows) {
    *out << row.t << ',' << row.observed << ',' << row.upper << ',' << row.lower << ','
         << (row.violation ? 1 : 0) << "\n";
  }
  if (report.partial) {
    std::cerr << "note: report is partial (missing constants; pass --D0/--eps/--R)\n";
  }
  std::cerr << report.violations << " lower-envelope violation(s)\n";
  return report.violations == 0 ? kExitOk : kExitMethodFailure;
}

int cmd_plot(const std::vector<std::string>& traces, const std::string& out_dir,
             const std::string& instance_spec, const std::string& method,
             const CompareOptions& opts) {
  std::vector<std::pair<std::string, RunRecord>> named;
  std::vector<BoundsReport> reports;
  std::vector<const BoundsReport*> report_ptrs;
  for (const auto& t : traces) {
    RunRecord rec = read_trace_csv(t);
    if (!instance_spec.empty()) {
      const Instance inst = parse_instance_spec(instance_spec);
      reports.push_back(compare_bounds(rec, inst, parse_method(method), opts));
    }
    named.emplace_back(fs::path(t).stem().string(), std::move(rec));
  }
  for (const auto& r : reports) report_ptrs.push_back(&r);
  const auto written = emit_plots(named, report_ptrs, out_dir);
  for (const auto& p : written) std::cout << p.string() << "\n";
  return written.empty() ? kExitMethodFailure : kExitOk;
}

int cmd_constants(int p, double nu, double theta, double hf, std::optional<double> eps,
                  std::optional<double> radius, std::optional<double> delta) {
  const TheoryConstants tc = theory_constants(p, nu, theta, hf, eps, radius, delta);
  std::cout << "M_nu (basic methods)                     = " << tc.m_nu_basic << "\n";
  std::cout << "M_nu (accelerated methods)               = " << tc.m_nu_accel << "\n";
  if (tc.n_eps_universal) {
    std::cout << "N_nu(eps), universal branch              = " << *tc.n_eps_universal << "\n";
  }
  if (tc.ntilde_eps_universal) {
    std::cout << "N~_nu(eps), universal branch             = " << *tc.ntilde_eps_universal << "\n";
  }
  if (tc.xi_delta) {
    std::cout << "xi_nu(delta)                             = " << *tc.xi_delta << "\n";
  }
  if (tc.ratio_lhs && tc.ratio_rhs) {
    std::cout << "eps^{-1/(p+nu)}                          = " << *tc.ratio_lhs << "\n";
    std::cout << "6 eps^{-2/(3(p+nu)-2)}                   = " << *tc.ratio_rhs << "\n";
    std::cout << "near-optimality check: eps^{-1/(p+nu)} <= 6 eps^{-2/(3(p+nu)-2)}: "
              << (*tc.ratio_lhs <= *tc.ratio_rhs ? "yes" : "no") << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-order tensor methods for convex optimization under Holder smoothness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "execute experiments from JSON configs");
  std::vector<std::string> config_paths;
  run->add_option("configs", config_paths, "config JSON files")->required()->check(CLI::ExistingFile);

  // fit
  auto* fit = app.add_subcommand("fit", "fit the empirical decay exponent of a trace");
  std::string fit_trace;
  bool fit_json = false;
  fit->add_option("trace", fit_trace, "trace CSV")->required()->check(CLI::ExistingFile);
  fit->add_flag("--json", fit_json, "emit JSON");

  // compare
  auto* compare = app.add_subcommand("compare", "compare a trace against theory envelopes");
  std::string cmp_trace, cmp_instance, cmp_method = "adaptive-tensor", cmp_out;
  CompareOptions cmp_opts;
  double cmp_d0 = 0.0, cmp_r = 0.0, cmp_eps = 0.0;
  compare->add_option("trace", cmp_trace)->required()->check(CLI::ExistingFile);
  compare->add_option("--instance", cmp_instance, "instance spec, e.g. hard:k=5,n=11,p=2,nu=1")
      ->required();
  compare->add_option("--method", cmp_method, "method that produced the trace");
  compare->add_option("--D0", cmp_d0, "level-set diameter stand-in");
  compare->add_option("--R", cmp_r, "R(eps) stand-in");
  compare->add_option("--eps", cmp_eps, "target accuracy used in N(eps)");
  compare->add_option("--theta", cmp_opts.theta, "certificate slack used in the run");
  compare->add_option("--H0", cmp_opts.h0, "H0 (adaptive) or fixed M of the run");
  compare->add_option("--m", cmp_opts.transient, "transient iteration count");
  bool cmp_universal = false;
  compare->add_flag("--universal", cmp_universal, "trace was run with alpha = 1");
  compare->add_option("-o,--output", cmp_out, "write report CSV here");

  // plot
  auto* plot = app.add_subcommand("plot", "render log-log SVG plots of traces");
  std::vector<std::string> plot_traces;
  std::string plot_out = "plots", plot_instance, plot_method = "adaptive-tensor";
  CompareOptions plot_opts;
  double plot_d0 = 0.0;
  plot->add_option("traces", plot_traces)->required()->check(CLI::ExistingFile);
  plot->add_option("-o,--output", plot_out, "output directory")->required();
  plot->add_option("--instance", plot_instance, "overlay envelopes for this instance");
  plot->add_option("--method", plot_method);
  plot->add_option("--D0", plot_d0);

  // constants
  auto* consts = app.add_subcommand("constants", "print theory constants");
  int c_p = 2;
  double c_nu = 1.0, c_theta = 0.1, c_hf = 0.0, c_eps = 0.0, c_r = 0.0, c_delta = 0.0;
  consts->add_option("--p", c_p)->required();
  consts->add_option("--nu", c_nu)->required();
  consts->add_option("--theta", c_theta)->required();
  consts->add_option("--Hf", c_hf)->required();
  consts->add_option("--eps", c_eps);
  consts->add_option("--R", c_r);
  consts->add_option("--delta", c_delta);

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_paths);
    if (fit->parsed()) return cmd_fit(fit_trace, fit_json);
    if (compare->parsed()) {
      if (cmp_d0 > 0.0) cmp_opts.d0 = cmp_d0;
      if (cmp_r > 0.0) cmp_opts.radius = cmp_r;
      if (cmp_eps > 0.0) cmp_opts.eps = cmp_eps;
      cmp_opts.alpha_is_nu = !cmp_universal;
      return cmd_compare(cmp_trace, cmp_instance, cmp_method, cmp_opts, cmp_out);
    }
    if (plot->parsed()) {
      if (plot_d0 > 0.0) plot_opts.d0 = plot_d0;
      return cmd_plot(plot_traces, plot_out, plot_instance, plot_method, plot_opts);
    }
    if (consts->parsed()) {
      return cmd_constants(c_p, c_nu, c_theta, c_hf,
                           c_eps > 0.0 ? std::optional<double>(c_eps) : std::nullopt,
                           c_r > 0.0 ? std::optional<double>(c_r) : std::nullopt,
                           c_delta > 0.0 ? std::optional<double>(c_delta) : std::nullopt);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMethodFailure;
  }
  return kExitOk;
}
