// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits nonzero if any fails.
//
// Usage: acceptance [path-to-cli-binary]
// The CLI path (optional) is used by the determinism/constants criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tensoropt/bench.hpp"
#include "tensoropt/detail/rng.hpp"
#include "tensoropt/functions.hpp"
#include "tensoropt/hardfn.hpp"
#include "tensoropt/methods.hpp"
#include "tensoropt/oracle.hpp"
#include "tensoropt/subsolver.hpp"

using namespace tensoropt;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail) {
  std::printf("%s  criterion %2d  %-28s %s\n", ok ? "PASS" : "FAIL", idx, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

// Re-verifies certificates (the model-value/model-gradient pair) and the
// descent tests from scratch at every accepted step, and collects the
// per-iteration data the aggregate criteria need.
struct Verifier {
  const DerivativeOracle* oracle;
  const MetricSpace* space;
  double theta = 0.1;
  double inner_gtol = 1e-13;
  bool accelerated = false;
  detail::Rng rng{20240817};
  bool check_psi = false;

  int cert_violations = 0;
  int descent_violations = 0;
  int psi_violations = 0;
  int domination_violations = 0;
  double max_a_residual = 0.0;
  double max_argmin_residual = 0.0;
  int events = 0;

  void operator()(const IterationEvent& ev) {
    ++events;
    const double q = ev.p + ev.alpha;
    const RegularizedModel model(TaylorModel(*oracle, *ev.center), ev.accepted_m, ev.alpha, *space);
    const Vector& xp = ev.trial->point;
    const double fc = oracle->value(*ev.center);
    const double omega = model.value(xp);
    const double step = space->primal_norm(xp - *ev.center);
    const double mgn = space->dual_norm(model.gradient(xp));
    if (!(omega <= fc + 1e-10 * std::max(1.0, std::abs(fc)))) ++cert_violations;
    if (!(mgn <= theta * std::pow(step, q - 1.0) || mgn <= inner_gtol)) ++cert_violations;

    const DualVector gp = oracle->gradient(xp);
    const double gn = space->dual_norm(gp);
    if (accelerated) {
      const double lhs = pairing(gp, *ev.center - xp);
      const double rhs = 0.25 * std::pow(factorial(ev.p - 1) / ev.accepted_m, 1.0 / (q - 1.0)) *
                         std::pow(gn, q / (q - 1.0));
      if (!(lhs >= rhs - 1e-12 * std::max(1.0, rhs))) ++descent_violations;
    } else {
      const double lhs = oracle->value(*ev.x_prev) - oracle->value(xp);
      const double rhs = std::pow(gn, q / (q - 1.0)) /
                         (8.0 * factorial(ev.p + 1) * std::pow(ev.accepted_m, 1.0 / (q - 1.0)));
      if (!(lhs >= rhs - 1e-12 * std::max(1.0, rhs))) ++descent_violations;
    }

    if (ev.est != nullptr) {
      max_a_residual = std::max(max_a_residual, ev.a_residual);
      max_argmin_residual = std::max(max_argmin_residual, ev.argmin_residual);
      if (check_psi) {
        const Vector& anchor = ev.est->anchor();
        for (int i = 0; i < 100; ++i) {
          const Vector x = anchor + rng.normal_vector(space->dim()) * 3.0;
          const double lhs = ev.est->value(x, *space);
          const double rhs =
              ev.est->big_a() * oracle->value(x) + std::pow((x - anchor).norm(), q) / q;
          if (lhs > rhs + 1e-9 * std::max(1.0, std::abs(rhs))) ++psi_violations;
        }
        const double lhs = ev.est->big_a() * ev.trial->f_value;
        const double rhs = ev.est->value(*ev.v_next, *space);
        if (lhs > rhs + 1e-9 * std::max(1.0, std::abs(rhs))) ++domination_violations;
      }
    }
  }
};

bool oracle_call_identity(const RunRecord& rec) {
  long long sum_im1 = 0;
  long long t_final = 0;
  for (const auto& r : rec.rows) {
    if (r.t >= 1) {
      sum_im1 += r.ls_trials - 1;
      t_final = r.t;
    }
  }
  return rec.oracle_calls == 2 * t_final + sum_im1 && rec.h_exponent == sum_im1;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace

int main(int argc, char** argv) {
  const std::string cli_path = argc > 1 ? argv[1] : "";
  const double hf21 = hard_holder_constant(2, 1.0);  // 2^{3/2} * 2

  // ---- criterion 1: closed-form optimum ------------------------------------
  {
    Timer timer;
    const HardInstance inst{7, 3, 2, 0.5};
    const auto [xstar, fstar] = hard_optimum(inst);
    bool ok = std::abs(fstar - (-1.8)) <= 1e-12;
    for (int i = 0; i < inst.n; ++i) {
      const double want = std::max(0.0, static_cast<double>(inst.k - i));
      ok = ok && std::abs(xstar[i] - want) <= 1e-12;
    }
    const double gnorm = hard_gradient(inst, xstar).norm();
    ok = ok && gnorm <= 1e-12 && timer.seconds() < 1.0;
    report(1, "closed-form optimum", ok,
           fmt("f*=%.15g, |grad(x*)|=%.2e, %.2fs", fstar, gnorm, timer.seconds()));
  }

  // ---- criterion 2: Holder constant band -----------------------------------
  {
    Timer timer;
    const HardInstance inst{11, 5, 2, 1.0};
    const HardOracle oracle(inst);
    const double est = estimate_holder_constant(oracle, 1.0, 10000, 20240817);
    const bool ok = est <= hf21 && est >= 0.5 * hf21 && timer.seconds() < 10.0;
    report(2, "Holder constant band", ok,
           fmt("estimate=%.4f, band=[%.4f, %.4f], %.1fs", est, 0.5 * hf21, hf21, timer.seconds()));
  }

  // runs shared by criteria 3-6 and 10
  const HardInstance f5{11, 5, 2, 1.0};
  const HardOracle f5_oracle(f5);
  const auto space11 = MetricSpace::identity(11);
  const double f5_star = hard_optimum(f5).second;
  const SmoothnessParams known1 = SmoothnessParams::known(1.0);

  StoppingRule stop_f5;
  stop_f5.f_star = f5_star;
  stop_f5.eps = 1e-6;
  stop_f5.max_outer_iters = 100000;

  Verifier v1{&f5_oracle, &space11};
  Verifier v2{&f5_oracle, &space11};
  Verifier v3{&f5_oracle, &space11};
  Verifier v4{&f5_oracle, &space11};
  v3.accelerated = v4.accelerated = true;
  v3.check_psi = v4.check_psi = true;

  RunHooks h1, h2, h3, h4;
  h1.on_accept = [&](const IterationEvent& ev) { v1(ev); };
  h2.on_accept = [&](const IterationEvent& ev) { v2(ev); };
  h3.on_accept = [&](const IterationEvent& ev) { v3(ev); };
  h4.on_accept = [&](const IterationEvent& ev) { v4(ev); };

  Timer timer_runs;
  const double m_basic = fixed_regularization_constant(1.0, hf21, 0.1, 2);
  const double m_accel = (2.0 + 1.0 - 1.0) * (hf21 + 0.1 * factorial(1));
  const auto rec1 =
      run_tensor(f5_oracle, space11, known1, m_basic, Vector::Zero(11), stop_f5, {}, h1);
  const auto rec2 =
      run_adaptive_tensor(f5_oracle, space11, known1, 1.0, Vector::Zero(11), stop_f5, {}, h2);
  const auto rec3 =
      run_accelerated(f5_oracle, space11, known1, m_accel, Vector::Zero(11), stop_f5, {}, h3);
  const auto rec4 =
      run_adaptive_accelerated(f5_oracle, space11, known1, 1.0, Vector::Zero(11), stop_f5, {}, h4);
  const double runs_seconds = timer_runs.seconds();

  // ---- criterion 3: certificates on full runs -------------------------------
  {
    const bool all_converged =
        rec1.converged() && rec2.converged() && rec3.converged() && rec4.converged();
    const int certs =
        v1.cert_violations + v2.cert_violations + v3.cert_violations + v4.cert_violations;
    const int descents = v1.descent_violations + v2.descent_violations + v3.descent_violations +
                         v4.descent_violations;
    const int events = v1.events + v2.events + v3.events + v4.events;
    const bool ok = all_converged && certs == 0 && descents == 0 && runs_seconds < 30.0;
    report(3, "certificates on full runs", ok,
           fmt("%d accepted steps, %d cert / %d descent violations, %.1fs", events, certs,
               descents, runs_seconds));
  }

  // ---- criterion 4: oracle-call identity -------------------------------------
  {
    const bool ok = oracle_call_identity(rec2) && oracle_call_identity(rec4);
    report(4, "oracle-call identity", ok,
           fmt("alg2: O_T=%lld T=%d, alg4: O_T=%lld T=%d", rec2.oracle_calls, rec2.rows.back().t,
               rec4.oracle_calls, rec4.rows.back().t));
  }

  // ---- criterion 5: line-search caps -----------------------------------------
  bool small_h0_identity_ok = true;
  {
    const double cap2 = 2.0 * std::max(1.5 * hf21, 3.0 * 0.1 * factorial(1));
    const double cap4 = 2.0 * (2.0 + 1.0 - 1.0) * (hf21 + 0.1 * factorial(1));
    // H0 = 1e-3 forces the doubling search through the acceptance threshold
    const auto low2 =
        run_adaptive_tensor(f5_oracle, space11, known1, 1e-3, Vector::Zero(11), stop_f5);
    const auto low4 =
        run_adaptive_accelerated(f5_oracle, space11, known1, 1e-3, Vector::Zero(11), stop_f5);
    small_h0_identity_ok = oracle_call_identity(low2) && oracle_call_identity(low4);
    double worst2 = 0.0, worst4 = 0.0;
    for (const auto& r : rec2.rows) {
      if (r.t >= 1) worst2 = std::max(worst2, r.h_coeff);
    }
    for (const auto& r : low2.rows) {
      if (r.t >= 1) worst2 = std::max(worst2, r.h_coeff);
    }
    for (const auto& r : rec4.rows) {
      if (r.t >= 1) worst4 = std::max(worst4, r.h_coeff);
    }
    for (const auto& r : low4.rows) {
      if (r.t >= 1) worst4 = std::max(worst4, r.h_coeff);
    }
    const bool ok = low2.converged() && low4.converged() && worst2 <= cap2 * (1.0 + 1e-12) &&
                    worst4 <= cap4 * (1.0 + 1e-12);
    report(5, "line-search caps", ok,
           fmt("alg2 max=%.4f<=%.4f, alg4 max=%.4f<=%.4f", worst2, cap2, worst4, cap4));
  }

  // ---- criterion 6: estimating-sequence inequalities -------------------------
  {
    const int psi = v3.psi_violations + v4.psi_violations;
    const int dom = v3.domination_violations + v4.domination_violations;
    const bool ok = psi == 0 && dom == 0 && (v3.events + v4.events) > 0;
    report(6, "estimating-sequence bounds", ok,
           fmt("%d iterations checked, %d psi / %d domination violations", v3.events + v4.events,
               psi, dom));
  }

  // ---- criterion 7: empirical rates ------------------------------------------
  bool rate_identity_ok = true;
  {
    Timer timer;
    StoppingRule stop_rate;
    stop_rate.f_star = f5_star;
    stop_rate.eps = 1e-8;
    stop_rate.max_outer_iters = 2000000;
    const Vector far_start = Vector::Ones(11) * -100.0;
    const auto rate2 = run_adaptive_tensor(f5_oracle, space11, known1, 1.0, far_start, stop_rate);
    const auto rate4 =
        run_adaptive_accelerated(f5_oracle, space11, known1, 1.0, far_start, stop_rate);
    rate_identity_ok = oracle_call_identity(rate2) && oracle_call_identity(rate4);
    const auto fit2 = bench::fit_rate(rate2);
    const auto fit4 = bench::fit_rate(rate4);
    bool ok = rate2.converged() && rate4.converged() && fit2.has_value() && fit4.has_value();
    std::string detail = "fit unavailable";
    if (ok) {
      ok = fit2->exponent >= 1.7 && fit2->r_squared >= 0.9 && fit4->exponent >= 2.7 &&
           fit4->r_squared >= 0.9;
      detail = fmt("alg2 exp=%.2f r2=%.3f, alg4 exp=%.2f r2=%.3f, %.1fs", fit2->exponent,
                   fit2->r_squared, fit4->exponent, fit4->r_squared, timer.seconds());
    }
    ok = ok && timer.seconds() < 60.0;
    report(7, "empirical rates", ok, detail);
  }

  // ---- criterion 8: universality ----------------------------------------------
  bool universal_identity_ok = true;
  {
    const HardInstance f4{7, 4, 2, 0.5};
    const HardOracle oracle(f4);
    const auto space7 = MetricSpace::identity(7);
    StoppingRule stop;
    stop.f_star = hard_optimum(f4).second;
    stop.eps = 1e-4;
    stop.max_outer_iters = 500000;

    Verifier u2{&oracle, &space7};
    Verifier u4{&oracle, &space7};
    u4.accelerated = true;
    RunHooks uh2, uh4;
    uh2.on_accept = [&](const IterationEvent& ev) { u2(ev); };
    uh4.on_accept = [&](const IterationEvent& ev) { u4(ev); };

    const auto urec2 = run_adaptive_tensor(oracle, space7, SmoothnessParams::universal(), 1.0,
                                           Vector::Zero(7), stop, {}, uh2);
    const auto urec4 = run_adaptive_accelerated(oracle, space7, SmoothnessParams::universal(), 1.0,
                                                Vector::Zero(7), stop, {}, uh4);
    universal_identity_ok = oracle_call_identity(urec2) && oracle_call_identity(urec4);
    const int viol =
        u2.cert_violations + u2.descent_violations + u4.cert_violations + u4.descent_violations;
    const bool ok = urec2.converged() && urec4.converged() && viol == 0;
    report(8, "universal mode (alpha=1)", ok,
           fmt("alg2 T=%d, alg4 T=%d, %d violations", urec2.rows.back().t, urec4.rows.back().t,
               viol));
  }

  // the identity must hold on every adaptive run of this suite
  if (!(rate_identity_ok && universal_identity_ok && small_h0_identity_ok)) {
    report(4, "oracle-call identity (aux)", false, "identity failed on criterion-5/7/8 runs");
  }

  // ---- criterion 9: lower-bound consistency -----------------------------------
  {
    Timer timer;
    const HardInstance f11{11, 11, 2, 1.0};
    const HardOracle oracle(f11);
    StoppingRule stop;
    stop.f_star = hard_optimum(f11).second;
    stop.eps = 1e-12;
    stop.max_outer_iters = 5;

    const double c21 = std::pow(2.0, 6.0) * 6.0 / (std::pow(3.0, 1.5) * 2.0);
    bool ok = std::abs(c21 - 36.9504) <= 1e-3;

    std::vector<RunRecord> recs;
    recs.push_back(run_tensor(oracle, space11, known1, m_basic, Vector::Zero(11), stop));
    recs.push_back(run_adaptive_tensor(oracle, space11, known1, 1.0, Vector::Zero(11), stop));
    recs.push_back(run_accelerated(oracle, space11, known1, m_accel, Vector::Zero(11), stop));
    recs.push_back(run_adaptive_accelerated(oracle, space11, known1, 1.0, Vector::Zero(11), stop));

    double worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& rec : recs) {
      double running_min = std::numeric_limits<double>::infinity();
      for (const auto& row : rec.rows) {
        if (row.t < 1 || row.t > 5) continue;
        running_min = std::min(running_min, row.residual);
        const int k = 2 * row.t + 1;
        const double dist = std::sqrt(k * (k + 1.0) * (2.0 * k + 1.0) / 6.0);
        const double env = lower_bound_envelope(2, 1.0, row.t, dist, hf21);
        worst_margin = std::min(worst_margin, running_min / env);
        if (running_min < env) ok = false;
      }
    }
    ok = ok && timer.seconds() < 30.0;
    report(9, "lower-bound envelope", ok,
           fmt("C_{2,1}=%.4f, worst observed/envelope=%.3f, %.1fs", c21, worst_margin,
               timer.seconds()));
  }

  // ---- criterion 10: numerical kernels -----------------------------------------
  {
    detail::Rng rng(7);
    int fd_failures = 0;
    const double m_reg = 2.0 * hf21;
    for (int i = 0; i < 200; ++i) {
      // finite differences need smoothness: stay clear of the kinks
      Vector x = rng.normal_vector(11);
      const BandedDifference a{&f5};
      while (a.apply(x).cwiseAbs().minCoeff() < 0.05) x = rng.normal_vector(11);
      const Vector center = x + rng.normal_vector(11);
      const RegularizedModel model(TaylorModel(f5_oracle, center), m_reg, 1.0, space11);

      const DualVector g_hard = hard_gradient(f5, x);
      DualVector fd_hard(11), fd_omega(11);
      Vector xp = x, xm = x;
      for (int j = 0; j < 11; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        fd_hard[j] = (hard_value(f5, xp) - hard_value(f5, xm)) / (2.0 * h);
        fd_omega[j] = (model.value(xp) - model.value(xm)) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
      }
      if ((g_hard - fd_hard).norm() > 1e-6 * std::max(1.0, fd_hard.norm())) ++fd_failures;
      if ((model.gradient(x) - fd_omega).norm() > 1e-6 * std::max(1.0, fd_omega.norm()))
        ++fd_failures;
    }

    // secular vs first-order agreement on f_5 trials
    double worst_gap = 0.0;
    SubsolverOptions tight;
    tight.theta = 1e-8;
    tight.max_inner_iters = 400000;
    for (int i = 0; i < 5; ++i) {
      const Vector center = rng.normal_vector(11);
      const RegularizedModel model(TaylorModel(f5_oracle, center), 16.0, 1.0, space11);
      const auto sec = secular_solve_p2(model, tight);
      SubsolverOptions fo = tight;
      fo.mode = SubsolverMode::FirstOrder;
      const auto first = first_order_inner(model, fo);
      worst_gap = std::max(worst_gap, (sec.point - first.point).norm());
    }

    const double a_res = std::max(v3.max_a_residual, v4.max_a_residual);
    const double v_res = std::max(v3.max_argmin_residual, v4.max_argmin_residual);
    const bool ok = fd_failures == 0 && worst_gap <= 1e-6 && a_res <= 1e-12 && v_res <= 1e-9;
    report(10, "numerical kernels", ok,
           fmt("fd failures=%d, solver gap=%.2e, a_t res=%.2e, argmin res=%.2e", fd_failures,
               worst_gap, a_res, v_res));
  }

  // ---- criterion 11: determinism and the constants CLI -------------------------
  {
    using bench::json;
    const fs::path root = fs::temp_directory_path() / "tensoropt_acceptance";
    fs::remove_all(root);
    const json base{{"instance", {{"kind", "hard"}, {"n", 11}, {"k", 5}, {"p", 2}, {"nu", 1.0}}},
                    {"method", "adaptive-accelerated"},
                    {"params",
                     {{"nu_known", true},
                      {"theta", 0.1},
                      {"H0", 1.0},
                      {"eps", 1e-6},
                      {"max_outer_iters", 20000},
                      {"seed", 11}}},
                    {"output_dir", (root / "a").string()}};
    json other = base;
    other["output_dir"] = (root / "b").string();
    const auto res_a = bench::run_experiment(bench::parse_config(base));
    const auto res_b = bench::run_experiment(bench::parse_config(other));
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    const bool bytes_ok = res_a.converged && res_b.converged &&
                          slurp(res_a.trace_path) == slurp(res_b.trace_path);

    // the near-optimality ratio, through the CLI when its path is provided
    const auto tc = bench::theory_constants(2, 1.0, 0.1, hf21, 1e-6, std::nullopt, std::nullopt);
    bool ratio_ok = tc.ratio_lhs && tc.ratio_rhs && *tc.ratio_lhs <= *tc.ratio_rhs &&
                    std::abs(*tc.ratio_lhs - 100.0) < 1e-9;
    std::string cli_note = "library ratio check";
    bool exit_codes_ok = true;
    if (!cli_path.empty()) {
      const fs::path out = root / "constants.txt";
      const std::string cmd = cli_path +
                              " constants --p 2 --nu 1 --theta 0.1 --Hf 5.65685 --eps 1e-6 > " +
                              out.string();
      const int rc = std::system(cmd.c_str());
      const std::string text = slurp(out);
      ratio_ok = ratio_ok && rc == 0 && text.find("near-optimality check") != std::string::npos &&
                 text.find(": yes") != std::string::npos;
      cli_note = "cli + library ratio check";

      // invalid config (nu = 1.5) must exit with code 2
      const fs::path bad = root / "bad.json";
      {
        std::ofstream bf(bad);
        bf << R"({"instance":{"kind":"hard","n":11,"k":5,"p":2,"nu":1.5},)"
           << R"("method":"adaptive-tensor"})";
      }
      const int bad_rc = std::system((cli_path + " run " + bad.string() + " 2>/dev/null").c_str());
      exit_codes_ok = WIFEXITED(bad_rc) && WEXITSTATUS(bad_rc) == 2;
    }
    const bool ok = bytes_ok && ratio_ok && exit_codes_ok;
    report(11, "determinism + constants", ok,
           fmt("traces byte-identical=%s, ratio check=%s (%s)", bytes_ok ? "yes" : "no",
               ratio_ok ? "yes" : "no", cli_note.c_str()));
  }

  if (g_failures > 0) {
    std::printf("%d criterion check(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
