// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fdcf/harness.hpp"
#include "fdcf/power_model.hpp"
#include "fdcf/rng.hpp"
#include "fdcf/se_analysis.hpp"
#include "fdcf/solver_selftest.hpp"
#include "fdcf/wsee_optimizer.hpp"
#include "quantizer_oracle.hpp"

using namespace fdcf;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool pass;
  std::string detail;
  double seconds;
};

std::vector<Criterion> g_results;

template <typename Fn>
void run_criterion(int id, const std::string& name, Fn fn) {
  auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = fn();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  g_results.push_back({id, name, pass, detail, secs});
  std::printf("[%s] criterion %d: %s (%.1fs) %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              secs, detail.c_str());
  std::fflush(stdout);
}

SystemConfig desk_config() {
  SystemConfig cfg;
  cfg.geometry = {1.0, 8, 4, 4};
  cfg.tau_t_dl = 4;
  cfg.tau_t_ul = 4;
  cfg.p_dl_dbm = 30.0;
  cfg.p_ul_dbm = 30.0;
  cfg.quant_bits = 2;
  return cfg;
}

template <typename Fn>
auto over_drops(int drops, Fn fn) {
  using R = std::invoke_result_t<Fn, int>;
  std::vector<std::future<R>> futs;
  for (int d = 0; d < drops; ++d) futs.push_back(std::async(std::launch::async, fn, d));
  std::vector<R> out;
  for (auto& f : futs) out.push_back(f.get());
  return out;
}

// ---- criterion 1: Appendix-style moment oracles -----------------------

std::pair<bool, std::string> criterion1() {
  MomentCheckResult r = validate_moments(20, 100000, 20260810);
  std::ostringstream os;
  os << r.comparisons << " comparisons, max |z| = " << r.max_abs_z;
  if (!r.passed()) {
    os << "; failures:";
    for (size_t i = 0; i < r.failure_messages.size() && i < 4; ++i)
      os << " | " << r.failure_messages[i];
  }
  return {r.passed(), os.str()};
}

// ---- criterion 2: LB below genie UB, limited below perfect ------------

std::pair<bool, std::string> criterion2() {
  SystemConfig cfg;
  cfg.geometry = {1.0, 32, 10, 10};
  cfg.tau_t_dl = 10;
  cfg.tau_t_ul = 10;
  cfg.unity_large_scale = true;
  cfg.quant_bits = 2;
  cfg.c_fronthaul_bps = 10e6;
  const int trials = 2500;
  bool pass = true;
  std::ostringstream os;
  for (double p : {0.0, 10.0, 20.0, 30.0}) {
    SystemConfig c = cfg;
    c.p_dl_dbm = p;
    c.p_ul_dbm = p;
    Scenario scn = unity_scenario(c);
    double sum_lb_perfect = 0, sum_lb_limited = 0;
    double sum_ub_perfect = 0, sum_ub_limited = 0;
    for (int fh = 0; fh < 2; ++fh) {
      bool perfect = (fh == 0);
      QuantizerParams q = perfect ? perfect_quantizer() : quantizer_params(c.quant_bits);
      ServiceMap map = perfect ? full_service_map(32, 10, 10) : select_aps(scn, c);
      PowerAllocation alloc = init_allocation(scn, map, q, c);
      SECoefficients coef = build_coefficients(scn, map, q, c);
      SEReport lb = se_lower_bounds(coef, alloc);
      SEReport ub = ergodic_se_mc(scn, map, q, alloc, c, trials,
                                  Rng(33).fork(static_cast<int>(p) * 2 + fh).next_u64());
      for (int k = 0; k < 10; ++k)
        if (lb.se_dl(k) > ub.se_dl(k) + 3 * ub.stderr_dl(k)) {
          pass = false;
          os << " [p=" << p << (perfect ? " perfect" : " limited") << " dl" << k << ": lb "
             << lb.se_dl(k) << " > ub " << ub.se_dl(k) << " + 3x" << ub.stderr_dl(k) << "]";
        }
      for (int l = 0; l < 10; ++l)
        if (lb.se_ul(l) > ub.se_ul(l) + 3 * ub.stderr_ul(l)) {
          pass = false;
          os << " [p=" << p << (perfect ? " perfect" : " limited") << " ul" << l << "]";
        }
      (perfect ? sum_lb_perfect : sum_lb_limited) = lb.sum_se;
      (perfect ? sum_ub_perfect : sum_ub_limited) = ub.sum_se;
    }
    if (!(sum_lb_limited < sum_lb_perfect)) {
      pass = false;
      os << " [p=" << p << ": limited LB sum " << sum_lb_limited << " !< perfect "
         << sum_lb_perfect << "]";
    }
    if (!(sum_ub_limited < sum_ub_perfect)) {
      pass = false;
      os << " [p=" << p << ": limited UB sum not below perfect]";
    }
    os << " p=" << p << ": sumLB " << sum_lb_limited << "/" << sum_lb_perfect << ";";
  }
  return {pass, os.str()};
}

// ---- criterion 3: quantizer parameters vs the independent oracle ------

std::pair<bool, std::string> criterion3() {
  fdcf_test::GlQuantizerOracle oracle;
  bool pass = true;
  std::ostringstream os;
  double max_gap = 0;
  for (int nu = 1; nu <= 8; ++nu) {
    QuantizerParams q = quantizer_params(nu);
    QuantizerParams ref = oracle.optimal(nu);
    double gap_a = std::fabs(q.gain - ref.gain);
    double gap_d = std::fabs(q.distortion() - ref.distortion());
    max_gap = std::max({max_gap, gap_a, gap_d});
    if (gap_a > 1e-4 || gap_d > 1e-4) {
      pass = false;
      os << " [nu=" << nu << ": gain gap " << gap_a << ", distortion gap " << gap_d << "]";
    }
  }
  double one_bit_err = std::fabs(quantizer_params(1).gain - 2.0 / std::numbers::pi);
  if (one_bit_err > 1e-6) {
    pass = false;
    os << " [one-bit gain off 2/pi by " << one_bit_err << "]";
  }
  os << " max oracle gap " << max_gap << ", one-bit error " << one_bit_err;
  return {pass, os.str()};
}

// ---- criterion 4: Lemma-1 arithmetic -----------------------------------

std::pair<bool, std::string> criterion4() {
  SystemConfig cfg;
  cfg.tau_c = 200;
  cfg.tau_t_dl = 10;
  cfg.tau_t_ul = 10;
  cfg.t_coherence_s = 1e-3;
  cfg.quant_bits = 2;
  cfg.c_fronthaul_bps = 100e6;
  int a = max_ues_per_ap(cfg).second;
  cfg.c_fronthaul_bps = 10e6;
  int b = max_ues_per_ap(cfg).second;
  bool pass = (a == 69) && (b == 6);
  std::ostringstream os;
  os << "100 Mbps -> " << a << " (want 69), 10 Mbps -> " << b << " (want 6)";
  return {pass, os.str()};
}

// ---- criteria 5 and 6: SCA behavior and baseline dominance ------------

struct ScaDropResult {
  bool feasible = false, converged = false, monotone = true, constraints_ok = true;
  int iters = 0;
  double final_residue = 0;
  double wsee_opa = 0, wsee_epa1 = 0, wsee_epa2 = 0, wsee_rpa = 0;
  std::string note;
};

ScaDropResult run_sca_drop(int drop) {
  ScaDropResult r;
  SystemConfig cfg = desk_config();
  auto [seed_layout, seed_beta] = drop_seeds(cfg.master_seed, drop);
  Layout layout = place_network(cfg.geometry, seed_layout);
  Scenario scn = build_scenario(layout, cfg.pathloss, cfg, seed_beta);
  QuantizerParams q = quantizer_params(cfg.quant_bits);
  ServiceMap map = select_aps(scn, cfg);
  SECoefficients coef = build_coefficients(scn, map, q, cfg);

  OptimizeResult opt = optimize(scn, map, q, cfg, 1e-3);
  r.feasible = opt.feasible;
  r.converged = opt.converged;
  r.iters = static_cast<int>(opt.trace.size());
  if (!opt.trace.empty()) r.final_residue = opt.trace.back().residue;
  for (size_t i = 1; i < opt.trace.size(); ++i)
    if (opt.trace[i].objective < opt.trace[i - 1].objective - 1e-5) {
      r.monotone = false;
      std::ostringstream os;
      os << "objective drop at iter " << opt.trace[i].iteration << " ("
         << opt.trace[i - 1].objective << " -> " << opt.trace[i].objective << ")";
      r.note = os.str();
    }

  // Final allocation against the original constraint families, 1e-6.
  const PowerAllocation& a = opt.alloc;
  for (int m = 0; m < map.num_aps(); ++m) {
    double load = 0;
    for (int k : map.dl_by_ap[m])
      load += q.second_moment * scn.gamma_dl(m, k) * a.c(m, k) * a.c(m, k);
    if (load > 1.0 / cfg.n_tx + 1e-6) r.constraints_ok = false;
  }
  for (int l = 0; l < 4; ++l)
    if (a.theta(l) < -1e-6 || a.theta(l) > 1.0 + 1e-6) r.constraints_ok = false;
  if ((a.c.array() < -1e-6).any()) r.constraints_ok = false;
  for (int k = 0; k < 4; ++k)
    if (se_downlink_lb(coef, a, k) < cfg.qos_dl_bits - 1e-6) r.constraints_ok = false;
  for (int l = 0; l < 4; ++l)
    if (se_uplink_lb(coef, a, l) < cfg.qos_ul_bits - 1e-6) r.constraints_ok = false;

  r.wsee_opa = opt.report.wsee;
  r.wsee_epa1 = wsee(baseline_alloc(AllocScheme::EPA1, scn, map, q, cfg, 1), scn, map, q, cfg).wsee;
  r.wsee_epa2 = wsee(baseline_alloc(AllocScheme::EPA2, scn, map, q, cfg, 1), scn, map, q, cfg).wsee;
  r.wsee_rpa =
      wsee(baseline_alloc(AllocScheme::RPA, scn, map, q, cfg, 4000 + drop), scn, map, q, cfg).wsee;
  return r;
}

std::vector<ScaDropResult> g_sca_drops;

std::pair<bool, std::string> criterion5() {
  g_sca_drops = over_drops(10, run_sca_drop);
  bool pass = true;
  std::ostringstream os;
  int worst_iters = 0;
  for (int d = 0; d < 10; ++d) {
    const auto& r = g_sca_drops[d];
    worst_iters = std::max(worst_iters, r.iters);
    if (!r.feasible || !r.converged || !r.monotone || !r.constraints_ok ||
        r.final_residue > 1e-3 || r.iters > 100) {
      pass = false;
      os << " [drop " << d << ": feas=" << r.feasible << " conv=" << r.converged
         << " mono=" << r.monotone << " cons=" << r.constraints_ok << " res=" << r.final_residue
         << " iters=" << r.iters << " " << r.note << "]";
    }
  }
  os << " worst iteration count " << worst_iters;
  return {pass, os.str()};
}

std::pair<bool, std::string> criterion6() {
  if (g_sca_drops.empty()) g_sca_drops = over_drops(10, run_sca_drop);
  bool pass = true;
  std::ostringstream os;
  double min_margin = 1e300;
  for (int d = 0; d < 10; ++d) {
    const auto& r = g_sca_drops[d];
    double best_baseline = std::max({r.wsee_epa1, r.wsee_epa2, r.wsee_rpa});
    min_margin = std::min(min_margin, r.wsee_opa - best_baseline);
    if (r.wsee_opa < best_baseline - 1e-9) {
      pass = false;
      os << " [drop " << d << ": opa " << r.wsee_opa << " < best baseline " << best_baseline
         << "]";
    }
  }
  os << " min OPA margin over baselines " << min_margin << " bits/J";
  return {pass, os.str()};
}

// ---- criterion 7: tiny-instance grid oracle ----------------------------

std::pair<bool, std::string> criterion7() {
  SystemConfig cfg;
  cfg.geometry = {1.0, 1, 1, 1};
  cfg.tau_t_dl = 4;
  cfg.tau_t_ul = 4;
  Layout layout = place_network(cfg.geometry, 3);
  Scenario scn = build_scenario(layout, cfg.pathloss, cfg, 4);
  QuantizerParams q = quantizer_params(cfg.quant_bits);
  ServiceMap map = select_aps(scn, cfg);
  SECoefficients coef = build_coefficients(scn, map, q, cfg);

  double eta_max = 1.0 / (q.second_moment * cfg.n_tx * scn.gamma_dl(0, 0));
  double best = -1;
  const int steps = 1000;
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j) {
      PowerAllocation a;
      a.c = Eigen::MatrixXd::Constant(1, 1, std::sqrt(eta_max * i / steps));
      a.theta = Eigen::VectorXd::Constant(1, static_cast<double>(j) / steps);
      if (se_downlink_lb(coef, a, 0) < cfg.qos_dl_bits) continue;
      if (se_uplink_lb(coef, a, 0) < cfg.qos_ul_bits) continue;
      best = std::max(best, wsee(a, scn, map, coef, cfg).wsee);
    }
  OptimizeResult r = optimize(scn, map, q, cfg, cfg.sca_epsilon);
  double rel = std::fabs(r.report.wsee - best) / best;
  std::ostringstream os;
  os << "grid " << best << " vs optimizer " << r.report.wsee << " (rel gap " << rel << ")";
  return {r.feasible && rel <= 0.01, os.str()};
}

// ---- criterion 8: quantizer-resolution endpoints ------------------------

std::pair<bool, std::string> criterion8() {
  struct PairResult {
    double se1 = 0, se4 = 0, w1 = 0, w4 = 0;
    bool ok = false;
  };
  auto run_case = [&](double c_fh) {
    auto one = [&](int drop) -> PairResult {
      PairResult pr;
      SystemConfig base = desk_config();
      base.c_fronthaul_bps = c_fh;
      auto [seed_layout, seed_beta] = drop_seeds(base.master_seed, drop);
      Layout layout = place_network(base.geometry, seed_layout);
      Scenario scn = build_scenario(layout, base.pathloss, base, seed_beta);
      for (int nu : {1, 4}) {
        SystemConfig c = base;
        c.quant_bits = nu;
        QuantizerParams q = quantizer_params(nu);
        ServiceMap map = select_aps(scn, c);
        OptimizeResult opt = optimize(scn, map, q, c, c.sca_epsilon);
        if (!opt.feasible) return pr;
        if (nu == 1) {
          pr.se1 = opt.report.se.sum_se;
          pr.w1 = opt.report.wsee;
        } else {
          pr.se4 = opt.report.se.sum_se;
          pr.w4 = opt.report.wsee;
        }
      }
      pr.ok = true;
      return pr;
    };
    return over_drops(10, one);
  };

  bool pass = true;
  std::ostringstream os;
  {
    auto res = run_case(100e6);
    double se1 = 0, se4 = 0, w1 = 0, w4 = 0;
    int n = 0;
    for (const auto& r : res)
      if (r.ok) {
        se1 += r.se1;
        se4 += r.se4;
        w1 += r.w1;
        w4 += r.w4;
        ++n;
       }
    if (n == 0) pass = false;
    os << " C=100Mbps: sumSE " << se1 / n << "->" << se4 / n << ", WSEE " << w1 / n << "->"
       << w4 / n << ";";
    if (!(se4 >= se1)) {
      pass = false;
      os << " [sum-SE not nondecreasing]";
    }
    if (!(w4 <= w1)) {
      pass = false;
      os << " [WSEE not nonincreasing]";
    }
  }
  {
    auto res = run_case(10e6);
    double se1 = 0, se4 = 0, w1 = 0, w4 = 0;
    int n = 0;
    for (const auto& r : res)
      if (r.ok) {
        se1 += r.se1;
        se4 += r.se4;
        w1 += r.w1;
        w4 += r.w4;
        ++n;
      }
    if (n == 0) pass = false;
    os << " C=10Mbps: sumSE " << se1 / n << "->" << se4 / n << ", WSEE " << w1 / n << "->"
       << w4 / n;
    if (!(se4 > se1)) {
      pass = false;
      os << " [sum-SE at nu=4 not above nu=1]";
    }
    if (!(w4 > w1)) {
      pass = false;
      os << " [WSEE at nu=4 not above nu=1]";
    }
  }
  return {pass, os.str()};
}

// ---- criterion 9: solver self-test --------------------------------------

std::pair<bool, std::string> criterion9() {
  SolverSelfTest st = run_solver_selftest(100, 515151, 1e-6, 1e-8);
  std::ostringstream os;
  os << "max kkt " << st.max_kkt << ", affine instances " << st.affine_checked
     << ", max affine gap " << st.max_affine_gap;
  if (!st.passed())
    for (size_t i = 0; i < st.messages.size() && i < 4; ++i) os << " | " << st.messages[i];
  return {st.passed(), os.str()};
}

}  // namespace

int main() {
  run_criterion(1, "moment oracles agree with closed forms (3 sigma, 1e5 trials)", criterion1);
  run_criterion(2, "SE lower bound below genie upper bound; limited below perfect", criterion2);
  run_criterion(3, "quantizer constants match the independent oracle to 1e-4", criterion3);
  run_criterion(4, "fronthaul UE limit arithmetic (69 / 6)", criterion4);
  run_criterion(5, "SCA monotone, converged within 100 iterations, constraints met", criterion5);
  run_criterion(6, "optimized WSEE dominates EPA1/EPA2/RPA", criterion6);
  run_criterion(7, "tiny instance matches exhaustive grid within 1 percent", criterion7);
  run_criterion(8, "quantizer-resolution endpoints per fronthaul capacity", criterion8);
  run_criterion(9, "solver self-test: 100 programs to 1e-6, affine oracle to 1e-8", criterion9);

  int failures = 0;
  for (const auto& c : g_results)
    if (!c.pass) ++failures;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
              g_results.size());
  return failures;
}
