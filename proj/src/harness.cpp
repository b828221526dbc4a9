#include "fdcf/harness.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fdcf/power_model.hpp"
#include "fdcf/rng.hpp"
#include "fdcf/se_analysis.hpp"
#include "fdcf/wsee_optimizer.hpp"

namespace fdcf {

std::string ResultTable::csv() const {
  std::ostringstream os;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) os << ",";
    os << header[i];
  }
  os << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << ",";
      os << row[i];
    }
    os << "\n";
  }
  return os.str();
}

std::pair<std::uint64_t, std::uint64_t> drop_seeds(std::uint64_t master, int drop) {
  Rng r = Rng(master).fork(1000 + drop);
  std::uint64_t a = r.next_u64();
  std::uint64_t b = r.next_u64();
  return {a, b};
}

ServiceMap full_service_map(int num_aps, int num_dl, int num_ul) {
  ServiceMap map;
  std::vector<int> all_dl(num_dl), all_ul(num_ul);
  for (int k = 0; k < num_dl; ++k) all_dl[k] = k;
  for (int l = 0; l < num_ul; ++l) all_ul[l] = l;
  std::vector<int> all_aps(num_aps);
  for (int m = 0; m < num_aps; ++m) all_aps[m] = m;
  map.dl_by_ap.assign(num_aps, all_dl);
  map.ul_by_ap.assign(num_aps, all_ul);
  map.aps_by_dl.assign(num_dl, all_aps);
  map.aps_by_ul.assign(num_ul, all_aps);
  return map;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

Scenario make_drop_scenario(const SystemConfig& cfg, int drop) {
  if (cfg.unity_large_scale) return unity_scenario(cfg);
  auto [seed_layout, seed_beta] = drop_seeds(cfg.master_seed, drop);
  Layout layout = place_network(cfg.geometry, seed_layout);
  return build_scenario(layout, cfg.pathloss, cfg, seed_beta);
}

struct MeanAcc {
  double sum = 0, sum_sq = 0;
  int n = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double mean() const { return n ? sum / n : 0; }
  double stderr_of_mean() const {
    if (n < 2) return 0;
    double m = mean();
    double var = std::max(0.0, (sum_sq / n - m * m) * n / (n - 1.0));
    return std::sqrt(var / n);
  }
};

template <typename DropFn>
std::vector<std::invoke_result_t<DropFn, int>> parallel_drops(int drops, DropFn fn) {
  using R = std::invoke_result_t<DropFn, int>;
  std::vector<R> results(drops);
  unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                     static_cast<unsigned>(drops)));
  if (workers <= 1) {
    for (int d = 0; d < drops; ++d) results[d] = fn(d);
    return results;
  }
  std::vector<std::future<R>> futs;
  futs.reserve(drops);
  for (int d = 0; d < drops; ++d) futs.push_back(std::async(std::launch::async, fn, d));
  for (int d = 0; d < drops; ++d) results[d] = futs[d].get();
  return results;
}

ResultTable run_se_vs_power(const ExperimentSpec& spec, const SystemConfig& cfg) {
  ResultTable t;
  t.header = {"p_dbm", "fronthaul", "drop", "ue", "side", "se_lb", "se_ub", "se_ub_stderr",
              "status"};
  struct CaseResult {
    SEReport lb, ub;
    bool ok = true;
    std::string err;
  };
  for (double p : spec.sweep) {
    SystemConfig c = cfg;
    c.p_dl_dbm = p;
    c.p_ul_dbm = p;
    for (int fh_case = 0; fh_case < 2; ++fh_case) {
      bool perfect = (fh_case == 0);
      auto one_drop = [&, perfect](int drop) -> CaseResult {
        CaseResult r;
        try {
          Scenario scn = make_drop_scenario(c, drop);
          QuantizerParams q = perfect ? perfect_quantizer() : quantizer_params(c.quant_bits);
          ServiceMap map = perfect ? full_service_map(c.geometry.num_aps, c.geometry.num_dl,
                                                      c.geometry.num_ul)
                                   : select_aps(scn, c);
          PowerAllocation alloc = init_allocation(scn, map, q, c);
          SECoefficients coef = build_coefficients(scn, map, q, c);
          r.lb = se_lower_bounds(coef, alloc);
          std::uint64_t mc_seed = Rng(c.master_seed).fork(7000 + drop).next_u64();
          r.ub = ergodic_se_mc(scn, map, q, alloc, c, c.mc_trials, mc_seed);
        } catch (const std::exception& e) {
          r.ok = false;
          r.err = e.what();
        }
        return r;
      };
      auto results = parallel_drops(cfg.drops, one_drop);
      const std::string fh_name = perfect ? "perfect" : "limited";
      MeanAcc sum_lb, sum_ub;
      for (int d = 0; d < cfg.drops; ++d) {
        const auto& r = results[d];
        if (!r.ok) {
          t.rows.push_back({fmt(p), fh_name, std::to_string(d), "-1", "sum", "nan", "nan",
                            "nan", "infeasible"});
          continue;
        }
        for (int k = 0; k < r.lb.se_dl.size(); ++k)
          t.rows.push_back({fmt(p), fh_name, std::to_string(d), std::to_string(k), "dl",
                            fmt(r.lb.se_dl(k)), fmt(r.ub.se_dl(k)), fmt(r.ub.stderr_dl(k)),
                            "ok"});
        for (int l = 0; l < r.lb.se_ul.size(); ++l)
          t.rows.push_back({fmt(p), fh_name, std::to_string(d), std::to_string(l), "ul",
                            fmt(r.lb.se_ul(l)), fmt(r.ub.se_ul(l)), fmt(r.ub.stderr_ul(l)),
                            "ok"});
        t.rows.push_back({fmt(p), fh_name, std::to_string(d), "-1", "sum", fmt(r.lb.sum_se),
                          fmt(r.ub.sum_se), "0", "ok"});
        sum_lb.add(r.lb.sum_se);
        sum_ub.add(r.ub.sum_se);
      }
      t.rows.push_back({fmt(p), fh_name, "mean", "-1", "sum", fmt(sum_lb.mean()),
                        fmt(sum_ub.mean()), "0", "aggregate"});
      t.rows.push_back({fmt(p), fh_name, "stderr", "-1", "sum", fmt(sum_lb.stderr_of_mean()),
                        fmt(sum_ub.stderr_of_mean()), "0", "aggregate"});
    }
  }
  return t;
}

ResultTable run_wsee_vs_power(const ExperimentSpec& spec, const SystemConfig& cfg) {
  ResultTable t;
  t.header = {"p_dbm", "drop", "allocator", "wsee", "sum_se", "status"};
  std::vector<std::string> allocators =
      spec.allocators.empty() ? std::vector<std::string>{"opa", "epa1", "epa2", "rpa"}
                              : spec.allocators;
  struct DropResult {
    struct Entry {
      double wsee = 0, sum_se = 0;
      std::string status = "ok";
    };
    std::vector<Entry> entries;
    bool ok = true;
    std::string err;
  };
  for (double p : spec.sweep) {
    SystemConfig c = cfg;
    c.p_dl_dbm = p;
    c.p_ul_dbm = p;
    auto one_drop = [&](int drop) -> DropResult {
      DropResult r;
      try {
        Scenario scn = make_drop_scenario(c, drop);
        QuantizerParams q = quantizer_params(c.quant_bits);
        ServiceMap map = select_aps(scn, c);
        for (const auto& name : allocators) {
          DropResult::Entry e;
          if (name == "opa") {
            OptimizeResult opt = optimize(scn, map, q, c, c.sca_epsilon);
            e.wsee = opt.report.wsee;
            e.sum_se = opt.report.se.sum_se;
            e.status = opt.feasible ? (opt.converged ? "ok" : "maxiter") : "infeasible";
          } else {
            AllocScheme scheme = name == "epa1" ? AllocScheme::EPA1
                                : name == "epa2" ? AllocScheme::EPA2
                                                 : AllocScheme::RPA;
            std::uint64_t s = Rng(c.master_seed).fork(9000 + drop).next_u64();
            WSEEReport rep = wsee(baseline_alloc(scheme, scn, map, q, c, s), scn, map, q, c);
            e.wsee = rep.wsee;
            e.sum_se = rep.se.sum_se;
          }
          r.entries.push_back(e);
        }
      } catch (const std::exception& ex) {
        r.ok = false;
        r.err = ex.what();
      }
      return r;
    };
    auto results = parallel_drops(cfg.drops, one_drop);
    std::vector<MeanAcc> acc(allocators.size());
    for (int d = 0; d < cfg.drops; ++d) {
      if (!results[d].ok) {
        for (const auto& name : allocators)
          t.rows.push_back({fmt(p), std::to_string(d), name, "nan", "nan", "infeasible"});
        continue;
      }
      for (size_t a = 0; a < allocators.size(); ++a) {
        const auto& e = results[d].entries[a];
        t.rows.push_back(
            {fmt(p), std::to_string(d), allocators[a], fmt(e.wsee), fmt(e.sum_se), e.status});
        if (e.status != "infeasible") acc[a].add(e.wsee);
      }
    }
    for (size_t a = 0; a < allocators.size(); ++a) {
      t.rows.push_back({fmt(p), "mean", allocators[a], fmt(acc[a].mean()), "0", "aggregate"});
      t.rows.push_back(
          {fmt(p), "stderr", allocators[a], fmt(acc[a].stderr_of_mean()), "0", "aggregate"});
    }
  }
  return t;
}

ResultTable run_wsee_vs_bits(const ExperimentSpec& spec, const SystemConfig& cfg) {
  ResultTable t;
  t.header = {"nu", "drop", "wsee", "sum_se", "status"};
  struct DropResult {
    double wsee = 0, sum_se = 0;
    std::string status = "ok";
  };
  for (double nu_d : spec.sweep) {
    int nu = static_cast<int>(nu_d);
    SystemConfig c = cfg;
    c.quant_bits = nu;
    auto one_drop = [&](int drop) -> DropResult {
      DropResult r;
      try {
        Scenario scn = make_drop_scenario(c, drop);
        QuantizerParams q = quantizer_params(nu);
        ServiceMap map = select_aps(scn, c);
        OptimizeResult opt = optimize(scn, map, q, c, c.sca_epsilon);
        r.wsee = opt.report.wsee;
        r.sum_se = opt.report.se.sum_se;
        r.status = opt.feasible ? (opt.converged ? "ok" : "maxiter") : "infeasible";
      } catch (const std::exception& ex) {
        r.status = "infeasible";
        r.wsee = std::nan("");
        r.sum_se = std::nan("");
      }
      return r;
    };
    auto results = parallel_drops(cfg.drops, one_drop);
    MeanAcc acc_w, acc_s;
    for (int d = 0; d < cfg.drops; ++d) {
      const auto& r = results[d];
      t.rows.push_back({std::to_string(nu), std::to_string(d), fmt(r.wsee), fmt(r.sum_se),
                        r.status});
      if (r.status != "infeasible") {
        acc_w.add(r.wsee);
        acc_s.add(r.sum_se);
      }
    }
    t.rows.push_back({std::to_string(nu), "mean", fmt(acc_w.mean()), fmt(acc_s.mean()),
                      "aggregate"});
    t.rows.push_back({std::to_string(nu), "stderr", fmt(acc_w.stderr_of_mean()),
                      fmt(acc_s.stderr_of_mean()), "aggregate"});
  }
  return t;
}

}  // namespace

ResultTable run_experiment(const ExperimentSpec& spec, const SystemConfig& cfg) {
  if (spec.sweep.empty()) throw std::invalid_argument("run_experiment: empty sweep");
  auto errs = cfg.validate();
  if (!errs.empty()) throw std::invalid_argument("run_experiment: invalid config: " + errs.front());
  ResultTable t;
  switch (spec.kind) {
    case ExperimentKind::SeVsPower:
      t = run_se_vs_power(spec, cfg);
      break;
    case ExperimentKind::WseeVsPower:
      t = run_wsee_vs_power(spec, cfg);
      break;
    case ExperimentKind::WseeVsBits:
      t = run_wsee_vs_bits(spec, cfg);
      break;
  }
  if (!spec.out_path.empty()) {
    std::ofstream out(spec.out_path);
    if (!out) throw std::runtime_error("run_experiment: cannot write " + spec.out_path);
    out << t.csv();
  }
  return t;
}

MomentCheckResult validate_moments(int num_scenarios, int trials, std::uint64_t seed) {
  MomentCheckResult res;
  struct ScenarioResult {
    int comparisons = 0, failures = 0;
    double max_abs_z = 0;
    std::vector<std::string> messages;
  };
  auto one = [&](int s) -> ScenarioResult {
    ScenarioResult sr;
    Rng rng = Rng(seed).fork(s);
    SystemConfig cfg;
    cfg.geometry.num_aps = 1 + static_cast<int>(rng.uniform() * 4);
    cfg.geometry.num_dl = 1 + static_cast<int>(rng.uniform() * 4);
    cfg.geometry.num_ul = 1 + static_cast<int>(rng.uniform() * 4);
    cfg.n_tx = cfg.n_rx = 1 + static_cast<int>(rng.uniform() * 2);
    cfg.tau_t_dl = std::max(4, cfg.geometry.num_dl);
    cfg.tau_t_ul = std::max(4, cfg.geometry.num_ul);
    cfg.quant_bits = 1 + static_cast<int>(rng.uniform() * 4);
    cfg.c_fronthaul_bps = rng.uniform() < 0.5 ? 10e6 : 100e6;
    double p = rng.uniform(0.0, 30.0);
    cfg.p_dl_dbm = p;
    cfg.p_ul_dbm = p;
    cfg.master_seed = rng.next_u64();

    Layout layout = place_network(cfg.geometry, rng.next_u64());
    Scenario scn = build_scenario(layout, cfg.pathloss, cfg, rng.next_u64());
    QuantizerParams q = quantizer_params(cfg.quant_bits);
    ServiceMap map = select_aps(scn, cfg);
    PowerAllocation alloc = baseline_alloc(AllocScheme::RPA, scn, map, q, cfg, rng.next_u64());

    MomentTable table = moment_table(scn, map, q, alloc, cfg, trials, rng.next_u64());
    auto check = [&](LinkSide side, int ue, MomentTerm term, const char* name) {
      const auto& e = table.at(side, ue, term);
      ++sr.comparisons;
      double err = std::fabs(e.mc - e.closed_form);
      double tol = 3.0 * e.mc_stderr + 1e-12 * std::max(1.0, std::fabs(e.closed_form));
      double z = e.mc_stderr > 0 ? (e.mc - e.closed_form) / e.mc_stderr : 0.0;
      sr.max_abs_z = std::max(sr.max_abs_z, std::fabs(z));
      if (err > tol) {
        ++sr.failures;
        std::ostringstream os;
        os << "scenario " << s << " " << (side == LinkSide::Downlink ? "dl" : "ul") << " ue "
           << ue << " " << name << ": closed " << e.closed_form << " mc " << e.mc << " stderr "
           << e.mc_stderr << " (z=" << z << ")";
        sr.messages.push_back(os.str());
      }
    };
    for (int k = 0; k < cfg.geometry.num_dl; ++k) {
      check(LinkSide::Downlink, k, MomentTerm::DS, "DS");
      check(LinkSide::Downlink, k, MomentTerm::BU, "BU");
      check(LinkSide::Downlink, k, MomentTerm::MUI, "MUI");
      check(LinkSide::Downlink, k, MomentTerm::UDI, "UDI");
      check(LinkSide::Downlink, k, MomentTerm::TQD, "TQD");
      check(LinkSide::Downlink, k, MomentTerm::N, "N");
    }
    for (int l = 0; l < cfg.geometry.num_ul; ++l) {
      check(LinkSide::Uplink, l, MomentTerm::DS, "DS");
      check(LinkSide::Uplink, l, MomentTerm::BU, "BU");
      check(LinkSide::Uplink, l, MomentTerm::MUI, "MUI");
      check(LinkSide::Uplink, l, MomentTerm::RI, "RI");
      check(LinkSide::Uplink, l, MomentTerm::TQD, "TQD");
      check(LinkSide::Uplink, l, MomentTerm::N, "N");
    }
    return sr;
  };
  auto results = parallel_drops(num_scenarios, one);
  for (const auto& sr : results) {
    res.comparisons += sr.comparisons;
    res.failures += sr.failures;
    res.max_abs_z = std::max(res.max_abs_z, sr.max_abs_z);
    res.failure_messages.insert(res.failure_messages.end(), sr.messages.begin(),
                                sr.messages.end());
  }
  return res;
}

}  // namespace fdcf
