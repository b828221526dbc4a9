#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fdcf/config.hpp"
#include "fdcf/harness.hpp"
#include "fdcf/solver_selftest.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> drops;
  std::string out_path;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Config file (key = value with [section] headers)");
  cmd->add_option("--seed", o.seed, "Master seed override");
  cmd->add_option("--drops", o.drops, "Number of network drops");
  cmd->add_option("--out", o.out_path, "Output CSV path");
}

fdcf::SystemConfig make_config(const CommonOpts& o) {
  fdcf::SystemConfig cfg =
      o.config_path.empty() ? fdcf::SystemConfig{} : fdcf::load_config(o.config_path);
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.drops) cfg.drops = *o.drops;
  auto errs = cfg.validate();
  if (!errs.empty()) {
    std::cerr << "invalid configuration:\n";
    for (const auto& e : errs) std::cerr << "  " << e << "\n";
    throw CLI::RuntimeError(2);
  }
  return cfg;
}

int run_sweep(fdcf::ExperimentKind kind, const CommonOpts& o, const std::vector<double>& sweep,
              const std::vector<std::string>& allocators) {
  fdcf::SystemConfig cfg = make_config(o);
  fdcf::ExperimentSpec spec;
  spec.kind = kind;
  spec.sweep = sweep;
  spec.allocators = allocators;
  spec.out_path = o.out_path;
  fdcf::ResultTable t = fdcf::run_experiment(spec, cfg);
  if (o.out_path.empty()) std::cout << t.csv();
  int flagged = 0;
  for (const auto& row : t.rows)
    if (row.back() == "infeasible") ++flagged;
  if (flagged > 0)
    std::cerr << flagged << " row(s) flagged infeasible (see status column)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-duplex cell-free massive MIMO simulator and WSEE optimizer"};
  app.require_subcommand(1);

  CommonOpts se_o, wp_o, wb_o, vm_o, ss_o;
  std::vector<double> se_sweep{0, 10, 20, 30};
  std::vector<double> wp_sweep{0, 10, 20, 30};
  std::vector<double> wb_sweep{1, 2, 3, 4};
  std::vector<std::string> wp_allocs{"opa", "epa1", "epa2", "rpa"};
  int vm_scenarios = 20;
  int vm_trials = 100000;
  int ss_count = 100;

  auto* se = app.add_subcommand("se-vs-power",
                                "Sum-SE lower bound vs Monte-Carlo upper bound over transmit power");
  add_common(se, se_o);
  se->add_option("--powers", se_sweep, "Transmit powers, dBm");

  auto* wp = app.add_subcommand("wsee-vs-power", "WSEE of OPA and baselines over transmit power");
  add_common(wp, wp_o);
  wp->add_option("--powers", wp_sweep, "Transmit powers, dBm");
  wp->add_option("--allocators", wp_allocs, "Subset of opa,epa1,epa2,rpa");

  auto* wb = app.add_subcommand("wsee-vs-bits", "WSEE and sum SE over quantizer bits");
  add_common(wb, wb_o);
  wb->add_option("--bits", wb_sweep, "Quantization bit counts");

  auto* vm = app.add_subcommand("validate-moments",
                                "Closed-form moments vs Monte Carlo on random small scenarios");
  add_common(vm, vm_o);
  vm->add_option("--scenarios", vm_scenarios, "Number of random scenarios");
  vm->add_option("--trials", vm_trials, "Monte-Carlo trials per scenario");

  auto* ss = app.add_subcommand("selftest-solver", "Randomized interior-point solver self-test");
  add_common(ss, ss_o);
  ss->add_option("--count", ss_count, "Number of random programs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (se->parsed()) return run_sweep(fdcf::ExperimentKind::SeVsPower, se_o, se_sweep, {});
    if (wp->parsed()) return run_sweep(fdcf::ExperimentKind::WseeVsPower, wp_o, wp_sweep, wp_allocs);
    if (wb->parsed()) return run_sweep(fdcf::ExperimentKind::WseeVsBits, wb_o, wb_sweep, {});
    if (vm->parsed()) {
      std::uint64_t seed = vm_o.seed.value_or(1);
      if (vm_o.drops) vm_scenarios = *vm_o.drops;
      auto res = fdcf::validate_moments(vm_scenarios, vm_trials, seed);
      std::cout << "moment comparisons: " << res.comparisons << ", failures: " << res.failures
                << ", max |z|: " << res.max_abs_z << "\n";
      for (const auto& msg : res.failure_messages) std::cerr << "  " << msg << "\n";
      return res.passed() ? 0 : 1;
    }
    if (ss->parsed()) {
      std::uint64_t seed = ss_o.seed.value_or(1);
      auto res = fdcf::run_solver_selftest(ss_count, seed);
      std::cout << "programs: " << res.count << ", kkt failures: " << res.kkt_failures
                << ", max kkt: " << res.max_kkt << ", affine checked: " << res.affine_checked
                << ", affine failures: " << res.affine_failures
                << ", max affine gap: " << res.max_affine_gap << "\n";
      for (const auto& msg : res.messages) std::cerr << "  " << msg << "\n";
      return res.passed() ? 0 : 1;
    }
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
