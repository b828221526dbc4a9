#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdcf/config.hpp"
#include "fdcf/fronthaul.hpp"
#include "fdcf/scenario.hpp"

namespace fdcf {

enum class ExperimentKind { SeVsPower, WseeVsPower, WseeVsBits };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::SeVsPower;
  std::vector<double> sweep;           // transmit power dBm, or quantizer bits
  std::vector<std::string> allocators;  // subset of {opa, epa1, epa2, rpa}
  std::string out_path;                // empty: don't write a file
};

struct ResultTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string csv() const;
};

// Sweep x drops driver. Drops run in parallel; rows and aggregates are
// emitted in deterministic order, and a fixed master seed reproduces the
// CSV byte-for-byte. Per-drop infeasibility becomes a flagged row.
ResultTable run_experiment(const ExperimentSpec& spec, const SystemConfig& cfg);

// Scenario/layout seeds for one drop, shared by every sweep point so sweeps
// are paired per drop.
std::pair<std::uint64_t, std::uint64_t> drop_seeds(std::uint64_t master, int drop);

// Every-AP-serves-every-UE map (unconstrained fronthaul).
ServiceMap full_service_map(int num_aps, int num_dl, int num_ul);

// Appendix-style executable check: on random small scenarios, every
// closed-form moment family must match its Monte-Carlo estimate within
// 3 standard errors.
struct MomentCheckResult {
  int comparisons = 0;
  int failures = 0;
  double max_abs_z = 0;
  std::vector<std::string> failure_messages;
  bool passed() const { return failures == 0; }
};

MomentCheckResult validate_moments(int num_scenarios, int trials, std::uint64_t seed);

}  // namespace fdcf
