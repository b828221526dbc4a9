#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fdcf/config.hpp"
#include "fdcf/scenario.hpp"

namespace fdcf {

// Bussgang model of the optimal uniform quantizer: output = gain * input +
// distortion, distortion power (b - a^2) * input power.
struct QuantizerParams {
  int bits = 0;             // nu, per real dimension
  double gain = 1.0;        // a~
  double second_moment = 1.0;  // b~
  double step = 0.0;        // MSE-optimal step for unit-variance Gaussian input
  double distortion() const { return second_moment - gain * gain; }
};

// Computed at startup from the mid-rise quantizer with 2^nu levels; throws
// outside the supported 1..8 range.
QuantizerParams quantizer_params(int bits);

// High-capacity fronthaul limit a~ = b~ = 1.
QuantizerParams perfect_quantizer();

// E{x h(x)} and E{h(x)^2} for step delta (exact Gaussian bin integrals);
// exposed so tests can probe the step-size optimality.
std::pair<double, double> quantizer_moments(int bits, double step);

// AP <-> UE association under the fronthaul limit. kappa lists are kept
// sorted ascending; both directions stay mutually consistent.
struct ServiceMap {
  std::vector<std::vector<int>> dl_by_ap;  // kappa_dm
  std::vector<std::vector<int>> ul_by_ap;  // kappa_um
  std::vector<std::vector<int>> aps_by_dl;  // M^d_k
  std::vector<std::vector<int>> aps_by_ul;  // M^u_l

  int num_aps() const { return static_cast<int>(dl_by_ap.size()); }
  int dl_count(int m) const { return static_cast<int>(dl_by_ap[m].size()); }
  int ul_count(int m) const { return static_cast<int>(ul_by_ap[m].size()); }
  bool serves_dl(int m, int k) const;
  bool serves_ul(int m, int l) const;
};

// Lemma-1 limit: floor(C_fh T_c / (4 (tau_c - tau_t) nu)), same for both
// directions. Returns (K_um_bar, K_dm_bar); 0 means the capacity cannot
// carry even one UE.
std::pair<int, int> max_ues_per_ap(const SystemConfig& cfg);

// R_fh = 2 nu (K_dm + K_um) (tau_c - tau_t) / T_c, bits/s.
double fronthaul_rate(int dl_count, int ul_count, int bits, const SystemConfig& cfg);

// Gain-greedy per-AP selection followed by the orphan-rescue pass. Throws if
// some UE cannot be placed anywhere.
ServiceMap select_aps(const Scenario& scn, const SystemConfig& cfg);

// Diagnostic text dump, one line per AP.
std::string dump(const ServiceMap& map);

}  // namespace fdcf
