#pragma once

#include <Eigen/Dense>

#include "fdcf/allocation.hpp"
#include "fdcf/config.hpp"
#include "fdcf/fronthaul.hpp"
#include "fdcf/scenario.hpp"
#include "fdcf/se_analysis.hpp"

namespace fdcf {

// Fixed per-UE power consumed by the APs: fixed fronthaul + transceiver
// chains + traffic-dependent fronthaul share, averaged over the K UEs.
double p_fix(const SystemConfig& cfg, const ServiceMap& map);

struct UePowers {
  Eigen::VectorXd dl;  // p^d_k, W
  Eigen::VectorXd ul;  // p^u_l, W
};

UePowers ue_powers(const PowerAllocation& alloc, const Scenario& scn, const ServiceMap& map,
                   const SystemConfig& cfg);

struct WSEEReport {
  Eigen::VectorXd ee_dl, ee_ul;  // bits per joule
  Eigen::VectorXd p_dl, p_ul;    // consumed power, W
  double wsee = 0;
  SEReport se;
};

// Per-UE EE = B * SE_lb / p, weighted sum across all UEs. Throws on a
// zero-power UE.
WSEEReport wsee(const PowerAllocation& alloc, const Scenario& scn, const ServiceMap& map,
                const QuantizerParams& q, const SystemConfig& cfg);

// Same, with prebuilt coefficients (the optimizer calls this per iterate).
WSEEReport wsee(const PowerAllocation& alloc, const Scenario& scn, const ServiceMap& map,
                const SECoefficients& coef, const SystemConfig& cfg);

// CSV rows "ue_id,side,ee,power,weight" followed by a scalar summary line.
std::string wsee_csv(const WSEEReport& report, const SystemConfig& cfg);

}  // namespace fdcf
