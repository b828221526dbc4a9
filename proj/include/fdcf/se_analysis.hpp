#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fdcf/allocation.hpp"
#include "fdcf/channel.hpp"
#include "fdcf/config.hpp"
#include "fdcf/fronthaul.hpp"
#include "fdcf/scenario.hpp"

namespace fdcf {

// Closed-form SINR coefficients. Sums run over the service sets carried in
// `map`; entries on unserved pairs are never read.
struct SECoefficients {
  double tau_f = 0;
  double rho_dl = 0, rho_ul = 0;
  int n_tx = 0;
  Eigen::MatrixXd a_dl;               // M x K_d     A^d_mk = a~ N_t sqrt(rho_d) gamma
  std::vector<Eigen::MatrixXd> b_dl;  // per k, M x K_d   B^d_kmq = b~ N_t rho_d beta_mk gamma_mq
  Eigen::MatrixXd d_dl;               // K_d x K_u   D^d_kl = rho_u beta~_kl
  Eigen::VectorXd a_ul;               // K_u         A^u_l
  Eigen::MatrixXd b_ul;               // K_u x K_u   B^u_lq
  std::vector<Eigen::MatrixXd> d_ul;  // per l, M x K_d   D^u_lik
  Eigen::VectorXd e_ul, f_ul;         // K_u
  Eigen::MatrixXd eq2_coef;           // M x K_d, b~ gamma_dl (transmit-power rows)
  Eigen::MatrixXd gamma_dl;           // M x K_d (consumed-power rows)
  ServiceMap map;
};

SECoefficients build_coefficients(const Scenario& scn, const ServiceMap& map,
                                  const QuantizerParams& q, const SystemConfig& cfg);

// Theorem-1 lower bounds, bits/s/Hz. The downlink transmit-power constraint
// is checked, not assumed.
double se_downlink_lb(const SECoefficients& coef, const PowerAllocation& alloc, int k);
double se_uplink_lb(const SECoefficients& coef, const PowerAllocation& alloc, int l);

struct SEReport {
  Eigen::VectorXd se_dl, se_ul;
  double sum_se = 0;
  Eigen::VectorXd stderr_dl, stderr_ul;  // zero for closed-form evaluations
};

SEReport se_lower_bounds(const SECoefficients& coef, const PowerAllocation& alloc);

// Genie-CSI ergodic estimate: the coherent combined channel is known per
// realization, interference enters at its per-realization power, quantization
// distortion as additive Gaussian with the model variance laws.
SEReport ergodic_se_mc(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                       const PowerAllocation& alloc, const SystemConfig& cfg, int trials,
                       std::uint64_t seed);

enum class MomentTerm { DS, BU, MUI, UDI, RI, TQD, N };
enum class LinkSide { Downlink, Uplink };

struct MomentEstimate {
  double closed_form = 0;
  double mc = 0;
  double mc_stderr = 0;
};

// All per-(side, ue, term) second moments from one shared set of channel
// draws. dl[k][term] / ul[l][term] indexed by static_cast<int>(MomentTerm).
struct MomentTable {
  std::vector<std::vector<MomentEstimate>> dl, ul;
  const MomentEstimate& at(LinkSide side, int ue, MomentTerm term) const;
};

MomentTable moment_table(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                         const PowerAllocation& alloc, const SystemConfig& cfg, int trials,
                         std::uint64_t seed);

// Single-term view of the table; throws on invalid (term, side) pairs
// (UDI is downlink-only, RI/N aggregates are uplink-side terms here; the
// downlink N is the unit receiver noise).
MomentEstimate moment_oracle(const Scenario& scn, const ServiceMap& map,
                             const QuantizerParams& q, const PowerAllocation& alloc,
                             const SystemConfig& cfg, MomentTerm term, LinkSide side, int ue,
                             int trials, std::uint64_t seed);

// Per-AP statistical power of the MRC output (ghat^u_ml)^H y_m entering the
// uplink distortion law; exposed for the oracle tests.
double ul_mrc_output_power(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                           const PowerAllocation& alloc, const SystemConfig& cfg, int m, int l);

// CSV rows "ue_id,side,se_lb,se_ub,stderr"; ub entries are blank when no
// Monte-Carlo estimate accompanies the bound.
std::string se_report_csv(const SEReport& lb, const SEReport* ub = nullptr);

}  // namespace fdcf
