#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fdcf {

struct GeometryConfig {
  double side_km = 1.0;  // D
  int num_aps = 8;       // M
  int num_dl = 4;        // K_d
  int num_ul = 4;        // K_u
};

// Three-slope path loss (Hata-COST231 fixed term) plus two-component
// correlated log-normal shadowing.
struct PathLossParams {
  double d0_km = 0.010;
  double d1_km = 0.050;
  double carrier_mhz = 1900.0;
  double h_ap_m = 15.0;
  double h_ue_m = 1.65;
  double sigma_sd_db = 2.0;
  double shadow_delta = 0.5;   // weight between AP-side and UE-side fields
  double d_decorr_km = 0.100;  // correlation 2^(-d/d_decorr)

  double fixed_loss_db() const {
    double lf = std::log10(carrier_mhz);
    return 46.3 + 33.9 * lf - 13.82 * std::log10(h_ap_m) -
           (1.1 * lf - 0.7) * h_ue_m + (1.56 * lf - 0.8);
  }
};

struct PowerModelParams {
  double p0_ap_w = 0.825;      // fixed fronthaul power per AP
  double p_tc_ap_w = 0.2;      // per AP antenna transceiver chain
  double p_ft_w = 10.0;        // traffic-dependent fronthaul power at capacity
  double p_tc_dl_ue_w = 0.2;
  double p_tc_ul_ue_w = 0.2;
  double alpha_ap = 0.4;       // PA efficiency at APs
  double alpha_ue = 0.4;       // PA efficiency at uplink UEs
  double bandwidth_hz = 20e6;  // B
};

struct SystemConfig {
  GeometryConfig geometry;
  PathLossParams pathloss;
  PowerModelParams power;

  // Coherence structure (samples) and duration.
  int tau_c = 200;
  int tau_t_dl = 10;
  int tau_t_ul = 10;
  double t_coherence_s = 1e-3;

  // Transmit powers; noise given in dBW.
  double p_dl_dbm = 30.0;
  double p_ul_dbm = 30.0;
  double p_pilot_w = 0.2;
  double noise_dbw = -121.4;

  int n_tx = 2;
  int n_rx = 2;

  int quant_bits = 2;            // nu, same on every fronthaul link
  double c_fronthaul_bps = 100e6;

  double gamma_ri_db = -20.0;    // residual interference power after cancellation
  double pl_ri_db = -81.1846;    // intra-AP RI path loss

  double qos_dl_bits = 0.1;      // S_ok
  double qos_ul_bits = 0.1;      // S_ol
  std::vector<double> weights_dl;  // empty => uniform 1/K
  std::vector<double> weights_ul;

  double sca_epsilon = 1e-3;
  int sca_max_iters = 100;
  double sca_margin = 1e-4;      // strict-interior shrink on initialized slacks
  double solver_tol = 1e-6;

  int mc_trials = 100000;
  int drops = 10;
  std::uint64_t master_seed = 1;

  bool unity_large_scale = false;  // validation mode: all large-scale gains 1

  int tau_t() const { return tau_t_dl + tau_t_ul; }
  double tau_f() const { return static_cast<double>(tau_c - tau_t()) / tau_c; }
  double noise_w() const { return std::pow(10.0, noise_dbw / 10.0); }
  static double dbm_to_w(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
  double p_dl_w() const { return dbm_to_w(p_dl_dbm); }
  double p_ul_w() const { return dbm_to_w(p_ul_dbm); }
  double rho_dl() const { return p_dl_w() / noise_w(); }
  double rho_ul() const { return p_ul_w() / noise_w(); }
  double rho_pilot() const { return p_pilot_w / noise_w(); }
  double gamma_ri() const { return std::pow(10.0, gamma_ri_db / 10.0); }
  double beta_ri_intra() const { return std::pow(10.0, pl_ri_db / 10.0); }
  int num_ues() const { return geometry.num_dl + geometry.num_ul; }
  double weight_dl(int k) const {
    return weights_dl.empty() ? 1.0 / num_ues() : weights_dl[k];
  }
  double weight_ul(int l) const {
    return weights_ul.empty() ? 1.0 / num_ues() : weights_ul[l];
  }

  // Empty vector means the config is valid; otherwise one message per violated
  // invariant, each naming the offending field.
  std::vector<std::string> validate() const;
};

// Flat key-value config file with [section] headers. Missing file content
// falls back to the defaults above (Table-I values); unknown keys and
// malformed lines are errors.
SystemConfig load_config(const std::string& path);
void save_config(const SystemConfig& cfg, const std::string& path);
SystemConfig parse_config(const std::string& text);
std::string format_config(const SystemConfig& cfg);

}  // namespace fdcf
