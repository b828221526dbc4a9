#include "fdcf/power_model.hpp"

#include <sstream>
#include <stdexcept>

namespace fdcf {

double p_fix(const SystemConfig& cfg, const ServiceMap& map) {
  int K = cfg.num_ues();
  if (K < 1) throw std::invalid_argument("p_fix: no UEs");
  if (cfg.c_fronthaul_bps <= 0) throw std::invalid_argument("p_fix: zero fronthaul capacity");
  double total = 0;
  for (int m = 0; m < map.num_aps(); ++m) {
    double r = fronthaul_rate(map.dl_count(m), map.ul_count(m), cfg.quant_bits, cfg);
    total += cfg.power.p0_ap_w + (cfg.n_tx + cfg.n_rx) * cfg.power.p_tc_ap_w +
             cfg.power.p_ft_w * r / cfg.c_fronthaul_bps;
  }
  return total / K;
}

UePowers ue_powers(const PowerAllocation& alloc, const Scenario& scn, const ServiceMap& map,
                   const SystemConfig& cfg) {
  double fix = p_fix(cfg, map);
  double p_d = cfg.p_dl_w();  // rho_d N_0
  double p_u = cfg.p_ul_w();
  UePowers p;
  p.dl.resize(scn.beta_dl.cols());
  p.ul.resize(scn.beta_ul.cols());
  for (int k = 0; k < p.dl.size(); ++k) {
    double radiated = 0;
    for (int m : map.aps_by_dl[k])
      radiated += scn.gamma_dl(m, k) * alloc.c(m, k) * alloc.c(m, k) / cfg.power.alpha_ap;
    p.dl(k) = fix + cfg.n_tx * p_d * radiated + cfg.power.p_tc_dl_ue_w;
  }
  for (int l = 0; l < p.ul.size(); ++l)
    p.ul(l) = fix + p_u * alloc.theta(l) / cfg.power.alpha_ue + cfg.power.p_tc_ul_ue_w;
  return p;
}

WSEEReport wsee(const PowerAllocation& alloc, const Scenario& scn, const ServiceMap& map,
                const SECoefficients& coef, const SystemConfig& cfg) {
  WSEEReport r;
  r.se = se_lower_bounds(coef, alloc);
  UePowers p = ue_powers(alloc, scn, map, cfg);
  r.p_dl = p.dl;
  r.p_ul = p.ul;
  r.ee_dl.resize(p.dl.size());
  r.ee_ul.resize(p.ul.size());
  double B = cfg.power.bandwidth_hz;
  r.wsee = 0;
  for (int k = 0; k < p.dl.size(); ++k) {
    if (p.dl(k) <= 0) throw std::invalid_argument("wsee: zero power at DL UE " + std::to_string(k));
    r.ee_dl(k) = B * r.se.se_dl(k) / p.dl(k);
    r.wsee += cfg.weight_dl(k) * r.ee_dl(k);
  }
  for (int l = 0; l < p.ul.size(); ++l) {
    if (p.ul(l) <= 0) throw std::invalid_argument("wsee: zero power at UL UE " + std::to_string(l));
    r.ee_ul(l) = B * r.se.se_ul(l) / p.ul(l);
    r.wsee += cfg.weight_ul(l) * r.ee_ul(l);
  }
  return r;
}

WSEEReport wsee(const PowerAllocation& alloc, const Scenario& scn, const ServiceMap& map,
                const QuantizerParams& q, const SystemConfig& cfg) {
  return wsee(alloc, scn, map, build_coefficients(scn, map, q, cfg), cfg);
}

std::string wsee_csv(const WSEEReport& report, const SystemConfig& cfg) {
  std::ostringstream os;
  os.precision(12);
  os << "ue_id,side,ee,power,weight\n";
  for (int k = 0; k < report.ee_dl.size(); ++k)
    os << k << ",dl," << report.ee_dl(k) << "," << report.p_dl(k) << "," << cfg.weight_dl(k)
       << "\n";
  for (int l = 0; l < report.ee_ul.size(); ++l)
    os << l << ",ul," << report.ee_ul(l) << "," << report.p_ul(l) << "," << cfg.weight_ul(l)
       << "\n";
  os << "wsee," << report.wsee << "\n";
  return os.str();
}

}  // namespace fdcf
