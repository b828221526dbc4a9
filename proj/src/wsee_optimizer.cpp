#include "fdcf/wsee_optimizer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fdcf/rng.hpp"

namespace fdcf {

namespace {

constexpr double kLn2 = 0.693147180559945309417232121458;

double sinr_from_se(double se, double tau_f) { return std::expm1(se / tau_f * kLn2); }

double ue_power_dl(const SECoefficients& coef, const SystemConfig& cfg,
                   const PowerAllocation& alloc, int k, double fix) {
  double radiated = 0;
  for (int m : coef.map.aps_by_dl[k])
    radiated += coef.gamma_dl(m, k) * alloc.c(m, k) * alloc.c(m, k);
  return fix + cfg.n_tx * cfg.p_dl_w() * radiated / cfg.power.alpha_ap + cfg.power.p_tc_dl_ue_w;
}

double ue_power_ul(const SystemConfig& cfg, double theta, double fix) {
  return fix + cfg.p_ul_w() * theta / cfg.power.alpha_ue + cfg.power.p_tc_ul_ue_w;
}

}  // namespace

TaylorForm taylor_underestimator(double f1n, double f2n) {
  if (f2n <= 0) throw std::invalid_argument("taylor_underestimator: expansion denominator <= 0");
  return TaylorForm{f1n / f2n};
}

PowerAllocation init_allocation(const Scenario& scn, const ServiceMap& map,
                                const QuantizerParams& q, const SystemConfig& cfg) {
  int M = static_cast<int>(scn.beta_dl.rows());
  int Kd = static_cast<int>(scn.beta_dl.cols());
  PowerAllocation a;
  a.c = Eigen::MatrixXd::Zero(M, Kd);
  a.theta = Eigen::VectorXd::Ones(scn.beta_ul.cols());
  for (int m = 0; m < M; ++m) {
    double sum_g = 0;
    for (int k : map.dl_by_ap[m]) sum_g += scn.gamma_dl(m, k);
    if (sum_g <= 0) continue;  // silent AP
    double eta = 1.0 / (q.second_moment * cfg.n_tx * sum_g);
    for (int k : map.dl_by_ap[m]) a.c(m, k) = std::sqrt(eta);
  }
  return a;
}

PowerAllocation baseline_alloc(AllocScheme kind, const Scenario& scn, const ServiceMap& map,
                               const QuantizerParams& q, const SystemConfig& cfg,
                               std::uint64_t seed) {
  PowerAllocation epa1 = init_allocation(scn, map, q, cfg);
  if (kind == AllocScheme::EPA1) return epa1;
  if (kind == AllocScheme::EPA2) {
    PowerAllocation a = epa1;
    a.c.setZero();
    for (int m = 0; m < map.num_aps(); ++m) {
      int served = map.dl_count(m);
      for (int k : map.dl_by_ap[m]) {
        double g = scn.gamma_dl(m, k);
        if (g <= 0) continue;
        a.c(m, k) = std::sqrt(1.0 / (q.second_moment * cfg.n_tx * served * g));
      }
    }
    return a;
  }
  // RPA: uniform between zero and the EPA1 value, for eta and theta alike.
  Rng rng(seed);
  PowerAllocation a = epa1;
  for (int m = 0; m < map.num_aps(); ++m)
    for (int k : map.dl_by_ap[m]) {
      double eta = epa1.c(m, k) * epa1.c(m, k) * rng.uniform();
      a.c(m, k) = std::sqrt(eta);
    }
  for (int l = 0; l < a.theta.size(); ++l) a.theta(l) = rng.uniform();
  return a;
}

SCAState init_slacks(const PowerAllocation& alloc, const SECoefficients& coef,
                     const SystemConfig& cfg, double margin) {
  const auto& map = coef.map;
  int Kd = static_cast<int>(coef.a_dl.cols());
  int Ku = static_cast<int>(coef.a_ul.size());
  double shrink = 1.0 - margin;

  SCAState s;
  s.alloc.c = alloc.c * shrink;
  s.alloc.theta = alloc.theta * shrink;
  for (int m = 0; m < map.num_aps(); ++m)
    for (int k : map.dl_by_ap[m]) s.alloc.c(m, k) = std::max(s.alloc.c(m, k), 1e-12);
  for (int l = 0; l < Ku; ++l) s.alloc.theta(l) = std::max(s.alloc.theta(l), 1e-12);

  s.lam_dl.resize(Kd);
  s.lam_ul.resize(Ku);
  s.zeta_dl.resize(Kd);
  s.zeta_ul.resize(Ku);
  s.psi_dl.resize(Kd);
  s.psi_ul.resize(Ku);
  s.f_dl.resize(Kd);
  s.f_ul.resize(Ku);

  double fix = 0;
  {
    // p_fix from the service map; mirrors the power model.
    int K = cfg.num_ues();
    for (int m = 0; m < map.num_aps(); ++m) {
      double r = fronthaul_rate(map.dl_count(m), map.ul_count(m), cfg.quant_bits, cfg);
      fix += cfg.power.p0_ap_w + (cfg.n_tx + cfg.n_rx) * cfg.power.p_tc_ap_w +
             cfg.power.p_ft_w * r / cfg.c_fronthaul_bps;
    }
    fix /= K;
  }

  double shrink3 = shrink * shrink * shrink;
  s.qos_feasible = true;
  for (int k = 0; k < Kd; ++k) {
    double lam = 0;
    for (int m : map.aps_by_dl[k]) lam += coef.a_dl(m, k) * s.alloc.c(m, k);
    s.lam_dl(k) = lam * shrink;
    double sinr = sinr_from_se(se_downlink_lb(coef, s.alloc, k), coef.tau_f);
    s.zeta_dl(k) = sinr * shrink3;
    double zo = std::expm1(cfg.qos_dl_bits / coef.tau_f * kLn2);
    if (s.zeta_dl(k) - zo <= 1e-10 * std::max(1.0, zo)) s.qos_feasible = false;
    s.psi_dl(k) = std::sqrt(coef.tau_f * std::log1p(s.zeta_dl(k)) / kLn2) * shrink;
    double p = ue_power_dl(coef, cfg, s.alloc, k, fix);
    if (p <= 0) throw std::invalid_argument("init_slacks: nonpositive DL UE power");
    s.f_dl(k) = s.psi_dl(k) * s.psi_dl(k) / p * shrink;
  }
  for (int l = 0; l < Ku; ++l) {
    s.lam_ul(l) = std::sqrt(coef.a_ul(l) * s.alloc.theta(l)) * shrink;
    double sinr = sinr_from_se(se_uplink_lb(coef, s.alloc, l), coef.tau_f);
    s.zeta_ul(l) = sinr * shrink3;
    double zo = std::expm1(cfg.qos_ul_bits / coef.tau_f * kLn2);
    if (s.zeta_ul(l) - zo <= 1e-10 * std::max(1.0, zo)) s.qos_feasible = false;
    s.psi_ul(l) = std::sqrt(coef.tau_f * std::log1p(s.zeta_ul(l)) / kLn2) * shrink;
    double p = ue_power_ul(cfg, s.alloc.theta(l), fix);
    if (p <= 0) throw std::invalid_argument("init_slacks: nonpositive UL UE power");
    s.f_ul(l) = s.psi_ul(l) * s.psi_ul(l) / p * shrink;
  }
  s.iteration = 0;
  return s;
}

int SubproblemLayout::c_index(int m, int k) const {
  for (size_t i = 0; i < c_pairs.size(); ++i)
    if (c_pairs[i].first == m && c_pairs[i].second == k) return static_cast<int>(i);
  return -1;
}

SubproblemLayout subproblem_layout(const SECoefficients& coef) {
  const auto& map = coef.map;
  int Kd = static_cast<int>(coef.a_dl.cols());
  int Ku = static_cast<int>(coef.a_ul.size());
  SubproblemLayout L;
  L.c_ref = Eigen::VectorXd::Zero(map.num_aps());
  for (int m = 0; m < map.num_aps(); ++m) {
    double sum = 0;
    for (int k : map.dl_by_ap[m]) {
      L.c_pairs.emplace_back(m, k);
      sum += coef.eq2_coef(m, k);  // b~ gamma
    }
    if (sum > 0) L.c_ref(m) = 1.0 / std::sqrt(coef.n_tx * sum);
  }
  L.lam_ul_ref.resize(Ku);
  for (int l = 0; l < Ku; ++l) L.lam_ul_ref(l) = std::sqrt(std::max(coef.a_ul(l), 1e-300));
  int n = static_cast<int>(L.c_pairs.size());
  L.off_theta = n;
  L.off_f_dl = L.off_theta + Ku;
  L.off_f_ul = L.off_f_dl + Kd;
  L.off_psi_dl = L.off_f_ul + Ku;
  L.off_psi_ul = L.off_psi_dl + Kd;
  L.off_zeta_dl = L.off_psi_ul + Ku;
  L.off_zeta_ul = L.off_zeta_dl + Kd;
  L.off_lam_dl = L.off_zeta_ul + Ku;
  L.off_lam_ul = L.off_lam_dl + Kd;
  L.total = L.off_lam_ul + Ku;
  return L;
}

Eigen::VectorXd pack_state(const SCAState& state, const SubproblemLayout& layout) {
  Eigen::VectorXd x(layout.total);
  for (size_t i = 0; i < layout.c_pairs.size(); ++i) {
    auto [m, k] = layout.c_pairs[i];
    x(i) = state.alloc.c(m, k) / layout.c_ref(m);
  }
  int Ku = static_cast<int>(state.alloc.theta.size());
  int Kd = static_cast<int>(state.f_dl.size());
  x.segment(layout.off_theta, Ku) = state.alloc.theta;
  x.segment(layout.off_f_dl, Kd) = state.f_dl;
  x.segment(layout.off_f_ul, Ku) = state.f_ul;
  x.segment(layout.off_psi_dl, Kd) = state.psi_dl;
  x.segment(layout.off_psi_ul, Ku) = state.psi_ul;
  x.segment(layout.off_zeta_dl, Kd) = state.zeta_dl;
  x.segment(layout.off_zeta_ul, Ku) = state.zeta_ul;
  x.segment(layout.off_lam_dl, Kd) = state.lam_dl;
  x.segment(layout.off_lam_ul, Ku) =
      state.lam_ul.cwiseQuotient(layout.lam_ul_ref);
  return x;
}

SCAState unpack_state(const Eigen::VectorXd& x, const SubproblemLayout& layout,
                      const SECoefficients& coef) {
  int Kd = static_cast<int>(coef.a_dl.cols());
  int Ku = static_cast<int>(coef.a_ul.size());
  int M = coef.map.num_aps();
  SCAState s;
  s.alloc.c = Eigen::MatrixXd::Zero(M, Kd);
  for (size_t i = 0; i < layout.c_pairs.size(); ++i) {
    auto [m, k] = layout.c_pairs[i];
    s.alloc.c(m, k) = std::max(0.0, x(i)) * layout.c_ref(m);
  }
  s.alloc.theta = x.segment(layout.off_theta, Ku).cwiseMax(0.0).cwiseMin(1.0);
  s.f_dl = x.segment(layout.off_f_dl, Kd);
  s.f_ul = x.segment(layout.off_f_ul, Ku);
  s.psi_dl = x.segment(layout.off_psi_dl, Kd);
  s.psi_ul = x.segment(layout.off_psi_ul, Ku);
  s.zeta_dl = x.segment(layout.off_zeta_dl, Kd);
  s.zeta_ul = x.segment(layout.off_zeta_ul, Ku);
  s.lam_dl = x.segment(layout.off_lam_dl, Kd);
  s.lam_ul = x.segment(layout.off_lam_ul, Ku).cwiseProduct(layout.lam_ul_ref);
  return s;
}

namespace {

ConvexProgram build_subproblem_impl(const SCAState& state, const SECoefficients& coef,
                                    const SystemConfig& cfg, bool rescue) {
  const auto& map = coef.map;
  SubproblemLayout L = subproblem_layout(coef);
  int Kd = static_cast<int>(coef.a_dl.cols());
  int Ku = static_cast<int>(coef.a_ul.size());

  ConvexProgram p;
  for (auto [m, k] : L.c_pairs)
    p.add_var("c_" + std::to_string(m) + "_" + std::to_string(k), 0.0);
  for (int l = 0; l < Ku; ++l) p.add_var("theta_" + std::to_string(l), 0.0, 1.0);
  for (int k = 0; k < Kd; ++k) p.add_var("f_d_" + std::to_string(k), 0.0);
  for (int l = 0; l < Ku; ++l) p.add_var("f_u_" + std::to_string(l), 0.0);
  for (int k = 0; k < Kd; ++k) p.add_var("psi_d_" + std::to_string(k), 0.0);
  for (int l = 0; l < Ku; ++l) p.add_var("psi_u_" + std::to_string(l), 0.0);
  for (int k = 0; k < Kd; ++k) p.add_var("zeta_d_" + std::to_string(k));
  for (int l = 0; l < Ku; ++l) p.add_var("zeta_u_" + std::to_string(l));
  for (int k = 0; k < Kd; ++k) p.add_var("lam_d_" + std::to_string(k), 0.0);
  for (int l = 0; l < Ku; ++l) p.add_var("lam_u_" + std::to_string(l));
  int t_var = -1;
  if (rescue) t_var = p.add_var("qos_slack");

  if (rescue) {
    p.objective.assign(p.num_vars(), 0.0);
    p.objective[t_var] = 1.0;
  } else {
    p.objective.assign(p.num_vars(), 0.0);
    for (int k = 0; k < Kd; ++k) p.objective[L.off_f_dl + k] = cfg.weight_dl(k);
    for (int l = 0; l < Ku; ++l) p.objective[L.off_f_ul + l] = cfg.weight_ul(l);
  }

  double tau_f = coef.tau_f;
  auto zeta_o = [&](double s_min) { return std::expm1(s_min / tau_f * kLn2); };

  // 20a: QoS floor on the SINR slack (affine after the log rewrite).
  for (int k = 0; k < Kd; ++k) {
    std::vector<LinearTerm> lin{{L.off_zeta_dl + k, -1.0}};
    if (rescue) lin.push_back({t_var, 1.0});
    p.add_affine(std::move(lin), -zeta_o(cfg.qos_dl_bits), "20a.d" + std::to_string(k));
  }
  for (int l = 0; l < Ku; ++l) {
    std::vector<LinearTerm> lin{{L.off_zeta_ul + l, -1.0}};
    if (rescue) lin.push_back({t_var, 1.0});
    p.add_affine(std::move(lin), -zeta_o(cfg.qos_ul_bits), "20a.u" + std::to_string(l));
  }
  // 20b: psi^2 <= tau_f log2(1 + zeta).
  for (int k = 0; k < Kd; ++k)
    p.add_sq_le_log(L.off_psi_dl + k, L.off_zeta_dl + k, tau_f, "20b.d" + std::to_string(k));
  for (int l = 0; l < Ku; ++l)
    p.add_sq_le_log(L.off_psi_ul + l, L.off_zeta_ul + l, tau_f, "20b.u" + std::to_string(l));
  // 20c: numerator slacks.
  for (int k = 0; k < Kd; ++k) {
    std::vector<LinearTerm> lin{{L.off_lam_dl + k, 1.0}};
    for (int m : map.aps_by_dl[k])
      lin.push_back({L.c_index(m, k), -coef.a_dl(m, k) * L.c_ref(m)});
    p.add_affine(std::move(lin), 0.0, "20c.d" + std::to_string(k));
  }
  for (int l = 0; l < Ku; ++l)
    p.add_soc_num(L.off_lam_ul + l, {{L.off_theta + l, 1.0}}, "20c.u" + std::to_string(l));
  // 20d: uplink interference bound against the linearized numerator. The row
  // is normalized by F^u_l so it carries unit scale.
  for (int l = 0; l < Ku; ++l) {
    TaylorForm lam = taylor_underestimator(state.lam_ul(l), state.zeta_ul(l));
    double s = 1.0 / std::max(coef.f_ul(l), 1e-300);
    std::vector<LinearTerm> quad;
    std::vector<LinearTerm> lin;
    for (size_t i = 0; i < L.c_pairs.size(); ++i) {
      auto [am, ak] = L.c_pairs[i];
      double d = coef.d_ul[l](am, ak) * L.c_ref(am) * L.c_ref(am) * s;
      if (d != 0) quad.push_back({static_cast<int>(i), d});
    }
    for (int q = 0; q < Ku; ++q) {
      double coeff = (coef.b_ul(l, q) + (q == l ? coef.e_ul(l) : 0.0)) * s;
      lin.push_back({L.off_theta + q, coeff});
    }
    lin.push_back({L.off_lam_ul + l, -lam.coef_f1() * L.lam_ul_ref(l) * s});
    lin.push_back({L.off_zeta_ul + l, -lam.coef_f2() * s});
    p.add_quad(std::move(quad), std::move(lin), -1.0, "20d.u" + std::to_string(l));
  }
  // 20e: downlink interference bound.
  for (int k = 0; k < Kd; ++k) {
    TaylorForm lam = taylor_underestimator(state.lam_dl(k), state.zeta_dl(k));
    std::vector<LinearTerm> quad;
    std::vector<LinearTerm> lin;
    for (size_t i = 0; i < L.c_pairs.size(); ++i) {
      auto [am, aq] = L.c_pairs[i];
      double b = coef.b_dl[k](am, aq) * L.c_ref(am) * L.c_ref(am);
      if (b != 0) quad.push_back({static_cast<int>(i), b});
    }
    for (int l = 0; l < Ku; ++l) lin.push_back({L.off_theta + l, coef.d_dl(k, l)});
    lin.push_back({L.off_lam_dl + k, -lam.coef_f1()});
    lin.push_back({L.off_zeta_dl + k, -lam.coef_f2()});
    p.add_quad(std::move(quad), std::move(lin), -1.0, "20e.d" + std::to_string(k));
  }
  double fix = 0;
  for (int m = 0; m < map.num_aps(); ++m) {
    double r = fronthaul_rate(map.dl_count(m), map.ul_count(m), cfg.quant_bits, cfg);
    fix += cfg.power.p0_ap_w + (cfg.n_tx + cfg.n_rx) * cfg.power.p_tc_ap_w +
           cfg.power.p_ft_w * r / cfg.c_fronthaul_bps;
  }
  fix /= cfg.num_ues();
  // 20f/20g: consumed power against the linearized EE numerator.
  for (int k = 0; k < Kd; ++k) {
    TaylorForm psi = taylor_underestimator(state.psi_dl(k), state.f_dl(k));
    std::vector<LinearTerm> quad;
    for (int m : map.aps_by_dl[k]) {
      double w = cfg.n_tx * cfg.p_dl_w() * coef.gamma_dl(m, k) * L.c_ref(m) * L.c_ref(m) /
                 cfg.power.alpha_ap;
      quad.push_back({L.c_index(m, k), w});
    }
    std::vector<LinearTerm> lin{{L.off_psi_dl + k, -psi.coef_f1()},
                                {L.off_f_dl + k, -psi.coef_f2()}};
    p.add_quad(std::move(quad), std::move(lin), -(fix + cfg.power.p_tc_dl_ue_w),
               "20f.d" + std::to_string(k));
  }
  for (int l = 0; l < Ku; ++l) {
    TaylorForm psi = taylor_underestimator(state.psi_ul(l), state.f_ul(l));
    std::vector<LinearTerm> lin{{L.off_theta + l, cfg.p_ul_w() / cfg.power.alpha_ue},
                                {L.off_psi_ul + l, -psi.coef_f1()},
                                {L.off_f_ul + l, -psi.coef_f2()}};
    p.add_quad({}, std::move(lin), -(fix + cfg.power.p_tc_ul_ue_w),
               "20g.u" + std::to_string(l));
  }
  // Per-AP transmit power (Eq. 2 rewritten in the scaled variables).
  for (int m = 0; m < map.num_aps(); ++m) {
    if (map.dl_count(m) == 0) continue;
    std::vector<LinearTerm> quad;
    for (int k : map.dl_by_ap[m])
      quad.push_back({L.c_index(m, k), coef.eq2_coef(m, k) * L.c_ref(m) * L.c_ref(m)});
    p.add_quad(std::move(quad), {}, 1.0 / coef.n_tx, "eq2.m" + std::to_string(m));
  }
  return p;
}

bool allocation_feasible(const PowerAllocation& alloc, const SECoefficients& coef,
                         const SystemConfig& cfg) {
  const auto& map = coef.map;
  double cap = 1.0 / coef.n_tx;
  for (int m = 0; m < map.num_aps(); ++m) {
    double load = 0;
    for (int k : map.dl_by_ap[m]) load += coef.eq2_coef(m, k) * alloc.c(m, k) * alloc.c(m, k);
    if (load > cap * (1.0 + 1e-9) + 1e-15) return false;
  }
  for (int l = 0; l < alloc.theta.size(); ++l)
    if (alloc.theta(l) < -1e-12 || alloc.theta(l) > 1.0 + 1e-9) return false;
  int Kd = static_cast<int>(coef.a_dl.cols());
  int Ku = static_cast<int>(coef.a_ul.size());
  for (int k = 0; k < Kd; ++k)
    if (se_downlink_lb(coef, alloc, k) < cfg.qos_dl_bits - 1e-9) return false;
  for (int l = 0; l < Ku; ++l)
    if (se_uplink_lb(coef, alloc, l) < cfg.qos_ul_bits - 1e-9) return false;
  return true;
}

}  // namespace

ConvexProgram build_subproblem(const SCAState& state, const SECoefficients& coef,
                               const SystemConfig& cfg) {
  return build_subproblem_impl(state, coef, cfg, false);
}

namespace {

// Minimum QoS slack min(SINR - zeta_o) of an allocation, in SINR units.
double min_qos_slack(const PowerAllocation& alloc, const SECoefficients& coef,
                     const SystemConfig& cfg) {
  double slack = std::numeric_limits<double>::infinity();
  double zo_d = std::expm1(cfg.qos_dl_bits / coef.tau_f * kLn2);
  double zo_u = std::expm1(cfg.qos_ul_bits / coef.tau_f * kLn2);
  for (int k = 0; k < coef.a_dl.cols(); ++k)
    slack = std::min(slack, sinr_from_se(se_downlink_lb(coef, alloc, k), coef.tau_f) - zo_d);
  for (int l = 0; l < coef.a_ul.size(); ++l)
    slack = std::min(slack, sinr_from_se(se_uplink_lb(coef, alloc, l), coef.tau_f) - zo_u);
  return slack;
}

}  // namespace

OptimizeResult optimize(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                        const SystemConfig& cfg, double eps_sca) {
  SECoefficients coef = build_coefficients(scn, map, q, cfg);
  SubproblemLayout layout = subproblem_layout(coef);

  OptimizeResult out;
  PowerAllocation epa1 = init_allocation(scn, map, q, cfg);
  out.alloc = epa1;

  SCAState state = init_slacks(epa1, coef, cfg, cfg.sca_margin);
  double best_wsee = -1.0;
  if (allocation_feasible(epa1, coef, cfg)) {
    out.feasible = true;
    best_wsee = wsee(epa1, scn, map, coef, cfg).wsee;
    out.alloc = epa1;
  }

  if (!state.qos_feasible) {
    // Feasibility phase, itself successively approximated: each round
    // maximizes the minimum SINR slack in the set linearized at the current
    // iterate, so the attainable slack roughly doubles per round.
    bool rescued = false;
    double prev_slack = min_qos_slack(state.alloc, coef, cfg);
    for (int round = 0; round < 50; ++round) {
      ConvexProgram rescue = build_subproblem_impl(state, coef, cfg, true);
      Eigen::VectorXd x0(layout.total + 1);
      x0.head(layout.total) = pack_state(state, layout);
      double lin_slack = std::numeric_limits<double>::infinity();
      for (int k = 0; k < state.zeta_dl.size(); ++k)
        lin_slack = std::min(lin_slack, state.zeta_dl(k) -
                                            std::expm1(cfg.qos_dl_bits / coef.tau_f * kLn2));
      for (int l = 0; l < state.zeta_ul.size(); ++l)
        lin_slack = std::min(lin_slack, state.zeta_ul(l) -
                                            std::expm1(cfg.qos_ul_bits / coef.tau_f * kLn2));
      x0(layout.total) = lin_slack - std::max(1e-6, 0.1 * std::fabs(lin_slack));
      SolveResult res = solve(rescue, x0, cfg.solver_tol);
      if (res.status == SolveStatus::Infeasible) break;
      SCAState cand = unpack_state(res.point.head(layout.total), layout, coef);
      double slack = min_qos_slack(cand.alloc, coef, cfg);
      state = init_slacks(cand.alloc, coef, cfg, 1e-6);
      if (state.qos_feasible) {
        rescued = true;
        break;
      }
      // Stalled below the floor: the QoS targets are unattainable.
      if (slack <= prev_slack + 1e-9 * std::max(1.0, std::fabs(prev_slack))) break;
      prev_slack = slack;
    }
    if (!rescued) {
      out.report = wsee(epa1, scn, map, coef, cfg);
      out.converged = false;
      out.feasible = false;
      return out;
    }
  }

  // Main loop. The subproblem is expanded at the strictified state (equality
  // slacks at the margin-shrunk allocation), which is strictly interior by
  // construction, so it doubles as the barrier start.
  Eigen::VectorXd prev = pack_state(state, layout);
  for (int n = 1; n <= cfg.sca_max_iters; ++n) {
    ConvexProgram prog = build_subproblem(state, coef, cfg);
    SolveResult res = solve(prog, pack_state(state, layout), cfg.solver_tol);
    if (res.status == SolveStatus::Infeasible) {
      out.trace.push_back({n, 0.0, 0.0, res.status});
      break;
    }
    SCAState next = unpack_state(res.point, layout, coef);
    next.iteration = n;
    Eigen::VectorXd cur = pack_state(next, layout);
    int nc = static_cast<int>(layout.c_pairs.size());
    int ku = static_cast<int>(state.alloc.theta.size());
    double residue = std::sqrt((cur.head(nc) - prev.head(nc)).squaredNorm() +
                               (cur.segment(layout.off_theta, ku) - prev.segment(layout.off_theta, ku))
                                   .squaredNorm());
    out.trace.push_back({n, res.objective, residue, res.status});

    if (allocation_feasible(next.alloc, coef, cfg)) {
      double w = wsee(next.alloc, scn, map, coef, cfg).wsee;
      if (w > best_wsee) {
        best_wsee = w;
        out.alloc = next.alloc;
        out.feasible = true;
      }
    }
    prev = cur;
    state = init_slacks(next.alloc, coef, cfg, 1e-6);
    state.iteration = n;
    state.residue_history.push_back(residue);
    if (residue <= eps_sca) {
      out.converged = true;
      break;
    }
  }
  out.report = wsee(out.alloc, scn, map, coef, cfg);
  return out;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << "iter,objective,residue,solver_status\n";
  for (const auto& r : trace) {
    const char* st = r.status == SolveStatus::Optimal
                         ? "optimal"
                         : (r.status == SolveStatus::MaxIter ? "maxiter" : "infeasible");
    os.precision(12);
    os << r.iteration << "," << r.objective << "," << r.residue << "," << st << "\n";
  }
  return os.str();
}

}  // namespace fdcf
