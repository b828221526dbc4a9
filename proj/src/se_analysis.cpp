#include "fdcf/se_analysis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fdcf/rng.hpp"

namespace fdcf {

namespace {

constexpr double kInvLn2 = 1.4426950408889634073599246810019;

double log2_1p(double x) { return std::log1p(x) * kInvLn2; }

void check_allocation(const SECoefficients& coef, const PowerAllocation& alloc) {
  const auto& map = coef.map;
  if (alloc.c.rows() != coef.eq2_coef.rows() || alloc.c.cols() != coef.eq2_coef.cols())
    throw std::invalid_argument("allocation: c has wrong dimensions");
  if ((alloc.c.array() < -1e-12).any())
    throw std::invalid_argument("allocation: c must be nonnegative");
  double cap = 1.0 / coef.n_tx;
  for (int m = 0; m < map.num_aps(); ++m) {
    double load = 0;
    for (int k : map.dl_by_ap[m]) load += coef.eq2_coef(m, k) * alloc.c(m, k) * alloc.c(m, k);
    if (load > cap * (1.0 + 1e-9) + 1e-15)
      throw std::invalid_argument("allocation: transmit power constraint violated at AP " +
                                  std::to_string(m));
  }
  for (int l = 0; l < alloc.theta.size(); ++l)
    if (alloc.theta(l) < -1e-12 || alloc.theta(l) > 1.0 + 1e-9)
      throw std::invalid_argument("allocation: theta out of [0,1] at UE " + std::to_string(l));
}

}  // namespace

SECoefficients build_coefficients(const Scenario& scn, const ServiceMap& map,
                                  const QuantizerParams& q, const SystemConfig& cfg) {
  const int M = static_cast<int>(scn.beta_dl.rows());
  const int Kd = static_cast<int>(scn.beta_dl.cols());
  const int Ku = static_cast<int>(scn.beta_ul.cols());
  if (map.num_aps() != M || static_cast<int>(map.aps_by_dl.size()) != Kd ||
      static_cast<int>(map.aps_by_ul.size()) != Ku)
    throw std::invalid_argument("build_coefficients: scenario/map dimension mismatch");

  const double a = q.gain, b = q.second_moment;
  const double rho_d = cfg.rho_dl(), rho_u = cfg.rho_ul();
  const int Nt = cfg.n_tx, Nr = cfg.n_rx;
  const double gri = cfg.gamma_ri();

  SECoefficients coef;
  coef.tau_f = cfg.tau_f();
  coef.rho_dl = rho_d;
  coef.rho_ul = rho_u;
  coef.n_tx = Nt;
  coef.eq2_coef = b * scn.gamma_dl;
  coef.gamma_dl = scn.gamma_dl;
  coef.map = map;

  coef.a_dl = a * Nt * std::sqrt(rho_d) * scn.gamma_dl;
  coef.b_dl.resize(Kd);
  for (int k = 0; k < Kd; ++k) {
    coef.b_dl[k].resize(M, Kd);
    for (int m = 0; m < M; ++m)
      for (int qq = 0; qq < Kd; ++qq)
        coef.b_dl[k](m, qq) = b * Nt * rho_d * scn.beta_dl(m, k) * scn.gamma_dl(m, qq);
  }
  coef.d_dl = rho_u * scn.beta_udi;

  coef.a_ul.resize(Ku);
  coef.b_ul.resize(Ku, Ku);
  coef.d_ul.assign(Ku, Eigen::MatrixXd::Zero(M, Kd));
  coef.e_ul.resize(Ku);
  coef.f_ul.resize(Ku);
  for (int l = 0; l < Ku; ++l) {
    double sum_g = 0, sum_g2 = 0;
    for (int m : map.aps_by_ul[l]) {
      sum_g += scn.gamma_ul(m, l);
      sum_g2 += scn.gamma_ul(m, l) * scn.gamma_ul(m, l);
    }
    coef.a_ul(l) = a * a * Nr * Nr * rho_u * sum_g * sum_g;
    coef.e_ul(l) = (b - a * a) * Nr * Nr * rho_u * sum_g2;
    coef.f_ul(l) = b * Nr * sum_g;
    for (int qq = 0; qq < Ku; ++qq) {
      double s = 0;
      for (int m : map.aps_by_ul[l]) s += scn.gamma_ul(m, l) * scn.beta_ul(m, qq);
      coef.b_ul(l, qq) = b * Nr * rho_u * s;
    }
    for (int i = 0; i < M; ++i) {
      double ri = 0;
      for (int m : map.aps_by_ul[l]) ri += scn.gamma_ul(m, l) * scn.beta_ri(m, i) * gri;
      for (int k : map.dl_by_ap[i])
        coef.d_ul[l](i, k) = b * b * Nr * Nt * rho_d * scn.gamma_dl(i, k) * ri;
    }
  }
  return coef;
}

namespace {

double dl_sinr(const SECoefficients& coef, const PowerAllocation& alloc, int k) {
  const auto& map = coef.map;
  double num = 0;
  for (int m : map.aps_by_dl[k]) num += coef.a_dl(m, k) * alloc.c(m, k);
  double den = 1.0;
  for (int m = 0; m < map.num_aps(); ++m)
    for (int q : map.dl_by_ap[m]) den += coef.b_dl[k](m, q) * alloc.c(m, q) * alloc.c(m, q);
  for (int l = 0; l < alloc.theta.size(); ++l) den += coef.d_dl(k, l) * alloc.theta(l);
  return num * num / den;
}

double ul_sinr(const SECoefficients& coef, const PowerAllocation& alloc, int l) {
  const auto& map = coef.map;
  double den = coef.f_ul(l) + coef.e_ul(l) * alloc.theta(l);
  for (int q = 0; q < alloc.theta.size(); ++q) den += coef.b_ul(l, q) * alloc.theta(q);
  for (int i = 0; i < map.num_aps(); ++i)
    for (int k : map.dl_by_ap[i]) den += coef.d_ul[l](i, k) * alloc.c(i, k) * alloc.c(i, k);
  return coef.a_ul(l) * alloc.theta(l) / den;
}

}  // namespace

double se_downlink_lb(const SECoefficients& coef, const PowerAllocation& alloc, int k) {
  check_allocation(coef, alloc);
  return coef.tau_f * log2_1p(dl_sinr(coef, alloc, k));
}

double se_uplink_lb(const SECoefficients& coef, const PowerAllocation& alloc, int l) {
  check_allocation(coef, alloc);
  return coef.tau_f * log2_1p(ul_sinr(coef, alloc, l));
}

SEReport se_lower_bounds(const SECoefficients& coef, const PowerAllocation& alloc) {
  int Kd = static_cast<int>(coef.a_dl.cols());
  int Ku = static_cast<int>(coef.a_ul.size());
  SEReport r;
  r.se_dl.resize(Kd);
  r.se_ul.resize(Ku);
  r.stderr_dl = Eigen::VectorXd::Zero(Kd);
  r.stderr_ul = Eigen::VectorXd::Zero(Ku);
  for (int k = 0; k < Kd; ++k) r.se_dl(k) = se_downlink_lb(coef, alloc, k);
  for (int l = 0; l < Ku; ++l) r.se_ul(l) = se_uplink_lb(coef, alloc, l);
  r.sum_se = r.se_dl.sum() + r.se_ul.sum();
  return r;
}

double ul_mrc_output_power(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                           const PowerAllocation& alloc, const SystemConfig& cfg, int m, int l) {
  const double rho_d = cfg.rho_dl(), rho_u = cfg.rho_ul();
  const int Nt = cfg.n_tx, Nr = cfg.n_rx;
  const double g = scn.gamma_ul(m, l);
  double p = static_cast<double>(Nr) * Nr * rho_u * g * g * alloc.theta(l);
  double mui = 0;
  for (int qq = 0; qq < alloc.theta.size(); ++qq) mui += scn.beta_ul(m, qq) * alloc.theta(qq);
  p += rho_u * Nr * g * mui;
  double ri = 0;
  for (int i = 0; i < map.num_aps(); ++i) {
    double gi = scn.beta_ri(m, i) * cfg.gamma_ri();
    for (int k : map.dl_by_ap[i])
      ri += scn.gamma_dl(i, k) * gi * alloc.c(i, k) * alloc.c(i, k);
  }
  p += q.second_moment * Nr * Nt * rho_d * g * ri;
  p += Nr * g;
  return p;
}

namespace {

// Everything a trial needs, preallocated once.
struct TrialWork {
  Eigen::VectorXcd s_dl, s_ul;     // unit symbols
  Eigen::MatrixXcd dist_dl;        // DL fronthaul distortions (M x K_d)
  Eigen::VectorXcd w_dl;           // receiver noise at DL UEs
  Eigen::MatrixXcd w_ul;           // AP noise (N_r x M)
  Eigen::MatrixXcd dist_ul;        // UL fronthaul distortions (M x K_u)
  Eigen::MatrixXcd y;              // per DL UE: (g_mk)^T (ghat_mq)^*  (M x K_d)
  Eigen::MatrixXcd z;              // per UL UE: sum_m (ghat_ml)^H g_mq  (K_u entries per l)
};

struct Accum {
  double sum = 0, sum_sq = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  double mean(int n) const { return sum / n; }
  double stderr_of_mean(int n) const {
    double m = sum / n;
    double var = std::max(0.0, sum_sq / n - m * m);
    return std::sqrt(var / n);
  }
};

}  // namespace

const MomentEstimate& MomentTable::at(LinkSide side, int ue, MomentTerm term) const {
  const auto& rows = (side == LinkSide::Downlink) ? dl : ul;
  return rows.at(ue).at(static_cast<int>(term));
}

MomentTable moment_table(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                         const PowerAllocation& alloc, const SystemConfig& cfg, int trials,
                         std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("moment_table: trials must be >= 1");
  const int M = static_cast<int>(scn.beta_dl.rows());
  const int Kd = static_cast<int>(scn.beta_dl.cols());
  const int Ku = static_cast<int>(scn.beta_ul.cols());
  const int Nt = cfg.n_tx, Nr = cfg.n_rx;
  const double a = q.gain, b = q.second_moment, dvar = q.distortion();
  const double rho_d = cfg.rho_dl(), rho_u = cfg.rho_ul();
  const double sq_rho_d = std::sqrt(rho_d), sq_rho_u = std::sqrt(rho_u);

  // Deterministic coherent means and the UL distortion variances.
  Eigen::VectorXd ds_mean_dl(Kd), ds_mean_ul(Ku);
  for (int k = 0; k < Kd; ++k) {
    double s = 0;
    for (int m : map.aps_by_dl[k]) s += alloc.c(m, k) * Nt * scn.gamma_dl(m, k);
    ds_mean_dl(k) = s;
  }
  for (int l = 0; l < Ku; ++l) {
    double s = 0;
    for (int m : map.aps_by_ul[l]) s += Nr * scn.gamma_ul(m, l);
    ds_mean_ul(l) = s;
  }
  Eigen::MatrixXd q_ul(M, Ku);
  for (int l = 0; l < Ku; ++l)
    for (int m : map.aps_by_ul[l]) q_ul(m, l) = ul_mrc_output_power(scn, map, q, alloc, cfg, m, l);

  const int nterms = 7;
  std::vector<std::vector<Accum>> acc_dl(Kd, std::vector<Accum>(nterms));
  std::vector<std::vector<Accum>> acc_ul(Ku, std::vector<Accum>(nterms));

  Rng root(seed);
  TrialWork w;
  w.s_dl.resize(Kd);
  w.s_ul.resize(Ku);
  w.dist_dl.setZero(M, Kd);
  w.w_dl.resize(Kd);
  w.w_ul.resize(Nr, M);
  w.dist_ul.setZero(M, Ku);
  w.y.resize(M, Kd);
  Eigen::MatrixXcd x(Kd, Kd);        // x(k,q) = coherent gain of q's signal at DL UE k
  Eigen::MatrixXcd z(Ku, Ku);        // z(l,q) = combined gain of q's signal for UL UE l
  Eigen::MatrixXcd u(Nt, M);         // per UL UE: u_i = sum_m (ghat_ml)^H H_mi
  Eigen::MatrixXcd t_ri(M, Kd);      // T_ik

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = root.fork(trial);
    ChannelRealization ch = draw_channels(scn, cfg, rng.next_u64());
    for (int k = 0; k < Kd; ++k) w.s_dl(k) = rng.cnormal(1.0);
    for (int l = 0; l < Ku; ++l) w.s_ul(l) = rng.cnormal(1.0);
    for (int k = 0; k < Kd; ++k) w.w_dl(k) = rng.cnormal(1.0);
    for (int m = 0; m < M; ++m)
      for (int r = 0; r < Nr; ++r) w.w_ul(r, m) = rng.cnormal(1.0);
    for (int m = 0; m < M; ++m)
      for (int k : map.dl_by_ap[m])
        w.dist_dl(m, k) = rng.cnormal(dvar * alloc.c(m, k) * alloc.c(m, k));
    for (int l = 0; l < Ku; ++l)
      for (int m : map.aps_by_ul[l]) w.dist_ul(m, l) = rng.cnormal(dvar * q_ul(m, l));

    // Downlink terms.
    for (int k = 0; k < Kd; ++k) {
      for (int m = 0; m < M; ++m) {
        auto gk = ch.g_dl_block(m, k);
        for (int qq = 0; qq < Kd; ++qq)
          w.y(m, qq) = (gk.transpose() * ch.ghat_dl_block(m, qq).conjugate())(0, 0);
      }
      x.row(k).setZero();
      for (int qq = 0; qq < Kd; ++qq)
        for (int m : map.aps_by_dl[qq]) x(k, qq) += alloc.c(m, qq) * w.y(m, qq);

      std::complex<double> ds = a * sq_rho_d * ds_mean_dl(k) * w.s_dl(k);
      std::complex<double> bu = a * sq_rho_d * (x(k, k) - ds_mean_dl(k)) * w.s_dl(k);
      std::complex<double> mui = 0;
      for (int qq = 0; qq < Kd; ++qq)
        if (qq != k) mui += a * sq_rho_d * x(k, qq) * w.s_dl(qq);
      std::complex<double> udi = 0;
      for (int l = 0; l < Ku; ++l)
        udi += sq_rho_u * std::sqrt(alloc.theta(l)) * ch.h_udi(k, l) * w.s_ul(l);
      std::complex<double> tqd = 0;
      for (int m = 0; m < M; ++m)
        for (int qq : map.dl_by_ap[m]) tqd += sq_rho_d * w.y(m, qq) * w.dist_dl(m, qq);

      acc_dl[k][static_cast<int>(MomentTerm::DS)].add(std::norm(ds));
      acc_dl[k][static_cast<int>(MomentTerm::BU)].add(std::norm(bu));
      acc_dl[k][static_cast<int>(MomentTerm::MUI)].add(std::norm(mui));
      acc_dl[k][static_cast<int>(MomentTerm::UDI)].add(std::norm(udi));
      acc_dl[k][static_cast<int>(MomentTerm::TQD)].add(std::norm(tqd));
      acc_dl[k][static_cast<int>(MomentTerm::N)].add(std::norm(w.w_dl(k)));
    }

    // Uplink terms.
    for (int l = 0; l < Ku; ++l) {
      z.row(l).setZero();
      for (int qq = 0; qq < Ku; ++qq)
        for (int m : map.aps_by_ul[l])
          z(l, qq) += (ch.ghat_ul_block(m, l).adjoint() * ch.g_ul_block(m, qq))(0, 0);
      u.setZero();
      for (int i = 0; i < M; ++i)
        for (int m : map.aps_by_ul[l])
          u.col(i) += (ch.ghat_ul_block(m, l).adjoint() * ch.h_ri_block(m, i)).transpose();
      t_ri.setZero();
      for (int i = 0; i < M; ++i)
        for (int k : map.dl_by_ap[i])
          t_ri(i, k) = (u.col(i).transpose() * ch.ghat_dl_block(i, k).conjugate())(0, 0);

      double sqt = std::sqrt(alloc.theta(l));
      std::complex<double> ds = a * sq_rho_u * sqt * ds_mean_ul(l) * w.s_ul(l);
      std::complex<double> bu = a * sq_rho_u * sqt * (z(l, l) - ds_mean_ul(l)) * w.s_ul(l);
      std::complex<double> mui = 0;
      for (int qq = 0; qq < Ku; ++qq)
        if (qq != l) mui += a * sq_rho_u * std::sqrt(alloc.theta(qq)) * z(l, qq) * w.s_ul(qq);
      std::complex<double> ri = 0;
      for (int i = 0; i < M; ++i)
        for (int k : map.dl_by_ap[i])
          ri += a * sq_rho_d * t_ri(i, k) * (a * alloc.c(i, k) * w.s_dl(k) + w.dist_dl(i, k));
      std::complex<double> nn = 0;
      for (int m : map.aps_by_ul[l]) nn += a * (ch.ghat_ul_block(m, l).adjoint() * w.w_ul.col(m))(0, 0);
      std::complex<double> tqd = 0;
      for (int m : map.aps_by_ul[l]) tqd += w.dist_ul(m, l);

      acc_ul[l][static_cast<int>(MomentTerm::DS)].add(std::norm(ds));
      acc_ul[l][static_cast<int>(MomentTerm::BU)].add(std::norm(bu));
      acc_ul[l][static_cast<int>(MomentTerm::MUI)].add(std::norm(mui));
      acc_ul[l][static_cast<int>(MomentTerm::RI)].add(std::norm(ri));
      acc_ul[l][static_cast<int>(MomentTerm::TQD)].add(std::norm(tqd));
      acc_ul[l][static_cast<int>(MomentTerm::N)].add(std::norm(nn));
    }
  }

  // Closed forms per Theorem 1's decomposition.
  MomentTable table;
  table.dl.assign(Kd, std::vector<MomentEstimate>(nterms));
  table.ul.assign(Ku, std::vector<MomentEstimate>(nterms));
  for (int k = 0; k < Kd; ++k) {
    double ds = a * a * Nt * Nt * rho_d;
    {
      double s = 0;
      for (int m : map.aps_by_dl[k]) s += alloc.c(m, k) * scn.gamma_dl(m, k);
      ds *= s * s;
    }
    double bu = 0, mui = 0, tqd_all = 0, tqd_self = 0;
    for (int m : map.aps_by_dl[k])
      bu += alloc.c(m, k) * alloc.c(m, k) * scn.beta_dl(m, k) * scn.gamma_dl(m, k);
    bu *= a * a * Nt * rho_d;
    for (int m = 0; m < M; ++m)
      for (int qq : map.dl_by_ap[m]) {
        double t = alloc.c(m, qq) * alloc.c(m, qq) * scn.beta_dl(m, k) * scn.gamma_dl(m, qq);
        tqd_all += t;
        if (qq != k) mui += t;
      }
    mui *= a * a * Nt * rho_d;
    // The distortion sent to UE k rides the same estimate the precoder uses,
    // so the q = k weight carries the exact fourth-moment term N_t^2 gamma^2
    // on top of the N_t beta gamma the rate expression keeps.
    for (int m : map.aps_by_dl[k])
      tqd_self += alloc.c(m, k) * alloc.c(m, k) * scn.gamma_dl(m, k) * scn.gamma_dl(m, k);
    tqd_self *= Nt * Nt * rho_d;
    double udi = 0;
    for (int l = 0; l < Ku; ++l) udi += scn.beta_udi(k, l) * alloc.theta(l);
    udi *= rho_u;

    auto fill = [&](MomentTerm t, double closed) {
      auto& e = table.dl[k][static_cast<int>(t)];
      const auto& acc = acc_dl[k][static_cast<int>(t)];
      e.closed_form = closed;
      e.mc = acc.mean(trials);
      e.mc_stderr = acc.stderr_of_mean(trials);
    };
    fill(MomentTerm::DS, ds);
    fill(MomentTerm::BU, bu);
    fill(MomentTerm::MUI, mui);
    fill(MomentTerm::UDI, udi);
    fill(MomentTerm::TQD, dvar * (Nt * rho_d * tqd_all + tqd_self));
    fill(MomentTerm::N, 1.0);
  }
  for (int l = 0; l < Ku; ++l) {
    double sum_g = 0, sum_bg = 0, sum_g2 = 0;
    for (int m : map.aps_by_ul[l]) {
      sum_g += scn.gamma_ul(m, l);
      sum_bg += scn.beta_ul(m, l) * scn.gamma_ul(m, l);
      sum_g2 += scn.gamma_ul(m, l) * scn.gamma_ul(m, l);
    }
    (void)sum_g2;
    double ds = a * a * Nr * Nr * rho_u * alloc.theta(l) * sum_g * sum_g;
    double bu = a * a * Nr * rho_u * alloc.theta(l) * sum_bg;
    double mui = 0;
    for (int qq = 0; qq < Ku; ++qq) {
      if (qq == l) continue;
      double s = 0;
      for (int m : map.aps_by_ul[l]) s += scn.gamma_ul(m, l) * scn.beta_ul(m, qq);
      mui += s * alloc.theta(qq);
    }
    mui *= a * a * Nr * rho_u;
    double ri = 0;
    for (int m : map.aps_by_ul[l])
      for (int i = 0; i < M; ++i) {
        double gi = scn.beta_ri(m, i) * cfg.gamma_ri();
        for (int k : map.dl_by_ap[i])
          ri += scn.gamma_ul(m, l) * gi * scn.gamma_dl(i, k) * alloc.c(i, k) * alloc.c(i, k);
      }
    ri *= a * a * b * Nr * Nt * rho_d;
    double tqd = 0;
    for (int m : map.aps_by_ul[l]) tqd += q_ul(m, l);
    tqd *= dvar;
    double nn = a * a * Nr * sum_g;

    auto fill = [&](MomentTerm t, double closed) {
      auto& e = table.ul[l][static_cast<int>(t)];
      const auto& acc = acc_ul[l][static_cast<int>(t)];
      e.closed_form = closed;
      e.mc = acc.mean(trials);
      e.mc_stderr = acc.stderr_of_mean(trials);
    };
    fill(MomentTerm::DS, ds);
    fill(MomentTerm::BU, bu);
    fill(MomentTerm::MUI, mui);
    fill(MomentTerm::RI, ri);
    fill(MomentTerm::TQD, tqd);
    fill(MomentTerm::N, nn);
  }
  return table;
}

MomentEstimate moment_oracle(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                             const PowerAllocation& alloc, const SystemConfig& cfg,
                             MomentTerm term, LinkSide side, int ue, int trials,
                             std::uint64_t seed) {
  if (side == LinkSide::Downlink && term == MomentTerm::RI)
    throw std::invalid_argument("moment_oracle: RI is an uplink-side term");
  if (side == LinkSide::Uplink && term == MomentTerm::UDI)
    throw std::invalid_argument("moment_oracle: UDI is a downlink-side term");
  MomentTable t = moment_table(scn, map, q, alloc, cfg, trials, seed);
  return t.at(side, ue, term);
}

SEReport ergodic_se_mc(const Scenario& scn, const ServiceMap& map, const QuantizerParams& q,
                       const PowerAllocation& alloc, const SystemConfig& cfg, int trials,
                       std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("ergodic_se_mc: trials must be >= 1");
  const int M = static_cast<int>(scn.beta_dl.rows());
  const int Kd = static_cast<int>(scn.beta_dl.cols());
  const int Ku = static_cast<int>(scn.beta_ul.cols());
  const int Nt = cfg.n_tx;
  const double a = q.gain, dvar = q.distortion();
  const double rho_d = cfg.rho_dl(), rho_u = cfg.rho_ul();

  Eigen::MatrixXd q_ul(M, Ku);
  q_ul.setZero();
  for (int l = 0; l < Ku; ++l)
    for (int m : map.aps_by_ul[l]) q_ul(m, l) = ul_mrc_output_power(scn, map, q, alloc, cfg, m, l);

  std::vector<Accum> acc_dl(Kd), acc_ul(Ku);
  Rng root(seed);
  Eigen::MatrixXcd y(M, Kd);
  Eigen::VectorXcd xrow(Kd), zrow(Ku);
  Eigen::MatrixXcd u(Nt, M), t_ri(M, Kd);

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = root.fork(trial);
    ChannelRealization ch = draw_channels(scn, cfg, rng.next_u64());

    for (int k = 0; k < Kd; ++k) {
      for (int m = 0; m < M; ++m) {
        auto gk = ch.g_dl_block(m, k);
        for (int qq = 0; qq < Kd; ++qq)
          y(m, qq) = (gk.transpose() * ch.ghat_dl_block(m, qq).conjugate())(0, 0);
      }
      xrow.setZero();
      for (int qq = 0; qq < Kd; ++qq)
        for (int m : map.aps_by_dl[qq]) xrow(qq) += alloc.c(m, qq) * y(m, qq);
      double sig = a * a * rho_d * std::norm(xrow(k));
      double den = 1.0;
      for (int qq = 0; qq < Kd; ++qq)
        if (qq != k) den += a * a * rho_d * std::norm(xrow(qq));
      for (int l = 0; l < Ku; ++l) den += rho_u * alloc.theta(l) * std::norm(ch.h_udi(k, l));
      for (int m = 0; m < M; ++m)
        for (int qq : map.dl_by_ap[m])
          den += rho_d * std::norm(y(m, qq)) * dvar * alloc.c(m, qq) * alloc.c(m, qq);
      acc_dl[k].add(log2_1p(sig / den));
    }

    for (int l = 0; l < Ku; ++l) {
      zrow.setZero();
      for (int qq = 0; qq < Ku; ++qq)
        for (int m : map.aps_by_ul[l])
          zrow(qq) += (ch.ghat_ul_block(m, l).adjoint() * ch.g_ul_block(m, qq))(0, 0);
      u.setZero();
      for (int i = 0; i < M; ++i)
        for (int m : map.aps_by_ul[l])
          u.col(i) += (ch.ghat_ul_block(m, l).adjoint() * ch.h_ri_block(m, i)).transpose();
      t_ri.setZero();
      for (int i = 0; i < M; ++i)
        for (int k : map.dl_by_ap[i])
          t_ri(i, k) = (u.col(i).transpose() * ch.ghat_dl_block(i, k).conjugate())(0, 0);

      double sig = a * a * rho_u * alloc.theta(l) * std::norm(zrow(l));
      double den = 0;
      for (int qq = 0; qq < Ku; ++qq)
        if (qq != l) den += a * a * rho_u * alloc.theta(qq) * std::norm(zrow(qq));
      // Residual interference: symbols are shared across APs, distortions are
      // independent per (i,k) pair.
      for (int k = 0; k < Kd; ++k) {
        std::complex<double> coh = 0;
        for (int i : map.aps_by_dl[k]) coh += t_ri(i, k) * alloc.c(i, k);
        den += a * a * rho_d * a * a * std::norm(coh);
      }
      for (int i = 0; i < M; ++i)
        for (int k : map.dl_by_ap[i])
          den += a * a * rho_d * dvar * alloc.c(i, k) * alloc.c(i, k) * std::norm(t_ri(i, k));
      double gnorm = 0;
      for (int m : map.aps_by_ul[l]) gnorm += ch.ghat_ul_block(m, l).squaredNorm();
      den += a * a * gnorm;
      for (int m : map.aps_by_ul[l]) den += dvar * q_ul(m, l);
      acc_ul[l].add(log2_1p(sig / den));
    }
  }

  SEReport r;
  r.se_dl.resize(Kd);
  r.se_ul.resize(Ku);
  r.stderr_dl.resize(Kd);
  r.stderr_ul.resize(Ku);
  double tf = cfg.tau_f();
  for (int k = 0; k < Kd; ++k) {
    r.se_dl(k) = tf * acc_dl[k].mean(trials);
    r.stderr_dl(k) = tf * acc_dl[k].stderr_of_mean(trials);
  }
  for (int l = 0; l < Ku; ++l) {
    r.se_ul(l) = tf * acc_ul[l].mean(trials);
    r.stderr_ul(l) = tf * acc_ul[l].stderr_of_mean(trials);
  }
  r.sum_se = r.se_dl.sum() + r.se_ul.sum();
  return r;
}

std::string se_report_csv(const SEReport& lb, const SEReport* ub) {
  std::ostringstream os;
  os.precision(12);
  os << "ue_id,side,se_lb,se_ub,stderr\n";
  for (int k = 0; k < lb.se_dl.size(); ++k) {
    os << k << ",dl," << lb.se_dl(k) << ",";
    if (ub)
      os << ub->se_dl(k) << "," << ub->stderr_dl(k);
    else
      os << ",";
    os << "\n";
  }
  for (int l = 0; l < lb.se_ul.size(); ++l) {
    os << l << ",ul," << lb.se_ul(l) << ",";
    if (ub)
      os << ub->se_ul(l) << "," << ub->stderr_ul(l);
    else
      os << ",";
    os << "\n";
  }
  return os.str();
}

}  // namespace fdcf
