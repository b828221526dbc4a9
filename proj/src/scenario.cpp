#include "fdcf/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "fdcf/rng.hpp"

namespace fdcf {

Layout place_network(const GeometryConfig& geom, std::uint64_t seed) {
  Rng rng(seed);
  auto draw = [&](int n) {
    std::vector<Point> pts(n);
    for (auto& p : pts) {
      p.x = rng.uniform(0.0, geom.side_km);
      p.y = rng.uniform(0.0, geom.side_km);
    }
    return pts;
  };
  Layout layout;
  layout.aps = draw(geom.num_aps);
  layout.dl_ues = draw(geom.num_dl);
  layout.ul_ues = draw(geom.num_ul);
  return layout;
}

double wrapped_distance(const Point& a, const Point& b, double side_km) {
  double dx = std::fabs(a.x - b.x);
  double dy = std::fabs(a.y - b.y);
  dx = std::min(dx, side_km - dx);
  dy = std::min(dy, side_km - dy);
  return std::hypot(dx, dy);
}

double path_loss_db(double d_km, const PathLossParams& p) {
  double L = p.fixed_loss_db();
  if (d_km > p.d1_km) return -L - 35.0 * std::log10(d_km);
  if (d_km > p.d0_km) return -L - 15.0 * std::log10(p.d1_km) - 20.0 * std::log10(d_km);
  return -L - 15.0 * std::log10(p.d1_km) - 20.0 * std::log10(p.d0_km);
}

Eigen::VectorXd gaussian_field(const std::vector<Point>& pts, double d_decorr_km,
                               double side_km, Rng& rng) {
  int n = static_cast<int>(pts.size());
  if (n == 0) return Eigen::VectorXd();
  Eigen::MatrixXd corr(n, n);
  for (int i = 0; i < n; ++i) {
    corr(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      double d = wrapped_distance(pts[i], pts[j], side_km);
      double c = std::exp2(-d / d_decorr_km);
      corr(i, j) = c;
      corr(j, i) = c;
    }
  }
  Eigen::MatrixXd factor;
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() == Eigen::Success) {
    factor = llt.matrixL();
  } else {
    // The wrapped-distance kernel is not guaranteed PD for every layout.
    // Clamp negative modes and renormalize rows so marginals stay N(0,1).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor = es.eigenvectors() * ev.asDiagonal();
    Eigen::VectorXd rn = factor.rowwise().norm();
    for (int i = 0; i < n; ++i)
      if (rn(i) > 0) factor.row(i) /= rn(i);
  }
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = rng.normal();
  return factor * w;
}

ShadowTerms correlated_shadowing(const Layout& layout, const PathLossParams& p,
                                 double side_km, std::uint64_t seed) {
  Rng root(seed);
  Rng rng_a = root.fork(1);
  Rng rng_b = root.fork(2);
  Eigen::VectorXd a = gaussian_field(layout.aps, p.d_decorr_km, side_km, rng_a);
  std::vector<Point> ues = layout.dl_ues;
  ues.insert(ues.end(), layout.ul_ues.begin(), layout.ul_ues.end());
  Eigen::VectorXd b = gaussian_field(ues, p.d_decorr_km, side_km, rng_b);

  int M = static_cast<int>(layout.aps.size());
  int Kd = static_cast<int>(layout.dl_ues.size());
  int Ku = static_cast<int>(layout.ul_ues.size());
  double wa = std::sqrt(p.shadow_delta);
  double wb = std::sqrt(1.0 - p.shadow_delta);
  ShadowTerms z;
  z.z_dl.resize(M, Kd);
  z.z_ul.resize(M, Ku);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < Kd; ++k) z.z_dl(m, k) = wa * a(m) + wb * b(k);
    for (int l = 0; l < Ku; ++l) z.z_ul(m, l) = wa * a(m) + wb * b(Kd + l);
  }
  return z;
}

double mmse_gamma(double beta, double tau, double rho) {
  double trb = tau * rho * beta;
  return trb * beta / (trb + 1.0);
}

namespace {

double shadowed_beta(double pl_db, double sigma_db, double z) {
  return std::pow(10.0, pl_db / 10.0) * std::pow(10.0, sigma_db * z / 10.0);
}

}  // namespace

Scenario build_scenario(const Layout& layout, const PathLossParams& p,
                        const SystemConfig& cfg, std::uint64_t seed) {
  if (cfg.rho_pilot() <= 0.0)
    throw std::invalid_argument("build_scenario: pilot SNR rho_t must be positive");
  if (cfg.tau_t_dl < 1 || cfg.tau_t_ul < 1)
    throw std::invalid_argument("build_scenario: pilot lengths must be >= 1");

  int M = static_cast<int>(layout.aps.size());
  int Kd = static_cast<int>(layout.dl_ues.size());
  int Ku = static_cast<int>(layout.ul_ues.size());
  double D = cfg.geometry.side_km;

  Rng root(seed);
  ShadowTerms z = correlated_shadowing(layout, p, D, root.fork(1).next_u64());

  Scenario scn;
  scn.beta_dl.resize(M, Kd);
  scn.beta_ul.resize(M, Ku);
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < Kd; ++k) {
      double d = wrapped_distance(layout.aps[m], layout.dl_ues[k], D);
      scn.beta_dl(m, k) = shadowed_beta(path_loss_db(d, p), p.sigma_sd_db, z.z_dl(m, k));
    }
    for (int l = 0; l < Ku; ++l) {
      double d = wrapped_distance(layout.aps[m], layout.ul_ues[l], D);
      scn.beta_ul(m, l) = shadowed_beta(path_loss_db(d, p), p.sigma_sd_db, z.z_ul(m, l));
    }
  }

  // UE-to-UE links reuse the same recipe; both endpoints sit at UE height.
  // Shadowing fields are drawn fresh, independent of the AP-link fields.
  {
    PathLossParams pue = p;
    pue.h_ap_m = p.h_ue_m;
    Rng rd = root.fork(2);
    Rng ru = root.fork(3);
    Eigen::VectorXd fd = gaussian_field(layout.dl_ues, p.d_decorr_km, D, rd);
    Eigen::VectorXd fu = gaussian_field(layout.ul_ues, p.d_decorr_km, D, ru);
    double wa = std::sqrt(p.shadow_delta);
    double wb = std::sqrt(1.0 - p.shadow_delta);
    scn.beta_udi.resize(Kd, Ku);
    for (int k = 0; k < Kd; ++k)
      for (int l = 0; l < Ku; ++l) {
        double d = wrapped_distance(layout.dl_ues[k], layout.ul_ues[l], D);
        double zz = wa * fd(k) + wb * fu(l);
        scn.beta_udi(k, l) = shadowed_beta(path_loss_db(d, pue), p.sigma_sd_db, zz);
      }
  }

  // Inter-AP RI links: same recipe, fresh fields; the intra-AP level is a
  // fixed isolation constant with no shadowing.
  {
    Rng r1 = root.fork(4);
    Rng r2 = root.fork(5);
    Eigen::VectorXd f1 = gaussian_field(layout.aps, p.d_decorr_km, D, r1);
    Eigen::VectorXd f2 = gaussian_field(layout.aps, p.d_decorr_km, D, r2);
    double wa = std::sqrt(p.shadow_delta);
    double wb = std::sqrt(1.0 - p.shadow_delta);
    scn.beta_ri.resize(M, M);
    for (int m = 0; m < M; ++m) {
      scn.beta_ri(m, m) = cfg.beta_ri_intra();
      for (int i = 0; i < M; ++i) {
        if (i == m) continue;
        double d = wrapped_distance(layout.aps[m], layout.aps[i], D);
        double zz = wa * f1(m) + wb * f2(i);
        scn.beta_ri(m, i) = shadowed_beta(path_loss_db(d, p), p.sigma_sd_db, zz);
      }
    }
  }

  scn.gamma_dl.resize(M, Kd);
  scn.gamma_ul.resize(M, Ku);
  double rho_t = cfg.rho_pilot();
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < Kd; ++k)
      scn.gamma_dl(m, k) = mmse_gamma(scn.beta_dl(m, k), cfg.tau_t_dl, rho_t);
    for (int l = 0; l < Ku; ++l)
      scn.gamma_ul(m, l) = mmse_gamma(scn.beta_ul(m, l), cfg.tau_t_ul, rho_t);
  }
  return scn;
}

Scenario unity_scenario(const SystemConfig& cfg) {
  int M = cfg.geometry.num_aps;
  int Kd = cfg.geometry.num_dl;
  int Ku = cfg.geometry.num_ul;
  Scenario scn;
  scn.beta_dl = Eigen::MatrixXd::Ones(M, Kd);
  scn.beta_ul = Eigen::MatrixXd::Ones(M, Ku);
  scn.beta_udi = Eigen::MatrixXd::Ones(Kd, Ku);
  scn.beta_ri = Eigen::MatrixXd::Constant(M, M, cfg.beta_ri_intra());
  scn.gamma_dl.resize(M, Kd);
  scn.gamma_ul.resize(M, Ku);
  double rho_t = cfg.rho_pilot();
  for (int m = 0; m < M; ++m) {
    for (int k = 0; k < Kd; ++k) scn.gamma_dl(m, k) = mmse_gamma(1.0, cfg.tau_t_dl, rho_t);
    for (int l = 0; l < Ku; ++l) scn.gamma_ul(m, l) = mmse_gamma(1.0, cfg.tau_t_ul, rho_t);
  }
  return scn;
}

}  // namespace fdcf
