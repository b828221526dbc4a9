#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fdcf/rng.hpp"
#include "fdcf/scenario.hpp"

using namespace fdcf;

namespace {

SystemConfig desk_config() {
  SystemConfig cfg;
  cfg.geometry = {1.0, 8, 4, 4};
  return cfg;
}

}  // namespace

TEST_CASE("place_network degenerate counts and determinism") {
  GeometryConfig g{1.0, 1, 0, 0};
  Layout l = place_network(g, 42);
  REQUIRE(l.aps.size() == 1);
  CHECK(l.dl_ues.empty());
  CHECK(l.ul_ues.empty());
  CHECK(l.aps[0].x >= 0.0);
  CHECK(l.aps[0].x < 1.0);
  CHECK(l.aps[0].y >= 0.0);
  CHECK(l.aps[0].y < 1.0);

  GeometryConfig g2{2.5, 32, 10, 10};
  Layout a = place_network(g2, 7);
  Layout b = place_network(g2, 7);
  REQUIRE(a.aps.size() == 32);
  for (size_t i = 0; i < a.aps.size(); ++i) {
    CHECK(a.aps[i].x == b.aps[i].x);
    CHECK(a.aps[i].y == b.aps[i].y);
  }
  Layout c = place_network(g2, 8);
  bool any_diff = false;
  for (size_t i = 0; i < a.aps.size(); ++i) any_diff |= (a.aps[i].x != c.aps[i].x);
  CHECK(any_diff);
}

TEST_CASE("place_network coordinates are uniform on the square") {
  GeometryConfig g{1.0, 32, 10, 10};
  double sum_x = 0, sum_y = 0;
  int n = 0;
  for (int drop = 0; drop < 10000; ++drop) {
    Layout l = place_network(g, 1000 + drop);
    for (const auto& p : l.aps) {
      sum_x += p.x;
      sum_y += p.y;
      ++n;
    }
    for (const auto& p : l.dl_ues) {
      sum_x += p.x;
      sum_y += p.y;
      ++n;
    }
    for (const auto& p : l.ul_ues) {
      sum_x += p.x;
      sum_y += p.y;
      ++n;
    }
  }
  CHECK(n == 52 * 10000);
  CHECK(std::fabs(sum_x / n - 0.5) < 0.01);
  CHECK(std::fabs(sum_y / n - 0.5) < 0.01);
}

TEST_CASE("wrapped_distance examples") {
  CHECK(wrapped_distance({0, 0}, {0, 0}, 1.0) == 0.0);
  CHECK(wrapped_distance({0.05, 0}, {0.95, 0}, 1.0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(wrapped_distance({0.1, 0.1}, {0.6, 0.9}, 1.0) ==
        doctest::Approx(std::sqrt(0.25 + 0.04)).epsilon(1e-12));
}

TEST_CASE("wrapped_distance is a metric on the torus") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    double D = rng.uniform(0.5, 3.0);
    Point a{rng.uniform(0.0, D), rng.uniform(0.0, D)};
    Point b{rng.uniform(0.0, D), rng.uniform(0.0, D)};
    Point c{rng.uniform(0.0, D), rng.uniform(0.0, D)};
    double dab = wrapped_distance(a, b, D);
    double dba = wrapped_distance(b, a, D);
    double dac = wrapped_distance(a, c, D);
    double dcb = wrapped_distance(c, b, D);
    CHECK(dab == dba);
    CHECK(wrapped_distance(a, a, D) == 0.0);
    CHECK(dab <= dac + dcb + 1e-12);
    CHECK(dab <= std::hypot(D / 2, D / 2) + 1e-12);
  }
}

TEST_CASE("path loss is continuous at both breakpoints and hits the 1 km anchor") {
  PathLossParams p;
  double eps = 1e-12;
  double at_d1_lo = path_loss_db(p.d1_km - eps, p);
  double at_d1_hi = path_loss_db(p.d1_km + eps, p);
  CHECK(at_d1_lo == doctest::Approx(at_d1_hi).epsilon(1e-9));
  double at_d0_lo = path_loss_db(p.d0_km - eps, p);
  double at_d0_hi = path_loss_db(p.d0_km + eps, p);
  CHECK(at_d0_lo == doctest::Approx(at_d0_hi).epsilon(1e-9));
  // Table-I-era constants: f=1900 MHz, h_AP=15 m, h_UE=1.65 m.
  CHECK(path_loss_db(1.0, p) == doctest::Approx(-140.715).epsilon(1e-4));
  CHECK(path_loss_db(2.0, p) < path_loss_db(1.0, p));
  CHECK(path_loss_db(0.3, p) <= 0.0);
}

TEST_CASE("correlated shadowing: delta=1 ties UEs at the same AP together") {
  SystemConfig cfg = desk_config();
  Layout l = place_network(cfg.geometry, 11);
  PathLossParams p = cfg.pathloss;
  p.shadow_delta = 1.0;
  ShadowTerms z = correlated_shadowing(l, p, cfg.geometry.side_km, 5);
  for (int m = 0; m < 8; ++m) {
    for (int k = 1; k < 4; ++k) CHECK(z.z_dl(m, k) == doctest::Approx(z.z_dl(m, 0)).epsilon(1e-12));
    CHECK(z.z_ul(m, 2) == doctest::Approx(z.z_dl(m, 0)).epsilon(1e-12));
  }
}

TEST_CASE("shadowing terms have unit variance and standard-normal marginals") {
  SystemConfig cfg = desk_config();
  Layout l = place_network(cfg.geometry, 21);
  const int draws = 100000;
  std::vector<double> samples;
  samples.reserve(draws);
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < draws; ++i) {
    ShadowTerms z = correlated_shadowing(l, cfg.pathloss, cfg.geometry.side_km, 300 + i);
    double v = z.z_dl(3, 1);
    samples.push_back(v);
    sum += v;
    sum_sq += v * v;
  }
  double mean = sum / draws;
  double var = sum_sq / draws - mean * mean;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0) < 0.02);

  // Kolmogorov-Smirnov against N(0,1) at desk scale.
  std::sort(samples.begin(), samples.end());
  double ks = 0;
  for (int i = 0; i < draws; ++i) {
    double f = 0.5 * std::erfc(-samples[i] / std::sqrt(2.0));
    ks = std::max(ks, std::fabs(f - (i + 1.0) / draws));
    ks = std::max(ks, std::fabs(f - static_cast<double>(i) / draws));
  }
  CHECK(ks < 1.95 / std::sqrt(static_cast<double>(draws)));  // ~alpha 0.001
}

TEST_CASE("AP field correlation is 2^(-d/d_decorr)") {
  // Two APs at exactly the decorrelation distance: correlation 0.5.
  PathLossParams p;
  std::vector<Point> pts{{0.2, 0.2}, {0.2 + p.d_decorr_km, 0.2}};
  const int draws = 100000;
  double s11 = 0, s22 = 0, s12 = 0;
  for (int i = 0; i < draws; ++i) {
    Rng rng(9000 + i);
    Eigen::VectorXd f = gaussian_field(pts, p.d_decorr_km, 1.0, rng);
    s11 += f(0) * f(0);
    s22 += f(1) * f(1);
    s12 += f(0) * f(1);
  }
  double corr = (s12 / draws) / std::sqrt((s11 / draws) * (s22 / draws));
  CHECK(std::fabs(corr - 0.5) < 0.02);
}

TEST_CASE("mmse gamma closed form") {
  // beta = 0 forces gamma = 0.
  CHECK(mmse_gamma(0.0, 10, 1.0) == 0.0);
  // tau rho beta >> 1 drives gamma toward beta.
  double beta = 2.0;
  double g = mmse_gamma(beta, 1, 1e4 / beta);
  CHECK(g / beta > 0.999);
  // tau = 10, rho beta = 1 gives gamma = 10 beta / 11.
  double b2 = 0.37;
  CHECK(mmse_gamma(b2, 10, 1.0 / b2) == doctest::Approx(10.0 * b2 / 11.0).epsilon(1e-12));
}

TEST_CASE("build_scenario invariants") {
  SystemConfig cfg = desk_config();
  Layout l = place_network(cfg.geometry, 33);
  Scenario s = build_scenario(l, cfg.pathloss, cfg, 77);
  REQUIRE(s.beta_dl.rows() == 8);
  REQUIRE(s.beta_dl.cols() == 4);
  CHECK((s.beta_dl.array() >= 0).all());
  CHECK((s.beta_ul.array() >= 0).all());
  CHECK((s.beta_udi.array() >= 0).all());
  CHECK((s.beta_ri.array() >= 0).all());
  CHECK((s.gamma_dl.array() >= 0).all());
  CHECK(((s.beta_dl - s.gamma_dl).array() >= -1e-18).all());
  CHECK(((s.beta_ul - s.gamma_ul).array() >= -1e-18).all());
  for (int m = 0; m < 8; ++m)
    CHECK(s.beta_ri(m, m) == doctest::Approx(std::pow(10.0, cfg.pl_ri_db / 10.0)).epsilon(1e-12));

  // Deterministic given seed.
  Scenario s2 = build_scenario(l, cfg.pathloss, cfg, 77);
  CHECK((s.beta_dl - s2.beta_dl).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.beta_ri - s2.beta_ri).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_scenario rejects nonpositive pilot SNR") {
  SystemConfig cfg = desk_config();
  Layout l = place_network(cfg.geometry, 1);
  cfg.p_pilot_w = 0.0;
  CHECK_THROWS_AS(build_scenario(l, cfg.pathloss, cfg, 1), std::invalid_argument);
}

TEST_CASE("gamma is monotone in tau, rho and beta") {
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    double beta = std::pow(10.0, rng.uniform(-14.0, -6.0));
    double rho = std::pow(10.0, rng.uniform(6.0, 12.0));
    int tau = 1 + static_cast<int>(rng.uniform() * 20);
    double g = mmse_gamma(beta, tau, rho);
    CHECK(g >= 0.0);
    CHECK(g <= beta);
    CHECK(mmse_gamma(beta, tau + 1, rho) >= g);
    CHECK(mmse_gamma(beta, tau, rho * 1.5) >= g);
    CHECK(mmse_gamma(beta * 1.5, tau, rho) >= g);
  }
}

TEST_CASE("unity scenario keeps the intra-AP RI invariant") {
  SystemConfig cfg = desk_config();
  cfg.unity_large_scale = true;
  Scenario s = unity_scenario(cfg);
  CHECK(s.beta_dl.minCoeff() == 1.0);
  CHECK(s.beta_dl.maxCoeff() == 1.0);
  CHECK(s.beta_udi.maxCoeff() == 1.0);
  CHECK(s.beta_ri(0, 0) == doctest::Approx(std::pow(10.0, cfg.pl_ri_db / 10.0)));
  CHECK(s.gamma_dl(0, 0) <= 1.0);
  CHECK(s.gamma_dl(0, 0) > 0.999);  // huge pilot SNR makes estimation near perfect
}
