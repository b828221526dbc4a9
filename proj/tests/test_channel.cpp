#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "fdcf/channel.hpp"
#include "fdcf/scenario.hpp"

using namespace fdcf;

namespace {

// Small hand-built scenario with chosen beta/gamma so moments are exact.
Scenario toy_scenario(int M, int Kd, int Ku, double beta, double gamma) {
  Scenario s;
  s.beta_dl = Eigen::MatrixXd::Constant(M, Kd, beta);
  s.beta_ul = Eigen::MatrixXd::Constant(M, Ku, beta);
  s.beta_udi = Eigen::MatrixXd::Constant(Kd, Ku, beta);
  s.beta_ri = Eigen::MatrixXd::Constant(M, M, beta);
  s.gamma_dl = Eigen::MatrixXd::Constant(M, Kd, gamma);
  s.gamma_ul = Eigen::MatrixXd::Constant(M, Ku, gamma);
  return s;
}

SystemConfig toy_config(int M, int Kd, int Ku, int N) {
  SystemConfig cfg;
  cfg.geometry = {1.0, M, Kd, Ku};
  cfg.n_tx = N;
  cfg.n_rx = N;
  cfg.tau_t_dl = std::max(Kd, 1);
  cfg.tau_t_ul = std::max(Ku, 1);
  return cfg;
}

}  // namespace

TEST_CASE("gamma = beta makes the estimation error identically zero") {
  Scenario s = toy_scenario(2, 2, 2, 0.8, 0.8);
  SystemConfig cfg = toy_config(2, 2, 2, 2);
  ChannelRealization ch = draw_channels(s, cfg, 5);
  CHECK(ch.err_dl.cwiseAbs().maxCoeff() == 0.0);
  CHECK(ch.err_ul.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("draw_channels rejects beta < gamma") {
  Scenario s = toy_scenario(1, 1, 1, 0.5, 0.7);
  SystemConfig cfg = toy_config(1, 1, 1, 1);
  CHECK_THROWS_AS(draw_channels(s, cfg, 1), std::invalid_argument);
}

TEST_CASE("identical seed gives a bit-identical realization") {
  Scenario s = toy_scenario(3, 2, 2, 1.0, 0.6);
  SystemConfig cfg = toy_config(3, 2, 2, 2);
  ChannelRealization a = draw_channels(s, cfg, 123);
  ChannelRealization b = draw_channels(s, cfg, 123);
  CHECK((a.ghat_dl - b.ghat_dl).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.err_ul - b.err_ul).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.h_ri - b.h_ri).cwiseAbs().maxCoeff() == 0.0);
  ChannelRealization c = draw_channels(s, cfg, 124);
  CHECK((a.ghat_dl - c.ghat_dl).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("estimate second moment matches N gamma") {
  const double beta = 1.3, gamma = 0.9;
  const int N = 2, trials = 100000;
  Scenario s = toy_scenario(1, 1, 1, beta, gamma);
  SystemConfig cfg = toy_config(1, 1, 1, N);
  double acc = 0;
  for (int t = 0; t < trials; ++t) {
    ChannelRealization ch = draw_channels(s, cfg, 10000 + t);
    acc += ch.ghat_dl_block(0, 0).squaredNorm();
  }
  acc /= trials;
  CHECK(acc == doctest::Approx(N * gamma).epsilon(0.02));
}

TEST_CASE("cross moment E|ghat^H g_q|^2 = N gamma beta for q != l") {
  const double beta = 0.7, gamma = 0.4;
  const int N = 2, trials = 100000;
  Scenario s = toy_scenario(1, 1, 2, beta, gamma);
  SystemConfig cfg = toy_config(1, 1, 2, N);
  double acc = 0;
  for (int t = 0; t < trials; ++t) {
    ChannelRealization ch = draw_channels(s, cfg, 50000 + t);
    std::complex<double> v = (ch.ghat_ul_block(0, 0).adjoint() * ch.g_ul_block(0, 1))(0, 0);
    acc += std::norm(v);
  }
  acc /= trials;
  CHECK(acc == doctest::Approx(N * gamma * beta).epsilon(0.02));
}

TEST_CASE("fourth moment E||ghat||^4 = N(N+1) gamma^2") {
  const double gamma = 0.8;
  const int N = 2, trials = 100000;
  Scenario s = toy_scenario(1, 1, 1, 1.0, gamma);
  SystemConfig cfg = toy_config(1, 1, 1, N);
  double acc = 0;
  for (int t = 0; t < trials; ++t) {
    ChannelRealization ch = draw_channels(s, cfg, 90000 + t);
    double n2 = ch.ghat_ul_block(0, 0).squaredNorm();
    acc += n2 * n2;
  }
  acc /= trials;
  CHECK(acc == doctest::Approx(N * (N + 1) * gamma * gamma).epsilon(0.03));
}

TEST_CASE("estimate and error are uncorrelated") {
  const int trials = 100000;
  Scenario s = toy_scenario(1, 1, 1, 1.0, 0.5);
  SystemConfig cfg = toy_config(1, 1, 1, 1);
  std::complex<double> acc = 0;
  for (int t = 0; t < trials; ++t) {
    ChannelRealization ch = draw_channels(s, cfg, 777 + t);
    acc += ch.ghat_dl(0, 0) * std::conj(ch.err_dl(0, 0));
  }
  acc /= static_cast<double>(trials);
  // E{ghat e*} = 0; sample correlation scale is sqrt(g(b-g))/sqrt(T) ~ 0.0016.
  CHECK(std::abs(acc) < 0.006);
}

TEST_CASE("udi and ri channels follow their stated variances") {
  const double beta = 0.6;
  SystemConfig cfg = toy_config(2, 1, 1, 1);
  cfg.gamma_ri_db = -20.0;
  Scenario s = toy_scenario(2, 1, 1, beta, 0.3);
  const int trials = 100000;
  double udi = 0, ri = 0;
  for (int t = 0; t < trials; ++t) {
    ChannelRealization ch = draw_channels(s, cfg, 31000 + t);
    udi += std::norm(ch.h_udi(0, 0));
    ri += std::norm(ch.h_ri_block(0, 1)(0, 0));
  }
  CHECK(udi / trials == doctest::Approx(beta).epsilon(0.02));
  CHECK(ri / trials == doctest::Approx(beta * 0.01).epsilon(0.02));
}
