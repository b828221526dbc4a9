#include "fdcf/channel.hpp"

#include <stdexcept>

#include "fdcf/rng.hpp"

namespace fdcf {

ChannelRealization draw_channels(const Scenario& scn, const SystemConfig& cfg,
                                 std::uint64_t seed) {
  const int M = static_cast<int>(scn.beta_dl.rows());
  const int Kd = static_cast<int>(scn.beta_dl.cols());
  const int Ku = static_cast<int>(scn.beta_ul.cols());
  const int Nt = cfg.n_tx;
  const int Nr = cfg.n_rx;

  if (((scn.beta_dl - scn.gamma_dl).array() < -1e-15).any() ||
      ((scn.beta_ul - scn.gamma_ul).array() < -1e-15).any())
    throw std::invalid_argument("draw_channels: scenario violates gamma <= beta");

  ChannelRealization ch;
  ch.num_aps = M;
  ch.num_dl = Kd;
  ch.num_ul = Ku;
  ch.n_tx = Nt;
  ch.n_rx = Nr;
  ch.ghat_dl.resize(M * Nt, Kd);
  ch.err_dl.resize(M * Nt, Kd);
  ch.ghat_ul.resize(M * Nr, Ku);
  ch.err_ul.resize(M * Nr, Ku);
  ch.h_udi.resize(Kd, Ku);
  ch.h_ri.resize(M * Nr, M * Nt);

  Rng rng(seed);
  for (int k = 0; k < Kd; ++k)
    for (int m = 0; m < M; ++m) {
      double g = scn.gamma_dl(m, k);
      double e = std::max(0.0, scn.beta_dl(m, k) - g);
      for (int a = 0; a < Nt; ++a) {
        ch.ghat_dl(m * Nt + a, k) = rng.cnormal(g);
        ch.err_dl(m * Nt + a, k) = rng.cnormal(e);
      }
    }
  for (int l = 0; l < Ku; ++l)
    for (int m = 0; m < M; ++m) {
      double g = scn.gamma_ul(m, l);
      double e = std::max(0.0, scn.beta_ul(m, l) - g);
      for (int a = 0; a < Nr; ++a) {
        ch.ghat_ul(m * Nr + a, l) = rng.cnormal(g);
        ch.err_ul(m * Nr + a, l) = rng.cnormal(e);
      }
    }
  for (int l = 0; l < Ku; ++l)
    for (int k = 0; k < Kd; ++k) ch.h_udi(k, l) = rng.cnormal(scn.beta_udi(k, l));
  double gri = cfg.gamma_ri();
  for (int i = 0; i < M; ++i)
    for (int m = 0; m < M; ++m) {
      double v = scn.beta_ri(m, i) * gri;
      for (int ct = 0; ct < Nt; ++ct)
        for (int cr = 0; cr < Nr; ++cr) ch.h_ri(m * Nr + cr, i * Nt + ct) = rng.cnormal(v);
    }
  return ch;
}

}  // namespace fdcf
