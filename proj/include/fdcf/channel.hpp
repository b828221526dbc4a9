#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "fdcf/config.hpp"
#include "fdcf/scenario.hpp"

namespace fdcf {

// One coherence block of small-scale fading: MMSE estimates, estimation
// errors, UE-to-UE scalars and the residual AP-to-AP channels. Per-AP blocks
// are stacked along rows: block m of column k is rows [m*N, (m+1)*N).
struct ChannelRealization {
  int num_aps = 0, num_dl = 0, num_ul = 0, n_tx = 0, n_rx = 0;
  Eigen::MatrixXcd ghat_dl, err_dl;  // (M*N_t) x K_d
  Eigen::MatrixXcd ghat_ul, err_ul;  // (M*N_r) x K_u
  Eigen::MatrixXcd h_udi;            // K_d x K_u
  Eigen::MatrixXcd h_ri;             // (M*N_r) x (M*N_t), block (m,i)

  auto ghat_dl_block(int m, int k) const { return ghat_dl.block(m * n_tx, k, n_tx, 1); }
  auto g_dl_block(int m, int k) const {
    return ghat_dl.block(m * n_tx, k, n_tx, 1) + err_dl.block(m * n_tx, k, n_tx, 1);
  }
  auto ghat_ul_block(int m, int l) const { return ghat_ul.block(m * n_rx, l, n_rx, 1); }
  auto g_ul_block(int m, int l) const {
    return ghat_ul.block(m * n_rx, l, n_rx, 1) + err_ul.block(m * n_rx, l, n_rx, 1);
  }
  auto h_ri_block(int m, int i) const { return h_ri.block(m * n_rx, i * n_tx, n_rx, n_tx); }
};

// Estimates and errors are drawn directly from their marginal CN(0,gamma) and
// CN(0,beta-gamma) laws (statistically equivalent to pilot projection under
// orthogonal pilots). Deterministic for a given seed; throws if the scenario
// has beta < gamma anywhere.
ChannelRealization draw_channels(const Scenario& scn, const SystemConfig& cfg,
                                 std::uint64_t seed);

}  // namespace fdcf
