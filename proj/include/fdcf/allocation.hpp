#pragma once

#include <Eigen/Dense>

namespace fdcf {

// Power-control state: c_mk = sqrt(eta_mk) for the downlink (zero on
// unserved pairs) and theta_l in [0,1] for the uplink.
struct PowerAllocation {
  Eigen::MatrixXd c;      // M x K_d
  Eigen::VectorXd theta;  // K_u

  Eigen::MatrixXd eta() const { return c.array().square(); }
};

}  // namespace fdcf
