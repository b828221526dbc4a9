#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fdcf/config.hpp"

namespace fdcf {

struct Point {
  double x = 0;
  double y = 0;
};

struct Layout {
  std::vector<Point> aps;
  std::vector<Point> dl_ues;
  std::vector<Point> ul_ues;
};

// One network drop: every slow-fading quantity downstream code consumes.
// Immutable after construction; safe to share across Monte-Carlo workers.
struct Scenario {
  Eigen::MatrixXd beta_dl;   // M x K_d
  Eigen::MatrixXd beta_ul;   // M x K_u
  Eigen::MatrixXd beta_udi;  // K_d x K_u, UE-to-UE
  Eigen::MatrixXd beta_ri;   // M x M, inter-AP; diagonal is the intra-AP level
  Eigen::MatrixXd gamma_dl;  // M x K_d, MMSE estimate quality
  Eigen::MatrixXd gamma_ul;  // M x K_u
};

Layout place_network(const GeometryConfig& geom, std::uint64_t seed);

// Euclidean distance on the torus [0,D)^2.
double wrapped_distance(const Point& a, const Point& b, double side_km);

// Three-slope model, continuous across both breakpoints. d in km, result dB.
double path_loss_db(double d_km, const PathLossParams& p);

struct ShadowTerms {
  Eigen::MatrixXd z_dl;  // M x K_d
  Eigen::MatrixXd z_ul;  // M x K_u
};

// z = sqrt(delta) a_m + sqrt(1-delta) b_k with unit-variance Gaussian fields
// correlated as 2^(-d/d_decorr) over wrapped distance.
ShadowTerms correlated_shadowing(const Layout& layout, const PathLossParams& p,
                                 double side_km, std::uint64_t seed);

// Spatially correlated standard-normal field over the given points.
Eigen::VectorXd gaussian_field(const std::vector<Point>& pts, double d_decorr_km,
                               double side_km, class Rng& rng);

Scenario build_scenario(const Layout& layout, const PathLossParams& p,
                        const SystemConfig& cfg, std::uint64_t seed);

// Validation mode for the bound-tightness experiment: all AP-UE and UE-UE
// gains are 1, RI gain is the intra-AP level everywhere.
Scenario unity_scenario(const SystemConfig& cfg);

// gamma = tau rho beta^2 / (tau rho beta + 1), the MMSE estimate variance.
double mmse_gamma(double beta, double tau, double rho);

}  // namespace fdcf
