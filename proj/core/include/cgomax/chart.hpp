// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cgomax/grid.hpp"

namespace cgomax {

// Conformally flat transversal metric g0 = c0(x,y) * e. c0 == nullptr means
// Euclidean. Gradient is computed by central differences unless provided.
struct ConformalMetric2D {
  ScalarMap c0;
  double eval(double x, double y) const { return c0 ? c0(x, y) : 1.0; }
  void grad(double x, double y, double& gx, double& gy) const {
    if (!c0) { gx = gy = 0.0; return; }
    const double h = 1e-6;
    gx = (c0(x + h, y) - c0(x - h, y)) / (2 * h);
    gy = (c0(x, y + h) - c0(x, y - h)) / (2 * h);
  }
  bool euclidean() const { return !c0; }
};

// Unit-speed geodesic of g0 = c0*e traced with RK4.
struct GeodesicPath {
  std::vector<Eigen::Vector2d> pts;  // samples at uniform arclength
  double step = 0.0;
  double length() const { return step * (double(pts.size()) - 1.0); }
};

// Traces from `start` in (euclidean) direction `dir` until g0-arclength
// max_len or until |x| > stop_radius.
GeodesicPath trace_geodesic(const ConformalMetric2D& met, Eigen::Vector2d start,
                            Eigen::Vector2d dir, double step, double max_len,
                            double stop_radius);

// Polar normal coordinates (r, theta) about a center p outside M0. theta is
// the signed initial shooting angle measured against the direction from p to
// the chart's aim point (the disc center), so theta = 0 points at the disc.
struct PolarChart {
  Eigen::Vector2d p;
  double theta_min = 0, theta_max = 0;  // fan range covering M0
  Eigen::VectorXd r, th;                // per transversal node
  Eigen::VectorXd m;                    // |g| in (x1,r,theta) coordinates
  Eigen::VectorXd dr_xi, dr_eta;        // base-chart components of dr
  Eigen::VectorXd dth_xi, dth_eta;      // and of dtheta
  // diagnostics filled at build time
  double eikonal_err = 0;   // max | |dr|_{g0} - 1 |
  double ortho_err = 0;     // max |<dr,dtheta>| / |dr||dtheta|
  double min_jac = 0;       // min of det d(r,theta)/d(chart)
  uint64_t grid_hash = 0;
};

struct EikonalReport {
  double eikonal_err;
  double ortho_err;
  double min_jac;
  bool ok(double tol) const { return eikonal_err < tol && ortho_err < tol && min_jac > 0; }
};

// Builds the chart on the given transversal grid. Throws if p lies inside
// M0 or if geodesic shooting fails to reach a node (focusing / non-simple
// input).
PolarChart build_polar_chart(const TransversalGrid& tg, const ConformalMetric2D& met,
                             const Eigen::Vector2d& p);

EikonalReport eikonal_check(const TransversalGrid& tg, const PolarChart& chart);

// Geodesic distance p -> q by shooting (independent of the chart build's
// internals only in test use; exposed for reuse by the ray transform).
struct ShootResult {
  double r;      // arclength
  double theta;  // initial angle against the aim axis
  bool converged;
};
ShootResult shoot_geodesic(const ConformalMetric2D& met, const Eigen::Vector2d& p,
                           const Eigen::Vector2d& aim_axis, const Eigen::Vector2d& target,
                           double step);

}  // namespace cgomax
