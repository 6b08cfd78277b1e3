// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "cgomax/chart.hpp"
#include "helpers.hpp"

using namespace cgomax;
using namespace cgomax::testing;

TEST_CASE("euclidean disc chart: r = |q - p|, straight rays, eikonal") {
  TransversalGrid tg = TransversalGrid::disc(20, 32);
  ConformalMetric2D met;  // euclidean
  Eigen::Vector2d p(1.1, 0.0);
  PolarChart ch = build_polar_chart(tg, met, p);
  for (int q = 0; q < tg.size(); ++q) {
    double r = std::hypot(tg.x[q] - p[0], tg.y[q] - p[1]);
    CHECK(std::abs(ch.r[q] - r) < 1e-12);
  }
  EikonalReport rep = eikonal_check(tg, ch);
  CHECK(rep.eikonal_err < 1e-12);  // analytic differentials on the flat disc
  CHECK(rep.ortho_err < 1e-12);
  CHECK(rep.min_jac > 0);
  // metric in chart coordinates is diag(1, m): m = r^2 for the flat fan
  for (int q = 0; q < tg.size(); ++q)
    CHECK(std::abs(ch.m[q] - ch.r[q] * ch.r[q]) < 1e-9);
}

TEST_CASE("center inside M0 is rejected") {
  TransversalGrid tg = TransversalGrid::disc(10, 16);
  ConformalMetric2D met;
  CHECK_THROWS(build_polar_chart(tg, met, Eigen::Vector2d(0.5, 0.0)));
}

TEST_CASE("conformally flat chart: r agrees with traced arclength, eikonal O(h)") {
  auto c0 = [](double x, double y) { return 1.0 + 0.1 * (x * x + y * y); };
  ConformalMetric2D met{c0};
  TransversalGrid tg = TransversalGrid::disc(16, 28, c0);
  Eigen::Vector2d p(1.15, 0.0);
  PolarChart ch = build_polar_chart(tg, met, p);

  // independent oracle: dense-fan tracing; nearest sample refined by a
  // quadratic fit in arclength must reproduce r within 1e-6
  Eigen::Vector2d axis = -p.normalized();
  Eigen::Vector2d perp(-axis[1], axis[0]);
  const double step = 5e-4;
  int checked = 0;
  for (int q = 0; q < tg.size(); q += 37) {
    double th = ch.th[q];
    Eigen::Vector2d dir = std::cos(th) * axis + std::sin(th) * perp;
    GeodesicPath path = trace_geodesic(met, p, dir, step, 3.0, 2.0);
    double best = 1e300, bestr = 0;
    for (size_t i = 0; i < path.pts.size(); ++i) {
      double d = (path.pts[i] - Eigen::Vector2d(tg.x[q], tg.y[q])).norm();
      if (d < best) {
        best = d;
        bestr = double(i) * step;
      }
    }
    CHECK(best < 2e-3);  // the ray passes through the node (same theta)
    CHECK(std::abs(bestr - ch.r[q]) < 1e-6 + step);
    ++checked;
  }
  CHECK(checked > 10);

  // the chart differentials are finite differences: eikonal and
  // orthogonality defects are O(h) and must shrink under refinement
  EikonalReport rep = eikonal_check(tg, ch);
  CHECK(rep.eikonal_err < 0.25);
  CHECK(rep.ortho_err < 0.25);
  CHECK(rep.min_jac > 0);
  TransversalGrid tg2 = TransversalGrid::disc(32, 56, c0);
  PolarChart ch2 = build_polar_chart(tg2, met, p);
  EikonalReport rep2 = eikonal_check(tg2, ch2);
  CHECK(rep2.eikonal_err < 0.6 * rep.eikonal_err);
  CHECK(rep2.ortho_err < 0.6 * rep.ortho_err);
}

TEST_CASE("geodesic tracer: unit speed on conformal metrics") {
  auto c0 = [](double x, double y) { return 1.0 + 0.1 * (x * x + y * y); };
  ConformalMetric2D met{c0};
  GeodesicPath path = trace_geodesic(met, {1.15, 0.0}, {-1.0, 0.1}, 1e-3, 2.5, 2.0);
  // g0-speed s = sqrt(c0)|x'| stays 1: verify from consecutive points
  for (size_t i = 20; i + 20 < path.pts.size(); i += 50) {
    Eigen::Vector2d mid = 0.5 * (path.pts[i] + path.pts[i + 1]);
    double v = (path.pts[i + 1] - path.pts[i]).norm() / path.step;
    double speed = std::sqrt(c0(mid[0], mid[1])) * v;
    CHECK(std::abs(speed - 1.0) < 1e-6);
  }
}
