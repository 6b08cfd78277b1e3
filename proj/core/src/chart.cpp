// SPDX-License-Identifier: Apache-2.0
#include "cgomax/chart.hpp"

#include <cmath>
#include <stdexcept>

namespace cgomax {

namespace {

// Geodesic ODE for g0 = c0 * e in 2D with sigma = log(c0)/2:
//   x'' = -2 (x'.grad sigma) x' + |x'|_e^2 grad sigma,
// parametrized so that |x'|_{g0} = 1, i.e. |x'|_e = c0^{-1/2}.
struct GeoState {
  Eigen::Vector2d x, v;
};

GeoState geo_rhs(const ConformalMetric2D& met, const GeoState& s) {
  double gx, gy;
  met.grad(s.x[0], s.x[1], gx, gy);
  double c = met.eval(s.x[0], s.x[1]);
  Eigen::Vector2d gs(gx / (2 * c), gy / (2 * c));  // grad sigma
  GeoState d;
  d.x = s.v;
  d.v = -2.0 * s.v.dot(gs) * s.v + s.v.squaredNorm() * gs;
  return d;
}

GeoState rk4_step(const ConformalMetric2D& met, const GeoState& s, double h) {
  GeoState k1 = geo_rhs(met, s);
  GeoState s2{s.x + 0.5 * h * k1.x, s.v + 0.5 * h * k1.v};
  GeoState k2 = geo_rhs(met, s2);
  GeoState s3{s.x + 0.5 * h * k2.x, s.v + 0.5 * h * k2.v};
  GeoState k3 = geo_rhs(met, s3);
  GeoState s4{s.x + h * k3.x, s.v + h * k3.v};
  GeoState k4 = geo_rhs(met, s4);
  GeoState out;
  out.x = s.x + h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
  out.v = s.v + h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
  return out;
}

Eigen::Vector2d geo_point(const ConformalMetric2D& met, const Eigen::Vector2d& p,
                          double angle, const Eigen::Vector2d& axis, double len, double step) {
  Eigen::Vector2d perp(-axis[1], axis[0]);
  Eigen::Vector2d dir = std::cos(angle) * axis + std::sin(angle) * perp;
  double c = met.eval(p[0], p[1]);
  GeoState s{p, dir / std::sqrt(c)};
  int nfull = int(std::floor(len / step));
  for (int i = 0; i < nfull; ++i) s = rk4_step(met, s, step);
  double rem = len - nfull * step;
  if (rem > 0) s = rk4_step(met, s, rem);
  return s.x;
}

}  // namespace

GeodesicPath trace_geodesic(const ConformalMetric2D& met, Eigen::Vector2d start,
                            Eigen::Vector2d dir, double step, double max_len,
                            double stop_radius) {
  GeodesicPath path;
  path.step = step;
  double c = met.eval(start[0], start[1]);
  GeoState s{start, dir.normalized() / std::sqrt(c)};
  path.pts.push_back(s.x);
  int nmax = int(std::ceil(max_len / step));
  for (int i = 0; i < nmax; ++i) {
    s = rk4_step(met, s, step);
    path.pts.push_back(s.x);
    if (s.x.norm() > stop_radius) break;
  }
  return path;
}

ShootResult shoot_geodesic(const ConformalMetric2D& met, const Eigen::Vector2d& p,
                           const Eigen::Vector2d& aim_axis, const Eigen::Vector2d& target,
                           double step) {
  // Euclidean initial guess.
  Eigen::Vector2d u = target - p;
  Eigen::Vector2d perp(-aim_axis[1], aim_axis[0]);
  double th = std::atan2(u.dot(perp), u.dot(aim_axis));
  double r = u.norm();
  if (met.euclidean()) return {r, th, true};

  // 2D Newton on endpoint(theta, r) = target with FD Jacobian.
  for (int it = 0; it < 40; ++it) {
    Eigen::Vector2d e = geo_point(met, p, th, aim_axis, r, step);
    Eigen::Vector2d res = e - target;
    if (res.norm() < 1e-10) return {r, th, true};
    const double dth = 1e-6, drr = 1e-6;
    Eigen::Vector2d e1 = geo_point(met, p, th + dth, aim_axis, r, step);
    Eigen::Vector2d e2 = geo_point(met, p, th, aim_axis, r + drr, step);
    Eigen::Matrix2d J;
    J.col(0) = (e1 - e) / dth;
    J.col(1) = (e2 - e) / drr;
    Eigen::Vector2d upd = J.colPivHouseholderQr().solve(res);
    th -= upd[0];
    r -= upd[1];
    if (r <= 0) r = u.norm();
  }
  Eigen::Vector2d e = geo_point(met, p, th, aim_axis, r, step);
  return {r, th, (e - target).norm() < 1e-7};
}

PolarChart build_polar_chart(const TransversalGrid& tg, const ConformalMetric2D& met,
                             const Eigen::Vector2d& p) {
  if (tg.kind == ChartKind::PolarDisc && p.norm() <= tg.Lxi)
    throw std::invalid_argument("build_polar_chart: center must lie outside M0");

  PolarChart ch;
  ch.p = p;
  ch.grid_hash = tg.hash();
  const int n = tg.size();
  ch.r.resize(n);
  ch.th.resize(n);
  Eigen::Vector2d axis = -p.normalized();  // aim at the disc center
  const double step = 2e-3;
  for (int q = 0; q < n; ++q) {
    Eigen::Vector2d target(tg.x[q], tg.y[q]);
    ShootResult sr = shoot_geodesic(met, p, axis, target, step);
    if (!sr.converged)
      throw std::runtime_error("build_polar_chart: geodesic shooting failed (non-simple input?)");
    ch.r[q] = sr.r;
    ch.th[q] = sr.theta;
  }
  ch.theta_min = ch.th.minCoeff();
  ch.theta_max = ch.th.maxCoeff();

  if (met.euclidean()) {
    // analytic differentials of r = |q-p| and theta = atan2(u.perp, u.axis)
    Eigen::Vector2d perp(-axis[1], axis[0]);
    ch.dr_xi.resize(n); ch.dr_eta.resize(n);
    ch.dth_xi.resize(n); ch.dth_eta.resize(n);
    for (int q = 0; q < n; ++q) {
      Eigen::Vector2d u(tg.x[q] - p[0], tg.y[q] - p[1]);
      double r = u.norm();
      Eigen::Vector2d grad_r = u / r;
      Eigen::Vector2d grad_th = (u.dot(axis) * perp - u.dot(perp) * axis) / (r * r);
      // chain rule into chart coordinates
      double cx, cy, ex, ey;
      if (tg.kind == ChartKind::PolarDisc) {
        double rho = std::hypot(tg.x[q], tg.y[q]);
        double phi = std::atan2(tg.y[q], tg.x[q]);
        cx = std::cos(phi); cy = std::sin(phi);        // d(x,y)/d rho
        ex = -rho * std::sin(phi); ey = rho * std::cos(phi);  // d(x,y)/d phi
      } else {
        cx = 1; cy = 0; ex = 0; ey = 1;
      }
      ch.dr_xi[q] = grad_r[0] * cx + grad_r[1] * cy;
      ch.dr_eta[q] = grad_r[0] * ex + grad_r[1] * ey;
      ch.dth_xi[q] = grad_th[0] * cx + grad_th[1] * cy;
      ch.dth_eta[q] = grad_th[0] * ex + grad_th[1] * ey;
    }
  } else {
    // finite differences of the shot fields on the chart grid
    auto fd = [&](const Eigen::VectorXd& f, bool along_xi) {
      Eigen::VectorXd out(n);
      if (along_xi) {
        for (int i = 0; i < tg.nxi; ++i)
          for (int j = 0; j < tg.neta; ++j) {
            int q = tg.idx(i, j);
            if (i == 0 && tg.has_origin_closure()) {
              double ghost = f[tg.idx(0, tg.origin_partner(j))];
              out[q] = (f[tg.idx(1, j)] - ghost) / (2 * tg.hxi);
            } else if (i == 0) {
              out[q] = (-3 * f[q] + 4 * f[q + tg.neta] - f[q + 2 * tg.neta]) / (2 * tg.hxi);
            } else if (i == tg.nxi - 1) {
              out[q] = (3 * f[q] - 4 * f[q - tg.neta] + f[q - 2 * tg.neta]) / (2 * tg.hxi);
            } else {
              out[q] = (f[q + tg.neta] - f[q - tg.neta]) / (2 * tg.hxi);
            }
          }
      } else {
        for (int i = 0; i < tg.nxi; ++i)
          for (int j = 0; j < tg.neta; ++j) {
            int q = tg.idx(i, j);
            if (tg.eta_periodic) {
              int jp = (j + 1) % tg.neta, jm = (j + tg.neta - 1) % tg.neta;
              out[q] = (f[tg.idx(i, jp)] - f[tg.idx(i, jm)]) / (2 * tg.heta);
            } else if (j == 0) {
              out[q] = (-3 * f[q] + 4 * f[q + 1] - f[q + 2]) / (2 * tg.heta);
            } else if (j == tg.neta - 1) {
              out[q] = (3 * f[q] - 4 * f[q - 1] + f[q - 2]) / (2 * tg.heta);
            } else {
              out[q] = (f[q + 1] - f[q - 1]) / (2 * tg.heta);
            }
          }
      }
      return out;
    };
    ch.dr_xi = fd(ch.r, true);
    ch.dr_eta = fd(ch.r, false);
    ch.dth_xi = fd(ch.th, true);
    ch.dth_eta = fd(ch.th, false);
  }

  // |g| in chart coordinates from the coordinate Jacobian:
  // det g_chart = det g0 / J^2 with J = det d(r,theta)/d(xi,eta).
  ch.m.resize(n);
  ch.min_jac = 1e300;
  ch.eikonal_err = 0;
  ch.ortho_err = 0;
  for (int q = 0; q < n; ++q) {
    double J = ch.dr_xi[q] * ch.dth_eta[q] - ch.dr_eta[q] * ch.dth_xi[q];
    ch.min_jac = std::min(ch.min_jac, std::abs(J));
    double det0 = tg.g11[q] * tg.g22[q] - tg.g12[q] * tg.g12[q];
    ch.m[q] = det0 / (J * J);
    double nr2 = tg.gi11[q] * ch.dr_xi[q] * ch.dr_xi[q] +
                 2 * tg.gi12[q] * ch.dr_xi[q] * ch.dr_eta[q] +
                 tg.gi22[q] * ch.dr_eta[q] * ch.dr_eta[q];
    double nth2 = tg.gi11[q] * ch.dth_xi[q] * ch.dth_xi[q] +
                  2 * tg.gi12[q] * ch.dth_xi[q] * ch.dth_eta[q] +
                  tg.gi22[q] * ch.dth_eta[q] * ch.dth_eta[q];
    double dot = tg.gi11[q] * ch.dr_xi[q] * ch.dth_xi[q] +
                 tg.gi12[q] * (ch.dr_xi[q] * ch.dth_eta[q] + ch.dr_eta[q] * ch.dth_xi[q]) +
                 tg.gi22[q] * ch.dr_eta[q] * ch.dth_eta[q];
    ch.eikonal_err = std::max(ch.eikonal_err, std::abs(std::sqrt(nr2) - 1.0));
    ch.ortho_err = std::max(ch.ortho_err, std::abs(dot) / std::sqrt(nr2 * nth2));
  }
  if (ch.min_jac <= 0)
    throw std::runtime_error("build_polar_chart: degenerate chart (geodesics focus)");
  return ch;
}

EikonalReport eikonal_check(const TransversalGrid&, const PolarChart& chart) {
  return {chart.eikonal_err, chart.ortho_err, chart.min_jac};
}

}  // namespace cgomax
