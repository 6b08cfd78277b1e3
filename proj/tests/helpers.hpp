// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>

#include "cgomax/exterior.hpp"
#include "cgomax/grid.hpp"

namespace cgomax::testing {

// ---- grid factories -----------------------------------------------------

inline CylinderGrid disc_cylinder(int n1, double X1, int nr, int nphi,
                                  const CylinderGrid::ConformalMap3& c = nullptr,
                                  const ScalarMap& c0 = nullptr) {
  Grid1D gx(n1, X1);
  TransversalGrid tg = TransversalGrid::disc(nr, nphi, c0);
  return CylinderGrid::build(gx, tg, c);
}

inline CylinderGrid rect_cylinder(int n1, double X1, int nx, int ny, double Lx, double Ly) {
  Grid1D gx(n1, X1);
  TransversalGrid tg = TransversalGrid::rect(nx, ny, Lx, Ly);
  return CylinderGrid::build(gx, tg);
}

// ---- smooth random test data --------------------------------------------

// Exactly compactly supported radial bump profile exp(1 - 1/(1-s^2)).
inline double bump01(double s) { return bump(s); }

// Transversal center and interior radius of the chart domain.
inline void domain_center(const TransversalGrid& tg, double& cx, double& cy, double& rad) {
  if (tg.kind == ChartKind::PolarDisc) {
    cx = cy = 0.0;
    rad = tg.Lxi;
  } else {
    cx = 0.5 * tg.Lxi;
    cy = 0.5 * tg.Leta;
    rad = 0.5 * std::min(tg.Lxi, tg.Leta);
  }
}

// Smooth complex field supported in |x1| <= x1supp and within supp_frac of
// the transversal domain radius, built from a few random gaussians under a
// hard bump envelope.
inline Field random_compact_field(const CylinderGrid& G, Rng& rng, double x1supp = 0.6,
                                  double supp_frac = 0.75, int nblob = 3) {
  double cx, cy, rad;
  domain_center(G.tg, cx, cy, rad);
  double rs = supp_frac * rad;
  struct Blob {
    double cx1, cx, cy, s;
    cplx amp;
  };
  std::vector<Blob> blobs;
  for (int b = 0; b < nblob; ++b) {
    Blob bl;
    bl.cx1 = urand(rng, -0.5, 0.5) * x1supp;
    bl.cx = cx + urand(rng, -0.4, 0.4) * rs;
    bl.cy = cy + urand(rng, -0.4, 0.4) * rs;
    bl.s = urand(rng, 0.15, 0.4) * std::max(1.0, rs);
    bl.amp = cplx(urand(rng, -1, 1), urand(rng, -1, 1));
    blobs.push_back(bl);
  }
  Field f = zero_field(G);
  const int nt = G.tg.size();
  for (int i1 = 0; i1 < G.gx.n; ++i1) {
    double x1 = G.gx.x(i1);
    double env1 = bump(x1 / x1supp);
    if (env1 == 0) continue;
    for (int q = 0; q < nt; ++q) {
      double x = G.tg.x[q], y = G.tg.y[q];
      double rho = std::hypot(x - cx, y - cy);
      double env = env1 * bump(rho / rs);
      if (env == 0) continue;
      cplx v = 0;
      for (const auto& bl : blobs) {
        double d2 = sq(x1 - bl.cx1) + sq(x - bl.cx) + sq(y - bl.cy);
        v += bl.amp * std::exp(-d2 / (2 * bl.s * bl.s));
      }
      f[i1 * nt + q] = env * v;
    }
  }
  return f;
}

inline GradedForm random_compact_graded(const CylinderGrid& G, Rng& rng, double x1supp = 0.6,
                                        double rho_supp = 0.75) {
  GradedForm X = GradedForm::zero(G);
  for (int s = 0; s < GradedForm::kSlots; ++s)
    X.slot(s) = random_compact_field(G, rng, x1supp, rho_supp, 2);
  return X;
}

// ---- special function oracles -------------------------------------------

// First positive zero of J0 by bisection (oracle for the disc Dirichlet
// ground state).
inline double bessel_j0_zero1() {
  auto f = [](double x) { return std::cyl_bessel_j(0.0, x); };
  double a = 2.0, b = 3.0;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b);
    if (f(a) * f(m) <= 0)
      b = m;
    else
      a = m;
  }
  return 0.5 * (a + b);
}

// First positive zero of J1' (oracle for the smallest positive Neumann
// eigenvalue of the unit disc). J1'(x) = (J0(x) - J2(x))/2.
inline double bessel_j1prime_zero1() {
  auto f = [](double x) {
    return 0.5 * (std::cyl_bessel_j(0.0, x) - std::cyl_bessel_j(2.0, x));
  };
  double a = 1.2, b = 2.5;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b);
    if (f(a) * f(m) <= 0)
      b = m;
    else
      a = m;
  }
  return 0.5 * (a + b);
}

// Smooth, effectively compactly supported random line profile: low-order
// trigonometric content under a gaussian envelope.
inline Eigen::VectorXcd smooth_line_profile(Rng& rng, int n, const std::function<double(int)>& xat,
                                            double width = 2.0, int modes = 5) {
  std::vector<cplx> c(size_t(modes + 1));
  for (auto& v : c) v = cplx(urand(rng, -1, 1), urand(rng, -1, 1));
  Eigen::VectorXcd w(n);
  for (int j = 0; j < n; ++j) {
    double x = xat(j);
    cplx acc = 0;
    for (int m = 0; m <= modes; ++m) acc += c[size_t(m)] * std::cos(0.5 * m * x + 0.2 * m);
    w[j] = acc * std::exp(-x * x / (2.0 * width * width));
  }
  return w;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

}  // namespace cgomax::testing
