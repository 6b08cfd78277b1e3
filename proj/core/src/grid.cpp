// SPDX-License-Identifier: Apache-2.0
#include "cgomax/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cgomax {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TransversalGrid TransversalGrid::disc(int nr, int nphi, const ScalarMap& conformal,
                                      double radius) {
  if (nphi % 2 != 0) throw std::invalid_argument("disc grid: nphi must be even");
  TransversalGrid g;
  g.kind = ChartKind::PolarDisc;
  g.nxi = nr;
  g.neta = nphi;
  g.Lxi = radius;
  g.Leta = kTwoPi;
  g.hxi = radius / nr;
  g.heta = kTwoPi / nphi;
  g.eta_periodic = true;
  const int n = g.size();
  g.x.resize(n); g.y.resize(n);
  g.xj_xi.resize(n); g.xj_eta.resize(n); g.yj_xi.resize(n); g.yj_eta.resize(n);
  g.g11.resize(n); g.g12.resize(n); g.g22.resize(n);
  g.gi11.resize(n); g.gi12.resize(n); g.gi22.resize(n);
  g.sqrtg.resize(n); g.dV.resize(n);
  for (int i = 0; i < nr; ++i) {
    double rho = g.xi(i);
    for (int j = 0; j < nphi; ++j) {
      double phi = g.eta(j);
      int p = g.idx(i, j);
      g.x[p] = rho * std::cos(phi);
      g.y[p] = rho * std::sin(phi);
      g.xj_xi[p] = std::cos(phi);
      g.xj_eta[p] = -rho * std::sin(phi);
      g.yj_xi[p] = std::sin(phi);
      g.yj_eta[p] = rho * std::cos(phi);
      double c0 = conformal ? conformal(g.x[p], g.y[p]) : 1.0;
      if (c0 <= 0.0) throw std::invalid_argument("disc grid: conformal factor must be positive");
      g.g11[p] = c0;
      g.g12[p] = 0.0;
      g.g22[p] = c0 * rho * rho;
      g.gi11[p] = 1.0 / c0;
      g.gi12[p] = 0.0;
      g.gi22[p] = 1.0 / (c0 * rho * rho);
      g.sqrtg[p] = c0 * rho;
      g.dV[p] = g.sqrtg[p] * g.hxi * g.heta;
    }
  }
  return g;
}

TransversalGrid TransversalGrid::rect(int nx, int ny, double Lx, double Ly,
                                      const ScalarMap& conformal) {
  TransversalGrid g;
  g.kind = ChartKind::Rect;
  g.nxi = nx;
  g.neta = ny;
  g.Lxi = Lx;
  g.Leta = Ly;
  g.hxi = Lx / nx;
  g.heta = Ly / ny;
  g.eta_periodic = false;
  const int n = g.size();
  g.x.resize(n); g.y.resize(n);
  g.xj_xi.resize(n); g.xj_eta.resize(n); g.yj_xi.resize(n); g.yj_eta.resize(n);
  g.g11.resize(n); g.g12.resize(n); g.g22.resize(n);
  g.gi11.resize(n); g.gi12.resize(n); g.gi22.resize(n);
  g.sqrtg.resize(n); g.dV.resize(n);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      int p = g.idx(i, j);
      g.x[p] = g.xi(i);
      g.y[p] = g.eta(j);
      g.xj_xi[p] = 1.0; g.xj_eta[p] = 0.0;
      g.yj_xi[p] = 0.0; g.yj_eta[p] = 1.0;
      double c0 = conformal ? conformal(g.x[p], g.y[p]) : 1.0;
      if (c0 <= 0.0) throw std::invalid_argument("rect grid: conformal factor must be positive");
      g.g11[p] = c0;
      g.g12[p] = 0.0;
      g.g22[p] = c0;
      g.gi11[p] = 1.0 / c0;
      g.gi12[p] = 0.0;
      g.gi22[p] = 1.0 / c0;
      g.sqrtg[p] = c0;
      g.dV[p] = c0 * g.hxi * g.heta;
    }
  return g;
}

uint64_t TransversalGrid::hash() const {
  std::vector<double> v = {double(int(kind)), double(nxi), double(neta), Lxi, Leta};
  uint64_t h = hash_doubles(v);
  h = fnv1a(g11.data(), size_t(g11.size()) * sizeof(double), h);
  h = fnv1a(g22.data(), size_t(g22.size()) * sizeof(double), h);
  return h;
}

CylinderGrid CylinderGrid::build(const Grid1D& gx, const TransversalGrid& tg,
                                 const ConformalMap3& conformal) {
  CylinderGrid g;
  g.gx = gx;
  g.tg = tg;
  const int n = gx.n * tg.size();
  g.cfac.resize(n); g.w.resize(n);
  g.i11.resize(n); g.i22.resize(n); g.i23.resize(n); g.i33.resize(n);
  g.l22.resize(n); g.l23.resize(n); g.l33.resize(n);
  g.unit_conformal = (conformal == nullptr);
  for (int i1 = 0; i1 < gx.n; ++i1) {
    double x1 = gx.x(i1);
    for (int p2 = 0; p2 < tg.size(); ++p2) {
      int p = g.idx(i1, p2);
      double c = conformal ? conformal(x1, tg.x[p2], tg.y[p2]) : 1.0;
      if (c <= 0.0) throw std::invalid_argument("cylinder grid: conformal factor must be positive");
      g.cfac[p] = c;
      g.w[p] = std::pow(c, 1.5) * tg.sqrtg[p2];
      g.i11[p] = 1.0 / c;
      g.i22[p] = tg.gi11[p2] / c;
      g.i23[p] = tg.gi12[p2] / c;
      g.i33[p] = tg.gi22[p2] / c;
      g.l22[p] = c * tg.g11[p2];
      g.l23[p] = c * tg.g12[p2];
      g.l33[p] = c * tg.g22[p2];
    }
  }
  return g;
}

CylinderGrid CylinderGrid::conformal_rescale(const ConformalMap3& c) const {
  if (!c) throw std::invalid_argument("conformal_rescale: missing factor");
  CylinderGrid g = *this;
  g.unit_conformal = false;
  for (int i1 = 0; i1 < gx.n; ++i1) {
    double x1 = gx.x(i1);
    for (int p2 = 0; p2 < tg.size(); ++p2) {
      int p = idx(i1, p2);
      double cc = c(x1, tg.x[p2], tg.y[p2]);
      if (cc <= 0.0) throw std::invalid_argument("conformal_rescale: factor must be positive");
      g.cfac[p] = cfac[p] * cc;
      g.w[p] = w[p] * std::pow(cc, 1.5);
      g.i11[p] = i11[p] / cc;
      g.i22[p] = i22[p] / cc;
      g.i23[p] = i23[p] / cc;
      g.i33[p] = i33[p] / cc;
      g.l22[p] = l22[p] * cc;
      g.l23[p] = l23[p] * cc;
      g.l33[p] = l33[p] * cc;
    }
  }
  return g;
}

uint64_t CylinderGrid::hash() const {
  uint64_t h = hash_combine(gx.hash(), tg.hash());
  h = fnv1a(cfac.data(), size_t(cfac.size()) * sizeof(double), h);
  return h;
}

}  // namespace cgomax
