// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cgomax/util.hpp"

namespace cgomax {

// Uniform node-centered grid on [-half_width, half_width].
struct Grid1D {
  int n = 0;
  double x0 = 0.0;
  double h = 0.0;
  Grid1D() = default;
  Grid1D(int n_, double half_width) : n(n_), x0(-half_width), h(2.0 * half_width / (n_ - 1)) {}
  double x(int i) const { return x0 + h * i; }
  double half_width() const { return -x0; }
  uint64_t hash() const {
    std::vector<double> v = {double(n), x0, h};
    return hash_doubles(v);
  }
};

enum class ChartKind { PolarDisc, Rect };

// Scalar function of transversal cartesian position.
using ScalarMap = std::function<double(double, double)>;

// 2D chart grid over the transversal manifold M0, cell-centered in both
// directions. PolarDisc: xi = radius in (0,R), eta = angle, periodic; the
// physical boundary is the outer circle only. Rect: xi in (0,Lx), eta in
// (0,Ly), all four sides are boundary.
class TransversalGrid {
 public:
  ChartKind kind;
  int nxi, neta;
  double hxi, heta;
  double Lxi, Leta;  // chart extents; PolarDisc: Lxi = R, Leta = 2*pi
  bool eta_periodic;

  // Per-node fields, size nxi*neta, row-major (ixi * neta + ieta).
  Eigen::VectorXd x, y;                // cartesian position
  Eigen::VectorXd xj_xi, xj_eta;       // d(x)/d(xi,eta): chart-to-cartesian
  Eigen::VectorXd yj_xi, yj_eta;       // jacobian (smooth-frame construction)
  Eigen::VectorXd g11, g12, g22;       // metric g0 in chart coords
  Eigen::VectorXd gi11, gi12, gi22;    // inverse metric
  Eigen::VectorXd sqrtg;               // sqrt(det g0)
  Eigen::VectorXd dV;                  // quadrature weight = sqrtg*hxi*heta

  int size() const { return nxi * neta; }
  int idx(int i, int j) const { return i * neta + j; }
  double xi(int i) const { return (i + 0.5) * hxi; }
  double eta(int j) const { return eta0_ + (j + 0.5) * heta; }

  bool has_origin_closure() const { return kind == ChartKind::PolarDisc; }
  // Node index paired across the coordinate origin (polar only).
  int origin_partner(int j) const { return (j + neta / 2) % neta; }

  uint64_t hash() const;

  static TransversalGrid disc(int nr, int nphi, const ScalarMap& conformal = nullptr,
                              double radius = 1.0);
  static TransversalGrid rect(int nx, int ny, double Lx, double Ly,
                              const ScalarMap& conformal = nullptr);

 private:
  double eta0_ = 0.0;
};

// Parity of a quantity under the polar across-origin identification
// (rho,phi) -> (-rho, phi+pi). Scalars and d-eta-type components are even,
// d-xi-type components are odd.
enum class OriginParity : int { Even = +1, Odd = -1 };

// 3D tensor grid on the cylinder T = R x M0 with block metric
// g = c * diag(1, g0). x1 is node-centered, the transversal chart is
// cell-centered. Conformal factor c > 0 per node (c == 1 if absent).
class CylinderGrid {
 public:
  Grid1D gx;
  TransversalGrid tg;

  // Per-3D-node metric data; index (i1*tg.size() + p2) with p2 transversal.
  Eigen::VectorXd cfac;                       // conformal factor
  Eigen::VectorXd w;                          // sqrt|g|
  Eigen::VectorXd i11, i22, i23, i33;         // inverse metric (block; g^{1k}=0, k>1)
  Eigen::VectorXd l22, l23, l33;              // transversal metric block of g
  bool unit_conformal = true;

  int size() const { return gx.n * tg.size(); }
  int idx(int i1, int p2) const { return i1 * tg.size() + p2; }
  int idx(int i1, int i, int j) const { return idx(i1, tg.idx(i, j)); }
  double cell() const { return gx.h * tg.hxi * tg.heta; }  // coordinate cell volume

  uint64_t hash() const;

  // metric g = c*(e + g0); pass conformal=nullptr for c == 1.
  using ConformalMap3 = std::function<double(double, double, double)>;  // (x1, x, y)
  static CylinderGrid build(const Grid1D& gx, const TransversalGrid& tg,
                            const ConformalMap3& conformal = nullptr);
  // Returns a copy of this grid with metric multiplied by c (geometry op
  // conformal_rescale). c must be positive.
  CylinderGrid conformal_rescale(const ConformalMap3& c) const;
};

}  // namespace cgomax
