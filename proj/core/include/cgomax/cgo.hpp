// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cgomax/chart.hpp"
#include "cgomax/conjugated.hpp"
#include "cgomax/reduction.hpp"

namespace cgomax {

// Complex-geometrical-optics builder on the product cylinder: WKB phase
// rho = x1 + i*rsign*r with r from a polar chart, amplitudes carrying the
// |g|^{-1/4} weight of the (x1,r,theta) coordinates, remainder solved through
// the conjugated graded solver in the real-weight variable R' = e^{-i tau r} R.

struct CgoRecipe {
  const ConjugatedProblem* prob = nullptr;
  const MaterialCoefficients* mc = nullptr;
  const Potentials* pot = nullptr;
  const PolarChart* chart = nullptr;
  double tau = 8.0;
  double lambda = 2.0;        // tone frequency
  int rsign = +1;             // sign of r in the phase
  double chi_center = 0.0;    // angular profile center and width
  double chi_width = 0.35;
  cplx s0 = 1.0, t0 = 0.0;
  double mask_x1 = 1.0;       // |x1| extent of M for diagnostics
  double neumann_tol = 1e-10;
};

struct CgoDiagnostics {
  double r_norm_m = 0;        // ||R||_{L2(Omega M)}
  double r_norm_wm = 0;       // ||R||_{L2_{-delta}(T)}
  double a_norm_m = 0;        // ||A||_{L2(Omega M)}
  double eq_residual = 0;     // independent channel residual of the solve
  double rhs_tail = 0;        // out-of-basis fraction of the decaying rhs
  double y0_norm = 0, y3_norm = 0, y_norm = 0;  // over M
  double uniq_budget = 0;     // C_b (h^2 + 1/|tau|) ||Y||_M
  double amp_identity = 0;    // a0 - (tau - i lambda)/(i k) a1, machine scale
  double amp_lead_err = 0;    // leading-amplitude defect over M (adjoint build)
  double split_leak = 0;      // below-cutoff energy fraction of the tone
  int neumann_iters = 0;
  double contraction = 0;
};

struct CgoSolution {
  double tau = 0, lambda = 0;
  int rsign = +1;
  const PolarChart* chart = nullptr;
  GradedForm A;    // amplitude envelope (3D fields)
  GradedForm Rp;   // remainder in the primed variable R' = e^{-i tau r} R
  GradedForm Y;    // companion Dirac field, primed envelope convention:
                   // Y_full = e^{-tau x1} Yp, Yp stored here
  CgoDiagnostics diag;

  // unprimed remainder R = e^{+i tau rsign r} R'
  GradedForm remainder_unprimed(const CylinderGrid& G) const;
  // envelope of Z against e^{-tau rho}: A + R
  GradedForm z_envelope(const CylinderGrid& G) const;
};

// ---- chart-side utilities ------------------------------------------------

// angular bump profile chi(theta), smooth, supported in |theta - c| < width
double chi_profile(double theta, double center, double width);

// dbar = (d/dx1 + i d/dr)/2 applied to a tone profile e^{i lambda x1} w(x'):
// returns the transversal profile of the result.
TField dbar_tone_profile(const TransversalGrid& tg, const PolarChart& chart, double lambda,
                         int rsign, const TField& w);

// transport criterion residuals for amplitude components; weight_exp is the
// exponent of |g|^{1/4} in the criterion (+1 for scalar/a1/ar, -1 for atheta)
double transport_criterion(const TransversalGrid& tg, const PolarChart& chart, double lambda,
                           int rsign, const TField& comp, int weight_exp);

// 0-form / 1-form transport solutions with seeds of the admissible form
TField transport_solve_scalar(const TransversalGrid& tg, const PolarChart& chart,
                              double lambda, int rsign, const TField& theta_seed);

// ---- tau-expansion of the conjugated laplacian (0- and 1-forms) ----------
struct DeltaTauTerms {
  Field t2_0, t1_0, t0_0;        // 0-form terms
  OneForm t2_1, t1_1, t0_1;      // 1-form terms
  bool has_scalar = false, has_oneform = false;
};
DeltaTauTerms delta_tau_expand(const CylinderGrid& G, const ChristoffelField& C,
                               const OneForm& drho, const Field& rho3d, const Field& u0,
                               const OneForm* u1);
// reassembled tau-weighted sum vs the composite conjugated laplacian
double delta_tau_reassembly_defect(const CylinderGrid& G, const OneForm& drho, double tau,
                                   const DeltaTauTerms& terms, const Field& u0,
                                   const OneForm* u1);

// ---- builders -------------------------------------------------------------

// Schroedinger-type CGO with explicit slot profiles (a0, b1, b0, a1), each a
// transversal profile of the tone e^{i lambda x1} (already including chi and
// the radial factor, but not |g|^{-1/4}, which is applied internally).
CgoSolution build_schrodinger_cgo(const CgoRecipe& rec, const TField& a0, const TField& a1,
                                  const TField& b0, const TField& b1);

// Theorem-type (a): Maxwell-compatible solution; amplitude slots generated
// from (s0, t0), Y = (P + k - W^t) Z with the 0/3-form parts measured against
// the uniqueness budget.
CgoSolution build_maxwell_cgo(const CgoRecipe& rec, double budget_cb = 10.0);

// Theorem-type (b): adjoint-Dirac solution (P - k + W*) Y = 0 built from the
// Qhat ansatz; leading amplitude defect attached.
CgoSolution build_adjoint_cgo(const CgoRecipe& rec);

// mask weight: 1 on |x1| <= mask_x1, 0 outside (diagnostic region M)
Eigen::VectorXd mask_region(const CylinderGrid& G, double mask_x1);

}  // namespace cgomax
