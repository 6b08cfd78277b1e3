// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cgomax/exterior.hpp"
#include "cgomax/util.hpp"

namespace cgomax {

// Material coefficient fields on the cylinder with derived logarithmic
// quantities. Coefficients constant near the boundary select the background
// wavenumber k = omega*sqrt(eps0*mu0); otherwise k = 0.
struct MaterialCoefficients {
  const CylinderGrid* G = nullptr;
  Field eps, mu;
  double omega = 1.0;
  double eps0 = 1.0, mu0 = 1.0;
  bool constant_collar = false;
  double k = 0.0;

  Field alpha, beta;   // log eps, log mu
  Field kappa;         // omega sqrt(eps mu)
  OneForm dalpha, dbeta;

  static MaterialCoefficients build(const CylinderGrid& G, const Field& eps, const Field& mu,
                                    double omega, double eps0, double mu0,
                                    bool constant_collar);
  // max |eps-eps0| + |mu-mu0| over the collar |x1| >= x1c or chart radius
  // fraction >= frac.
  double collar_defect(double x1c, double frac) const;
  bool constant() const;  // kappa == k and dalpha == dbeta == 0
};

// ---- Dirac-type operators of the reduction ------------------------------
// P = D + D* on graded forms (alias of the exterior-calculus dirac()).
GradedForm apply_P(const CylinderGrid& G, const GradedForm& X);

// first-order-system potential V (Maxwell system as (P+V)X = 0)
GradedForm apply_V(const MaterialCoefficients& mc, const GradedForm& X);

enum class WKind { W, Wt, Wstar, Wbar };
GradedForm apply_W(const MaterialCoefficients& mc, WKind kind, const GradedForm& X);

// rescaling X = diag(mu^{-1/2} | eps^{-1/2}) Y between the first Dirac
// system and the rescaled one
GradedForm rescale_to_Y(const MaterialCoefficients& mc, const GradedForm& X);
GradedForm rescale_to_X(const MaterialCoefficients& mc, const GradedForm& Y);

// ---- pointwise 8x8 potentials --------------------------------------------
struct PotentialMatrix {
  std::vector<int> nodes;
  std::vector<Eigen::Matrix<cplx, 8, 8>> mats;
  GradedForm apply(const CylinderGrid& G, const GradedForm& X) const;
  Field entry(const CylinderGrid& G, int row, int col) const;  // dense field
  static PotentialMatrix difference(const CylinderGrid& G, const PotentialMatrix& A,
                                    const PotentialMatrix& B);
  bool empty() const { return nodes.empty(); }
};

struct Potentials {
  PotentialMatrix Q, Qprime, Qhat;
  Field q_alpha, q_beta;  // closed-form diagonal entries of Q
  Field q0, q3;           // decoupled scalar potentials of the 0/3 slots
};

// Realizes Q, Q', Qhat as the measured zeroth-order defects of the three
// factorization identities, evaluated on a smooth pointwise frame; the
// q_alpha/q_beta/q0/q3 entries come from their closed forms.
Potentials build_potentials(const MaterialCoefficients& mc, double support_tol = 1e-11);

struct FactorizationReport {
  double identity_rel = 0;     // |(P-k+W)(P+k-W^t)Y - (-Delta-k^2+Q)Y| / |rhs|
  double residual_rel = 0;     // same defect relative to the much smaller |QY|
  double zeroth_order_rel = 0; // defect(fY) vs f defect(Y)
  double q_alpha_rel = 0;      // measured (1,1) vs closed form
  double q_beta_rel = 0;       // measured (5,5) vs closed form
  double off_entry_21 = 0;     // |Q(2,1)| / scale (displayed zero of the lemma)
  double off_entry_43 = 0;     // |Q(4,3)| / scale in 4-block indexing
};

FactorizationReport verify_factorization(const MaterialCoefficients& mc, const Potentials& pot,
                                         int trials, Rng& rng);

// quadrature of ((Q1-Q2) Z1 | Y2)
cplx integral_identity_eval(const CylinderGrid& G, const PotentialMatrix& Qdiff,
                            const GradedForm& Z1, const GradedForm& Y2);

// Random smooth compactly supported graded form assembled on the cartesian
// frame, so every slot has the right smoothness across the polar origin.
GradedForm random_smooth_graded(const CylinderGrid& G, Rng& rng, double x1supp = 0.6,
                                double supp_frac = 0.7);

// Residual of the two first-order Maxwell equations for a pair (E, H),
// and of the first Dirac system for X = (0, *H, 0, E).
struct MaxwellPairResidual {
  double faraday_rel;  // *dE - i omega mu H
  double ampere_rel;   // *dH + i omega eps E
  double dirac_rel;    // (P + V) X
};
MaxwellPairResidual maxwell_pair_residual(const MaterialCoefficients& mc, const OneForm& E,
                                          const OneForm& H);

}  // namespace cgomax
