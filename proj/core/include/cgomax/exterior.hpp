// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cgomax/field.hpp"

namespace cgomax {

// Finite-difference exterior calculus on the cylinder grid. Centered
// second-order stencils inside, one-sided second-order at physical
// boundaries, periodic in eta on the disc chart, parity closure across the
// polar origin. delta is realized as (-1)^k * d * on k-forms (n = 3), so
// d.d == 0 and delta.delta == 0 hold exactly and (D+D*)^2 == -Laplacian
// holds as a discrete operator identity.

enum class Dir { X1 = 0, Xi = 1, Eta = 2 };

// Partial derivative of a component field. `parity` controls the polar
// across-origin ghost (ignored for Dir::X1 / Dir::Eta and on Rect charts).
Field partial(const CylinderGrid& G, const Field& u, Dir dir,
              OriginParity parity = OriginParity::Even);

// ---- Hodge star -------------------------------------------------------
Field star0(const CylinderGrid& G, const Field& f);            // 0 -> 3
TwoForm star1(const CylinderGrid& G, const OneForm& a);        // 1 -> 2
OneForm star2(const CylinderGrid& G, const TwoForm& F);        // 2 -> 1
Field star3(const CylinderGrid& G, const Field& t);            // 3 -> 0

// ---- exterior derivative and codifferential ---------------------------
OneForm d0(const CylinderGrid& G, const Field& f);
TwoForm d1(const CylinderGrid& G, const OneForm& a);
Field d2(const CylinderGrid& G, const TwoForm& F);
Field delta1(const CylinderGrid& G, const OneForm& a);         // 1 -> 0
OneForm delta2(const CylinderGrid& G, const TwoForm& F);       // 2 -> 1
TwoForm delta3(const CylinderGrid& G, const Field& t);         // 3 -> 2

// ---- Hodge Laplacian (analyst sign: flat scalar case gives sum of
// second derivatives, Delta = -(d delta + delta d)) ---------------------
Field laplace0(const CylinderGrid& G, const Field& f);
OneForm laplace1(const CylinderGrid& G, const OneForm& a);
TwoForm laplace2(const CylinderGrid& G, const TwoForm& F);
Field laplace3(const CylinderGrid& G, const Field& t);
GradedForm laplace(const CylinderGrid& G, const GradedForm& X);

// ---- algebraic operations with a (complex) 1-form ---------------------
OneForm wedge0(const CylinderGrid& G, const OneForm& xi, const Field& f);
TwoForm wedge1(const CylinderGrid& G, const OneForm& xi, const OneForm& a);
Field wedge2(const CylinderGrid& G, const OneForm& xi, const TwoForm& F);
// interior products, complex-bilinear pairing (no conjugation)
Field interior1(const CylinderGrid& G, const OneForm& xi, const OneForm& a);
OneForm interior2(const CylinderGrid& G, const OneForm& xi, const TwoForm& F);
TwoForm interior3(const CylinderGrid& G, const OneForm& xi, const Field& t);

// ---- graded first-order operators --------------------------------------
GradedForm graded_d(const CylinderGrid& G, const GradedForm& X);      // d on every slot
GradedForm graded_delta(const CylinderGrid& G, const GradedForm& X);
// P = D + D* with D = d/i, D* = -delta/i.
GradedForm dirac(const CylinderGrid& G, const GradedForm& X);
// Conjugated versions for phase rho with differential drho (complex):
// d_tau = d - tau*drho^ , delta_tau = delta + tau*i_drho, P_tau = (d_tau - delta_tau)/i.
GradedForm graded_d_tau(const CylinderGrid& G, const GradedForm& X, const OneForm& drho, double tau);
GradedForm graded_delta_tau(const CylinderGrid& G, const GradedForm& X, const OneForm& drho, double tau);
GradedForm dirac_tau(const CylinderGrid& G, const GradedForm& X, const OneForm& drho, double tau);
// Conjugated Hodge Laplacian -Delta_tau = d_tau delta_tau + delta_tau d_tau,
// returned with the analyst sign (Delta_tau).
GradedForm laplace_tau(const CylinderGrid& G, const GradedForm& X, const OneForm& drho, double tau);

// ---- pointwise inner products (hermitian: second argument conjugated;
// bilinear: no conjugation) ----------------------------------------------
Field pair0(const CylinderGrid& G, const Field& u, const Field& v, bool herm = true);
Field pair1(const CylinderGrid& G, const OneForm& a, const OneForm& b, bool herm = true);
Field pair2(const CylinderGrid& G, const TwoForm& F, const TwoForm& H, bool herm = true);
Field pair3(const CylinderGrid& G, const Field& s, const Field& t, bool herm = true);
Field pair_graded(const CylinderGrid& G, const GradedForm& X, const GradedForm& Y, bool herm = true);

// ---- quadrature ---------------------------------------------------------
// integral of a pointwise density against the Riemannian volume, trapezoid
// in x1, optional extra pointwise weight.
cplx integrate(const CylinderGrid& G, const Field& density,
               const Eigen::VectorXd* weight = nullptr);
cplx inner(const CylinderGrid& G, const GradedForm& X, const GradedForm& Y,
           const Eigen::VectorXd* weight = nullptr);
double norm_l2(const CylinderGrid& G, const GradedForm& X,
               const Eigen::VectorXd* weight = nullptr);
double norm_l2(const CylinderGrid& G, const Field& u,
               const Eigen::VectorXd* weight = nullptr);

// <x1>^exponent weight vector over 3D nodes.
Eigen::VectorXd agmon_weight(const CylinderGrid& G, double exponent);

// ---- Christoffel symbols and covariant derivatives ---------------------
struct ChristoffelField {
  // Gamma[k][(i,j)] with symmetric (i,j) packed as 11,22,33,12,13,23.
  std::array<std::array<Eigen::VectorXd, 6>, 3> gamma;
  static int pack(int i, int j);
};
ChristoffelField christoffels(const CylinderGrid& G);

// (nabla_X a)_j = X^i d_i a_j - X^i Gamma^k_{ij} a_k, X given by
// contravariant components.
OneForm covariant_deriv1(const CylinderGrid& G, const ChristoffelField& C,
                         const std::array<Field, 3>& Xup, const OneForm& a);
// Scalar Hessian contraction |nabla^2 f|^2 (pointwise, >= 0).
Eigen::VectorXd hessian_sq(const CylinderGrid& G, const ChristoffelField& C, const Field& f);

// Weighted Sobolev norms of scalar fields on T, s in {0,1,2}; the weight
// <x1>^delta multiplies first, derivatives act on the weighted field.
double sobolev_norm(const CylinderGrid& G, const ChristoffelField& C, const Field& u,
                    double delta, int s);

// ---- transversal (2D) operators on M0 ----------------------------------
// chart-direction partial derivative of a transversal field, parity-aware
TField tpartial(const TransversalGrid& tg, const TField& u, bool along_xi,
                OriginParity parity = OriginParity::Even);
// Laplace-Beltrami on transversal scalars (analyst sign)
TField t_lap0(const TransversalGrid& tg, const TField& f);
// Hodge laplacian on transversal 1-forms (components a_xi, a_eta)
void t_lap1(const TransversalGrid& tg, const TField& axi, const TField& aeta, TField& oxi,
            TField& oeta);

// Relative residual of the conformal scaling identity for the scalar
// operator: with g = c * g_base,
//   c^{5/4} (-Delta_g - k^2 + q)(c^{-1/4} v)
//     = -Delta_base v - k^2 v + [k^2(1-c) + c q - c^{5/4} Delta_g(c^{-1/4})] v.
// Both sides are evaluated on their grids; `scaled` and `base` must share
// nodes.
double conformal_identity_residual(const CylinderGrid& scaled, const CylinderGrid& base,
                                   const Field& q, double k, const Field& v);

}  // namespace cgomax
