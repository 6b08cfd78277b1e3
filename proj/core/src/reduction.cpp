// SPDX-License-Identifier: Apache-2.0
#include "cgomax/reduction.hpp"

#include <cmath>
#include <stdexcept>

namespace cgomax {

namespace {

Field clog(const Field& f) {
  Field out(f.size());
  for (int p = 0; p < f.size(); ++p) {
    if (f[p].real() <= 0)
      throw std::invalid_argument("material coefficients need positive real parts");
    out[p] = std::log(f[p]);
  }
  return out;
}

// even/odd split helpers: X+ = (deg0, deg2), X- = (deg1, deg3)
GradedForm even_part(const CylinderGrid& G, const GradedForm& X) {
  GradedForm out = GradedForm::zero(G);
  out.s0 = X.s0;
  out.F2 = X.F2;
  return out;
}

GradedForm odd_part(const CylinderGrid& G, const GradedForm& X) {
  GradedForm out = GradedForm::zero(G);
  out.A1 = X.A1;
  out.s3 = X.s3;
  return out;
}

// (xi ^ +- i_xi) acting on a graded form, graded output
GradedForm wedge_interior(const CylinderGrid& G, const OneForm& xi, const GradedForm& X,
                          double wedge_sign, double int_sign) {
  GradedForm out = GradedForm::zero(G);
  // wedge: deg0 -> deg1, deg1 -> deg2, deg2 -> deg3
  OneForm w0 = wedge0(G, xi, X.s0);
  TwoForm w1 = wedge1(G, xi, X.A1);
  Field w2 = wedge2(G, xi, X.F2);
  // interior: deg1 -> deg0, deg2 -> deg1, deg3 -> deg2
  Field i1 = interior1(G, xi, X.A1);
  OneForm i2 = interior2(G, xi, X.F2);
  TwoForm i3 = interior3(G, xi, X.s3);
  out.s0 = int_sign * i1;
  out.A1.a1 = wedge_sign * w0.a1 + int_sign * i2.a1;
  out.A1.a2 = wedge_sign * w0.a2 + int_sign * i2.a2;
  out.A1.a3 = wedge_sign * w0.a3 + int_sign * i2.a3;
  out.F2.f23 = wedge_sign * w1.f23 + int_sign * i3.f23;
  out.F2.f31 = wedge_sign * w1.f31 + int_sign * i3.f31;
  out.F2.f12 = wedge_sign * w1.f12 + int_sign * i3.f12;
  out.s3 = wedge_sign * w2;
  return out;
}

GradedForm conj_graded(const CylinderGrid& G, const GradedForm& X) {
  GradedForm out = GradedForm::zero(G);
  for (int s = 0; s < GradedForm::kSlots; ++s) out.slot(s) = X.slot(s).conjugate();
  return out;
}

OneForm scale_oneform(const OneForm& a, cplx c) {
  return {c * a.a1, c * a.a2, c * a.a3};
}

}  // namespace

MaterialCoefficients MaterialCoefficients::build(const CylinderGrid& G, const Field& eps,
                                                 const Field& mu, double omega, double eps0,
                                                 double mu0, bool constant_collar) {
  if (eps.size() != G.size() || mu.size() != G.size())
    throw std::invalid_argument("MaterialCoefficients: field size mismatch");
  MaterialCoefficients mc;
  mc.G = &G;
  mc.eps = eps;
  mc.mu = mu;
  mc.omega = omega;
  mc.eps0 = eps0;
  mc.mu0 = mu0;
  mc.constant_collar = constant_collar;
  // without a constant collar the background wavenumber is formally zero
  mc.k = constant_collar ? omega * std::sqrt(eps0 * mu0) : 0.0;
  mc.alpha = clog(eps);
  mc.beta = clog(mu);
  mc.kappa.resize(G.size());
  for (int p = 0; p < G.size(); ++p) mc.kappa[p] = omega * std::sqrt(eps[p] * mu[p]);
  mc.dalpha = d0(G, mc.alpha);
  mc.dbeta = d0(G, mc.beta);
  return mc;
}

double MaterialCoefficients::collar_defect(double x1c, double frac) const {
  double worst = 0;
  const int nt = G->tg.size();
  double cx, cy;
  if (G->tg.kind == ChartKind::PolarDisc) {
    cx = cy = 0;
  } else {
    cx = 0.5 * G->tg.Lxi;
    cy = 0.5 * G->tg.Leta;
  }
  double rad = (G->tg.kind == ChartKind::PolarDisc) ? G->tg.Lxi
                                                    : 0.5 * std::min(G->tg.Lxi, G->tg.Leta);
  for (int i1 = 0; i1 < G->gx.n; ++i1) {
    bool outer1 = std::abs(G->gx.x(i1)) >= x1c;
    for (int q = 0; q < nt; ++q) {
      double r = std::hypot(G->tg.x[q] - cx, G->tg.y[q] - cy);
      if (!outer1 && r < frac * rad) continue;
      int p = i1 * nt + q;
      worst = std::max(worst, std::abs(eps[p] - eps0) + std::abs(mu[p] - mu0));
    }
  }
  return worst;
}

bool MaterialCoefficients::constant() const {
  double d = 0;
  for (int p = 0; p < G->size(); ++p) d = std::max(d, std::abs(kappa[p] - k));
  return d < 1e-13 * std::max(1.0, std::abs(k));
}

GradedForm apply_P(const CylinderGrid& G, const GradedForm& X) { return dirac(G, X); }

GradedForm apply_V(const MaterialCoefficients& mc, const GradedForm& X) {
  const CylinderGrid& G = *mc.G;
  // V = diag(-omega mu on even, -omega eps on odd) + i_{D alpha} on odd
  //     + D beta ^ on even, with D = d / i.
  OneForm Da = scale_oneform(mc.dalpha, cplx(0, -1));
  OneForm Db = scale_oneform(mc.dbeta, cplx(0, -1));
  GradedForm out = GradedForm::zero(G);
  // diagonal part
  out.s0 = -mc.omega * mc.mu.cwiseProduct(X.s0);
  out.F2.f23 = -mc.omega * mc.mu.cwiseProduct(X.F2.f23);
  out.F2.f31 = -mc.omega * mc.mu.cwiseProduct(X.F2.f31);
  out.F2.f12 = -mc.omega * mc.mu.cwiseProduct(X.F2.f12);
  out.s3 = -mc.omega * mc.eps.cwiseProduct(X.s3);
  out.A1.a1 = -mc.omega * mc.eps.cwiseProduct(X.A1.a1);
  out.A1.a2 = -mc.omega * mc.eps.cwiseProduct(X.A1.a2);
  out.A1.a3 = -mc.omega * mc.eps.cwiseProduct(X.A1.a3);
  // i_{D alpha} on the odd part
  GradedForm odd = odd_part(G, X);
  GradedForm t1 = wedge_interior(G, Da, odd, 0.0, 1.0);
  // D beta ^ on the even part
  GradedForm even = even_part(G, X);
  GradedForm t2 = wedge_interior(G, Db, even, 1.0, 0.0);
  out += t1;
  out += t2;
  return out;
}

GradedForm apply_W(const MaterialCoefficients& mc, WKind kind, const GradedForm& X) {
  const CylinderGrid& G = *mc.G;
  if (kind == WKind::Wstar) {
    GradedForm t = apply_W(mc, WKind::Wt, conj_graded(G, X));
    return conj_graded(G, t);
  }
  if (kind == WKind::Wbar) {
    GradedForm t = apply_W(mc, WKind::W, conj_graded(G, X));
    return conj_graded(G, t);
  }
  OneForm Da = scale_oneform(mc.dalpha, cplx(0, -1));
  OneForm Db = scale_oneform(mc.dbeta, cplx(0, -1));
  const OneForm& first = (kind == WKind::W) ? Da : Db;   // acts on the odd part
  const OneForm& second = (kind == WKind::W) ? Db : Da;  // acts on the even part
  GradedForm odd = odd_part(G, X);
  GradedForm even = even_part(G, X);
  // W = -(kappa - k) + (1/2)[(-first^ + i_first) odd + (second^ - i_second) even]
  GradedForm out = wedge_interior(G, first, odd, -0.5, 0.5);
  out += wedge_interior(G, second, even, 0.5, -0.5);
  Field shift(G.size());
  for (int p = 0; p < G.size(); ++p) shift[p] = -(mc.kappa[p] - mc.k);
  for (int s = 0; s < GradedForm::kSlots; ++s) out.slot(s) += shift.cwiseProduct(X.slot(s));
  return out;
}

GradedForm rescale_to_Y(const MaterialCoefficients& mc, const GradedForm& X) {
  const CylinderGrid& G = *mc.G;
  Field smu(G.size()), seps(G.size());
  for (int p = 0; p < G.size(); ++p) {
    smu[p] = std::sqrt(mc.mu[p]);
    seps[p] = std::sqrt(mc.eps[p]);
  }
  GradedForm out = GradedForm::zero(G);
  out.s0 = smu.cwiseProduct(X.s0);
  out.F2.f23 = smu.cwiseProduct(X.F2.f23);
  out.F2.f31 = smu.cwiseProduct(X.F2.f31);
  out.F2.f12 = smu.cwiseProduct(X.F2.f12);
  out.s3 = seps.cwiseProduct(X.s3);
  out.A1.a1 = seps.cwiseProduct(X.A1.a1);
  out.A1.a2 = seps.cwiseProduct(X.A1.a2);
  out.A1.a3 = seps.cwiseProduct(X.A1.a3);
  return out;
}

GradedForm rescale_to_X(const MaterialCoefficients& mc, const GradedForm& Y) {
  const CylinderGrid& G = *mc.G;
  Field smu(G.size()), seps(G.size());
  for (int p = 0; p < G.size(); ++p) {
    smu[p] = 1.0 / std::sqrt(mc.mu[p]);
    seps[p] = 1.0 / std::sqrt(mc.eps[p]);
  }
  GradedForm out = GradedForm::zero(G);
  out.s0 = smu.cwiseProduct(Y.s0);
  out.F2.f23 = smu.cwiseProduct(Y.F2.f23);
  out.F2.f31 = smu.cwiseProduct(Y.F2.f31);
  out.F2.f12 = smu.cwiseProduct(Y.F2.f12);
  out.s3 = seps.cwiseProduct(Y.s3);
  out.A1.a1 = seps.cwiseProduct(Y.A1.a1);
  out.A1.a2 = seps.cwiseProduct(Y.A1.a2);
  out.A1.a3 = seps.cwiseProduct(Y.A1.a3);
  return out;
}

GradedForm PotentialMatrix::apply(const CylinderGrid& G, const GradedForm& X) const {
  GradedForm out = GradedForm::zero(G);
  Eigen::Matrix<cplx, 8, 1> v, w;
  for (size_t i = 0; i < nodes.size(); ++i) {
    int p = nodes[i];
    for (int s = 0; s < 8; ++s) v[s] = X.slot(s)[p];
    w = mats[i] * v;
    for (int s = 0; s < 8; ++s) out.slot(s)[p] = w[s];
  }
  return out;
}

Field PotentialMatrix::entry(const CylinderGrid& G, int row, int col) const {
  Field out = zero_field(G);
  for (size_t i = 0; i < nodes.size(); ++i) out[nodes[i]] = mats[i](row, col);
  return out;
}

PotentialMatrix PotentialMatrix::difference(const CylinderGrid& G, const PotentialMatrix& A,
                                            const PotentialMatrix& B) {
  std::vector<int> where(size_t(G.size()), -1);
  PotentialMatrix out;
  auto add = [&](const PotentialMatrix& P, double sign) {
    for (size_t i = 0; i < P.nodes.size(); ++i) {
      int p = P.nodes[i];
      if (where[size_t(p)] < 0) {
        where[size_t(p)] = int(out.nodes.size());
        out.nodes.push_back(p);
        out.mats.push_back(Eigen::Matrix<cplx, 8, 8>::Zero());
      }
      out.mats[size_t(where[size_t(p)])] += sign * P.mats[i];
    }
  };
  add(A, 1.0);
  add(B, -1.0);
  return out;
}

namespace {

// Smooth pointwise frame of graded forms built from the cartesian
// differentials dx1, dx, dy; respects the across-origin parities.
struct Frame {
  // per-node 8x8 frame matrix (block diagonal over degrees) and its inverse
  std::vector<Eigen::Matrix<double, 8, 8>> M, Minv;
};

Frame build_frame(const CylinderGrid& G) {
  const TransversalGrid& tg = G.tg;
  Frame fr;
  const int nt = tg.size();
  fr.M.resize(size_t(nt));
  fr.Minv.resize(size_t(nt));
  for (int q = 0; q < nt; ++q) {
    double xc = tg.xj_xi[q], xe = tg.xj_eta[q];
    double yc = tg.yj_xi[q], ye = tg.yj_eta[q];
    double J = xc * ye - xe * yc;
    Eigen::Matrix<double, 8, 8> M = Eigen::Matrix<double, 8, 8>::Zero();
    // deg0 frame: 1
    M(0, 0) = 1.0;
    // deg2 frames (rows = components F23, F31, F12):
    //   dx^dy = J dxi^deta, dy^dx1, dx1^dx
    M(1, 1) = J;
    M(2, 2) = ye;  // dy^dx1: F31 (deta^dx1) coeff = y_eta; F12 = -y_xi
    M(3, 2) = -yc;
    M(2, 3) = -xe;  // dx1^dx: F12 (dx1^dxi) = x_xi; F31 = -x_eta
    M(3, 3) = xc;
    // deg3 frame: dx1^dx^dy = J dx1^dxi^deta
    M(4, 4) = J;
    // deg1 frames: dx1, dx, dy
    M(5, 5) = 1.0;
    M(6, 6) = xc;
    M(7, 6) = xe;
    M(6, 7) = yc;
    M(7, 7) = ye;
    fr.M[size_t(q)] = M;
    fr.Minv[size_t(q)] = M.inverse();
  }
  return fr;
}

// frame column s as a graded field (constant along x1)
GradedForm frame_field(const CylinderGrid& G, const Frame& fr, int s) {
  GradedForm e = GradedForm::zero(G);
  const int nt = G.tg.size();
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q)
      for (int r = 0; r < 8; ++r) e.slot(r)[i1 * nt + q] = fr.M[size_t(q)](r, s);
  return e;
}

using FactorPair = std::pair<WKind, WKind>;  // (left W-kind, right W-kind)

// defect(Y) = (P - k + W_left)(P + k - W_right) Y + Delta Y + k^2 Y
GradedForm factor_defect(const MaterialCoefficients& mc, WKind left, WKind right,
                         const GradedForm& Y) {
  const CylinderGrid& G = *mc.G;
  GradedForm mid = apply_P(G, Y);
  GradedForm wr = apply_W(mc, right, Y);
  mid += cplx(mc.k) * Y;
  mid -= wr;
  GradedForm out = apply_P(G, mid);
  out -= cplx(mc.k) * mid;
  out += apply_W(mc, left, mid);
  out += laplace(G, Y);
  GradedForm kk = Y;
  kk *= cplx(mc.k * mc.k);
  out += kk;
  return out;
}

PotentialMatrix measure_defect_matrix(const MaterialCoefficients& mc, WKind left, WKind right,
                                      const Frame& fr, double support_tol) {
  const CylinderGrid& G = *mc.G;
  const int n = G.size(), nt = G.tg.size();
  std::vector<Eigen::Matrix<cplx, 8, 8>> C(size_t(n), Eigen::Matrix<cplx, 8, 8>::Zero());
  for (int s = 0; s < 8; ++s) {
    GradedForm e = frame_field(G, fr, s);
    GradedForm col = factor_defect(mc, left, right, e);
    for (int p = 0; p < n; ++p)
      for (int r = 0; r < 8; ++r) C[size_t(p)](r, s) = col.slot(r)[p];
  }
  double scale = 0;
  for (int p = 0; p < n; ++p) scale = std::max(scale, C[size_t(p)].cwiseAbs().maxCoeff());
  PotentialMatrix out;
  for (int p = 0; p < n; ++p) {
    Eigen::Matrix<cplx, 8, 8> Qp = C[size_t(p)] * fr.Minv[size_t(p % nt)].cast<cplx>();
    if (Qp.cwiseAbs().maxCoeff() > support_tol * scale) {
      out.nodes.push_back(p);
      out.mats.push_back(Qp);
    }
  }
  return out;
}

}  // namespace

Potentials build_potentials(const MaterialCoefficients& mc, double support_tol) {
  const CylinderGrid& G = *mc.G;
  Frame fr = build_frame(G);
  Potentials pot;
  if (!mc.constant()) {
    pot.Q = measure_defect_matrix(mc, WKind::W, WKind::Wt, fr, support_tol);
    pot.Qprime = measure_defect_matrix(mc, WKind::Wt, WKind::W, fr, support_tol);
    pot.Qhat = measure_defect_matrix(mc, WKind::Wstar, WKind::Wbar, fr, support_tol);
  }
  const double k2 = mc.k * mc.k;
  Field lap_a = laplace0(G, mc.alpha);
  Field lap_b = laplace0(G, mc.beta);
  Field da2 = pair1(G, mc.dalpha, mc.dalpha, false);
  Field db2 = pair1(G, mc.dbeta, mc.dbeta, false);
  const int n = G.size();
  pot.q_alpha.resize(n);
  pot.q_beta.resize(n);
  pot.q0.resize(n);
  pot.q3.resize(n);
  for (int p = 0; p < n; ++p) {
    cplx base = k2 - mc.kappa[p] * mc.kappa[p];
    pot.q_alpha[p] = base + 0.5 * lap_a[p] + 0.25 * da2[p];
    pot.q_beta[p] = base + 0.5 * lap_b[p] + 0.25 * db2[p];
    pot.q0[p] = base - 0.5 * lap_b[p] + 0.25 * db2[p];
    pot.q3[p] = base - 0.5 * lap_a[p] + 0.25 * da2[p];
  }
  return pot;
}

GradedForm random_smooth_graded(const CylinderGrid& G, Rng& rng, double x1supp,
                                double supp_frac) {
  Frame fr = build_frame(G);
  const int nt = G.tg.size();
  double cx, cy, rad;
  if (G.tg.kind == ChartKind::PolarDisc) {
    cx = cy = 0;
    rad = G.tg.Lxi;
  } else {
    cx = 0.5 * G.tg.Lxi;
    cy = 0.5 * G.tg.Leta;
    rad = 0.5 * std::min(G.tg.Lxi, G.tg.Leta);
  }
  GradedForm Y = GradedForm::zero(G);
  for (int s = 0; s < 8; ++s) {
    double ax = urand(rng, -1, 1), bx = urand(rng, -1, 1), cr = urand(rng, -1, 1);
    double w1 = urand(rng, 0.8, 1.6), w2 = urand(rng, 0.8, 1.6);
    for (int i1 = 0; i1 < G.gx.n; ++i1) {
      double x1 = G.gx.x(i1);
      double env1 = bump(x1 / x1supp);
      if (env1 == 0) continue;
      for (int q = 0; q < nt; ++q) {
        double rr = std::hypot(G.tg.x[q] - cx, G.tg.y[q] - cy) / (supp_frac * rad);
        double env = env1 * bump(rr);
        if (env == 0) continue;
        cplx f = env * (ax + cplx(0, 1) * bx * std::sin(w1 * x1) +
                        cr * std::cos(w2 * (G.tg.x[q] + G.tg.y[q])));
        for (int r = 0; r < 8; ++r)
          Y.slot(r)[i1 * nt + q] += f * fr.M[size_t(q)](r, s);
      }
    }
  }
  return Y;
}

FactorizationReport verify_factorization(const MaterialCoefficients& mc, const Potentials& pot,
                                         int trials, Rng& rng) {
  const CylinderGrid& G = *mc.G;
  FactorizationReport rep;
  for (int t = 0; t < trials; ++t) {
    GradedForm Y = random_smooth_graded(G, rng, 0.75, 0.75);
    GradedForm lhs = factor_defect(mc, WKind::W, WKind::Wt, Y);  // = Q Y + O(h^2)
    GradedForm qy = pot.Q.apply(G, Y);
    double dnum = norm_l2(G, GradedForm(lhs - qy));
    double den = std::max(norm_l2(G, qy), norm_l2(G, Y));
    rep.residual_rel = std::max(rep.residual_rel, dnum / den);
    // the identity written with both operators in full
    GradedForm rhs_full = laplace(G, Y);
    rhs_full *= cplx(-1.0);
    GradedForm kk = Y;
    kk *= cplx(mc.k * mc.k);
    rhs_full -= kk;
    rhs_full += qy;
    rep.identity_rel = std::max(rep.identity_rel, dnum / norm_l2(G, rhs_full));

    // zeroth-order probe
    Field f = zero_field(G);
    const int nt = G.tg.size();
    for (int i1 = 0; i1 < G.gx.n; ++i1)
      for (int q = 0; q < nt; ++q)
        f[i1 * nt + q] = 1.0 + 0.5 * std::sin(G.gx.x(i1)) + 0.3 * G.tg.x[q];
    GradedForm fY = Y;
    for (int s = 0; s < 8; ++s) fY.slot(s) = f.cwiseProduct(Y.slot(s));
    GradedForm d1 = factor_defect(mc, WKind::W, WKind::Wt, fY);
    GradedForm d2 = factor_defect(mc, WKind::W, WKind::Wt, Y);
    for (int s = 0; s < 8; ++s) d2.slot(s) = f.cwiseProduct(d2.slot(s));
    rep.zeroth_order_rel =
        std::max(rep.zeroth_order_rel, norm_l2(G, GradedForm(d1 - d2)) /
                                           std::max(1e-300, norm_l2(G, d2)));
  }
  // closed-form diagonal entries vs the measured matrix, on the support;
  // the lemma's displayed zeros live in the (deg2 <- deg0) and
  // (deg1 <- deg3) blocks
  double na = 0, nb = 0, ea = 0, eb = 0, o21 = 0, o43 = 0;
  for (int p = 0; p < G.size(); ++p) {
    na = std::max(na, std::abs(pot.q_alpha[p]));
    nb = std::max(nb, std::abs(pot.q_beta[p]));
  }
  for (size_t i = 0; i < pot.Q.nodes.size(); ++i) {
    int p = pot.Q.nodes[i];
    const auto& M = pot.Q.mats[i];
    ea = std::max(ea, std::abs(M(0, 0) - pot.q_alpha[p]));
    eb = std::max(eb, std::abs(M(4, 4) - pot.q_beta[p]));
    for (int r = 1; r <= 3; ++r) o21 = std::max(o21, std::abs(M(r, 0)));
    for (int r = 5; r <= 7; ++r) o43 = std::max(o43, std::abs(M(r, 4)));
  }
  double scale = std::max(1e-300, std::max(na, nb));
  rep.q_alpha_rel = ea / scale;
  rep.q_beta_rel = eb / scale;
  rep.off_entry_21 = o21 / scale;
  rep.off_entry_43 = o43 / scale;
  return rep;
}

cplx integral_identity_eval(const CylinderGrid& G, const PotentialMatrix& Qdiff,
                            const GradedForm& Z1, const GradedForm& Y2) {
  GradedForm qz = Qdiff.apply(G, Z1);
  return inner(G, qz, Y2);
}

MaxwellPairResidual maxwell_pair_residual(const MaterialCoefficients& mc, const OneForm& E,
                                          const OneForm& H) {
  const CylinderGrid& G = *mc.G;
  const cplx iw = I * mc.omega;
  // *dE = i omega mu H
  OneForm sdE = star2(G, d1(G, E));
  OneForm farad{sdE.a1 - iw * mc.mu.cwiseProduct(H.a1), sdE.a2 - iw * mc.mu.cwiseProduct(H.a2),
                sdE.a3 - iw * mc.mu.cwiseProduct(H.a3)};
  OneForm sdH = star2(G, d1(G, H));
  OneForm amper{sdH.a1 + iw * mc.eps.cwiseProduct(E.a1),
                sdH.a2 + iw * mc.eps.cwiseProduct(E.a2),
                sdH.a3 + iw * mc.eps.cwiseProduct(E.a3)};
  auto n1 = [&](const OneForm& a) {
    return std::sqrt(std::abs(integrate(G, pair1(G, a, a, true))));
  };
  double scale = std::max(n1(E), n1(H));
  MaxwellPairResidual out;
  out.faraday_rel = n1(farad) / scale;
  out.ampere_rel = n1(amper) / scale;
  // X = (0, *H, 0, E)
  GradedForm X = GradedForm::zero(G);
  X.F2 = star1(G, H);
  X.A1 = E;
  GradedForm r = apply_P(G, X) + apply_V(mc, X);
  out.dirac_rel = norm_l2(G, r) / scale;
  return out;
}

}  // namespace cgomax
