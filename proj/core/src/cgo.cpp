// SPDX-License-Identifier: Apache-2.0
#include "cgomax/cgo.hpp"

#include <cmath>
#include <stdexcept>

namespace cgomax {

namespace {

constexpr OriginParity kEven = OriginParity::Even;

// ---- field assembly helpers ----------------------------------------------

Field tone_field(const CylinderGrid& G, double lambda, const TField& prof) {
  Field f = zero_field(G);
  const int nt = G.tg.size();
  for (int i1 = 0; i1 < G.gx.n; ++i1) {
    cplx ph = std::exp(I * lambda * G.gx.x(i1));
    for (int q = 0; q < nt; ++q) f[i1 * nt + q] = ph * prof[q];
  }
  return f;
}

// transversal-only phase field e^{i c r(x')}
Field radial_phase(const CylinderGrid& G, const PolarChart& ch, double c) {
  Field f(G.size());
  const int nt = G.tg.size();
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q) f[i1 * nt + q] = std::exp(I * c * ch.r[q]);
  return f;
}

GradedForm mul_graded(const CylinderGrid& G, const GradedForm& X, const Field& f) {
  GradedForm out = GradedForm::zero(G);
  for (int s = 0; s < GradedForm::kSlots; ++s) out.slot(s) = X.slot(s).cwiseProduct(f);
  return out;
}

// ---- graded first order operators with a custom x1 derivative -------------
using DX1 = std::function<Field(const Field&)>;

OneForm d0x(const CylinderGrid& G, const Field& f, const DX1& dx1) {
  OneForm a;
  a.a1 = dx1(f);
  a.a2 = partial(G, f, Dir::Xi, kEven);
  a.a3 = partial(G, f, Dir::Eta);
  return a;
}

TwoForm d1x(const CylinderGrid& G, const OneForm& a, const DX1& dx1) {
  TwoForm F;
  F.f23 = partial(G, a.a3, Dir::Xi, kEven) - partial(G, a.a2, Dir::Eta);
  F.f31 = partial(G, a.a1, Dir::Eta) - dx1(a.a3);
  F.f12 = dx1(a.a2) - partial(G, a.a1, Dir::Xi, kEven);
  return F;
}

Field d2x(const CylinderGrid& G, const TwoForm& F, const DX1& dx1) {
  return dx1(F.f23) + partial(G, F.f31, Dir::Xi, kEven) + partial(G, F.f12, Dir::Eta);
}

GradedForm graded_dx(const CylinderGrid& G, const GradedForm& X, const DX1& dx1) {
  GradedForm out = GradedForm::zero(G);
  out.A1 = d0x(G, X.s0, dx1);
  out.F2 = d1x(G, X.A1, dx1);
  out.s3 = d2x(G, X.F2, dx1);
  return out;
}

GradedForm graded_deltax(const CylinderGrid& G, const GradedForm& X, const DX1& dx1) {
  GradedForm out = GradedForm::zero(G);
  // delta = (-1)^k * d * on k-forms
  out.s0 = -star3(G, d2x(G, star1(G, X.A1), dx1));
  out.A1 = star2(G, d1x(G, star2(G, X.F2), dx1));
  TwoForm s = star1(G, d0x(G, star3(G, X.s3), dx1));
  out.F2.f23 = -s.f23;
  out.F2.f31 = -s.f31;
  out.F2.f12 = -s.f12;
  return out;
}

// P_tau with real weight e^{tau x1} and a custom x1-derivative:
// (1/i)[(d - tau dx1^) - (delta + tau i_{dx1})]
GradedForm dirac_tau_x(const CylinderGrid& G, const GradedForm& X, double tau,
                       const DX1& dx1) {
  OneForm dx1_form{Field::Ones(G.size()), zero_field(G), zero_field(G)};
  GradedForm d = graded_dx(G, X, dx1);
  GradedForm dl = graded_deltax(G, X, dx1);
  // wedge and interior parts
  OneForm w0 = wedge0(G, dx1_form, X.s0);
  TwoForm w1 = wedge1(G, dx1_form, X.A1);
  Field w2 = wedge2(G, dx1_form, X.F2);
  d.A1.a1 -= tau * w0.a1;
  d.A1.a2 -= tau * w0.a2;
  d.A1.a3 -= tau * w0.a3;
  d.F2.f23 -= tau * w1.f23;
  d.F2.f31 -= tau * w1.f31;
  d.F2.f12 -= tau * w1.f12;
  d.s3 -= tau * w2;
  dl.s0 += tau * interior1(G, dx1_form, X.A1);
  OneForm i2 = interior2(G, dx1_form, X.F2);
  dl.A1.a1 += tau * i2.a1;
  dl.A1.a2 += tau * i2.a2;
  dl.A1.a3 += tau * i2.a3;
  TwoForm i3 = interior3(G, dx1_form, X.s3);
  dl.F2.f23 += tau * i3.f23;
  dl.F2.f31 += tau * i3.f31;
  dl.F2.f12 += tau * i3.f12;
  GradedForm out = d - dl;
  out *= cplx(0.0, -1.0);
  return out;
}

// spectral x1-derivative for decaying fields: padded line FFT per node
Field dx1_spec(const ConjugatedProblem& P, const Field& u) {
  const CylinderGrid& G = *P.G;
  const LineGrid line = P.line();
  const int nt = G.tg.size(), n1 = G.gx.n;
  Field out(G.size());
  Eigen::VectorXcd buf(n1);
  for (int q = 0; q < nt; ++q) {
    for (int i1 = 0; i1 < n1; ++i1) buf[i1] = u[i1 * nt + q];
    Eigen::VectorXcd d = fft_derivative(line, buf, 1);
    for (int i1 = 0; i1 < n1; ++i1) out[i1 * nt + q] = d[i1];
  }
  return out;
}

// the four scalar-type variables of a graded tone amplitude and their images
// under (Delta + k^2): the component equations decouple per variable at c==1
struct ToneVars {
  TField r0, s0v, r11, s11;  // variable profiles (R0, S0, R1_1, S1_1)
};

ToneVars tone_vars_from_slots(const CylinderGrid& G, const TField& a0, const TField& a1,
                              const TField& b0, const TField& b1, const TField& m14) {
  const int nt = G.tg.size();
  ToneVars v;
  v.r0.resize(nt);
  v.s0v.resize(nt);
  v.r11.resize(nt);
  v.s11.resize(nt);
  for (int q = 0; q < nt; ++q) {
    v.r0[q] = m14[q] * a0[q];
    v.s0v[q] = m14[q] * b0[q];
    v.r11[q] = m14[q] * a1[q];
    v.s11[q] = m14[q] * b1[q];
  }
  return v;
}

// graded amplitude from variable profiles, as 3D fields with the tone
GradedForm amplitude_from_vars(const CylinderGrid& G, double lambda, const ToneVars& v) {
  GradedForm A = GradedForm::zero(G);
  const int nt = G.tg.size();
  A.s0 = tone_field(G, lambda, v.r0);
  A.A1.a1 = tone_field(G, lambda, v.r11);
  // slot2 = *(S1_1 dx1): F23 = w g^{11} S1_1 = w S1_1 at c == 1
  TField f23(nt), s3p(nt);
  for (int q = 0; q < nt; ++q) {
    f23[q] = G.w[q] * v.s11[q];
    s3p[q] = G.w[q] * v.s0v[q];
  }
  A.F2.f23 = tone_field(G, lambda, f23);
  A.s3 = tone_field(G, lambda, s3p);
  return A;
}

// slot-profile array for the solver's GradedRhs from variable profiles
std::array<TField, 8> slot_profiles_from_vars(const CylinderGrid& G, const ToneVars& v) {
  const int nt = G.tg.size();
  std::array<TField, 8> out;
  for (auto& t : out) t = TField();
  out[0] = v.r0;
  TField s4(nt), s1(nt);
  for (int q = 0; q < nt; ++q) {
    s4[q] = G.w[q] * v.s0v[q];
    s1[q] = G.w[q] * v.s11[q];
  }
  out[4] = s4;   // 3-form slot
  out[1] = s1;   // F23 slot
  out[5] = v.r11;  // a1 slot
  return out;
}

}  // namespace

double chi_profile(double theta, double center, double width) {
  return bump((theta - center) / width);
}

TField dbar_tone_profile(const TransversalGrid& tg, const PolarChart& chart, double lambda,
                         int rsign, const TField& w) {
  // dbar(e^{i lambda x1} w) = e^{i lambda x1} (i lambda w + i rsign dr-dir(w))/2
  TField dxi = tpartial(tg, w, true, kEven);
  TField deta = tpartial(tg, w, false, kEven);
  const int n = tg.size();
  TField out(n);
  for (int q = 0; q < n; ++q) {
    // directional derivative along grad r
    cplx dr = (tg.gi11[q] * chart.dr_xi[q] + tg.gi12[q] * chart.dr_eta[q]) * dxi[q] +
              (tg.gi12[q] * chart.dr_xi[q] + tg.gi22[q] * chart.dr_eta[q]) * deta[q];
    out[q] = 0.5 * (I * lambda * w[q] + I * double(rsign) * dr);
  }
  return out;
}

double transport_criterion(const TransversalGrid& tg, const PolarChart& chart, double lambda,
                           int rsign, const TField& comp, int weight_exp) {
  const int n = tg.size();
  TField weighted(n);
  for (int q = 0; q < n; ++q)
    weighted[q] = comp[q] * std::pow(chart.m[q], 0.25 * weight_exp);
  TField res = dbar_tone_profile(tg, chart, lambda, rsign, weighted);
  double num = 0, den = 0;
  for (int q = 0; q < n; ++q) {
    num += tg.dV[q] * std::norm(res[q]);
    den += tg.dV[q] * std::norm(comp[q]);
  }
  return std::sqrt(num / std::max(1e-300, den));
}

TField transport_solve_scalar(const TransversalGrid& tg, const PolarChart& chart,
                              double lambda, int rsign, const TField& theta_seed) {
  // a = |g|^{-1/4} e^{i lambda (x1 + i rsign r)} seed(theta): returns the
  // transversal profile (tone implied)
  const int n = tg.size();
  TField out(n);
  for (int q = 0; q < n; ++q)
    out[q] = std::pow(chart.m[q], -0.25) * std::exp(-lambda * double(rsign) * chart.r[q]) *
             theta_seed[q];
  return out;
}

DeltaTauTerms delta_tau_expand(const CylinderGrid& G, const ChristoffelField& C,
                               const OneForm& drho, const Field& rho3d, const Field& u0,
                               const OneForm* u1) {
  DeltaTauTerms T;
  Field rr = pair1(G, drho, drho, false);  // <d rho, d rho> bilinear
  Field lap_rho = laplace0(G, rho3d);
  // raised gradient of rho
  std::array<Field, 3> Xup;
  Xup[0].resize(G.size());
  Xup[1].resize(G.size());
  Xup[2].resize(G.size());
  for (int p = 0; p < G.size(); ++p) {
    Xup[0][p] = G.i11[p] * drho.a1[p];
    Xup[1][p] = G.i22[p] * drho.a2[p] + G.i23[p] * drho.a3[p];
    Xup[2][p] = G.i23[p] * drho.a2[p] + G.i33[p] * drho.a3[p];
  }
  if (u0.size()) {
    T.has_scalar = true;
    T.t2_0 = rr.cwiseProduct(u0);
    OneForm du = d0(G, u0);
    Field adv = Xup[0].cwiseProduct(du.a1) + Xup[1].cwiseProduct(du.a2) +
                Xup[2].cwiseProduct(du.a3);
    T.t1_0 = 2.0 * adv + lap_rho.cwiseProduct(u0);
    T.t0_0 = laplace0(G, u0);
  }
  if (u1) {
    T.has_oneform = true;
    T.t2_1 = OneForm{rr.cwiseProduct(u1->a1), rr.cwiseProduct(u1->a2), rr.cwiseProduct(u1->a3)};
    OneForm nab = covariant_deriv1(G, C, Xup, *u1);
    T.t1_1 = OneForm{2.0 * nab.a1 + lap_rho.cwiseProduct(u1->a1),
                     2.0 * nab.a2 + lap_rho.cwiseProduct(u1->a2),
                     2.0 * nab.a3 + lap_rho.cwiseProduct(u1->a3)};
    T.t0_1 = laplace1(G, *u1);
  }
  return T;
}

double delta_tau_reassembly_defect(const CylinderGrid& G, const OneForm& drho, double tau,
                                   const DeltaTauTerms& terms, const Field& u0,
                                   const OneForm* u1) {
  GradedForm X = GradedForm::zero(G);
  if (u0.size()) X.s0 = u0;
  if (u1) X.A1 = *u1;
  GradedForm composite = laplace_tau(G, X, drho, tau);
  double num = 0, den = 0;
  if (terms.has_scalar) {
    Field sum = tau * tau * terms.t2_0 - tau * terms.t1_0 + terms.t0_0;
    num += sq(norm_l2(G, Field(composite.s0 - sum)));
    den += sq(norm_l2(G, sum));
  }
  if (terms.has_oneform && u1) {
    OneForm sum{tau * tau * terms.t2_1.a1 - tau * terms.t1_1.a1 + terms.t0_1.a1,
                tau * tau * terms.t2_1.a2 - tau * terms.t1_1.a2 + terms.t0_1.a2,
                tau * tau * terms.t2_1.a3 - tau * terms.t1_1.a3 + terms.t0_1.a3};
    OneForm diff{composite.A1.a1 - sum.a1, composite.A1.a2 - sum.a2, composite.A1.a3 - sum.a3};
    num += std::abs(integrate(G, pair1(G, diff, diff, true)));
    den += std::abs(integrate(G, pair1(G, sum, sum, true)));
  }
  return std::sqrt(num / std::max(1e-300, den));
}

Eigen::VectorXd mask_region(const CylinderGrid& G, double mask_x1) {
  Eigen::VectorXd w(G.size());
  const int nt = G.tg.size();
  for (int i1 = 0; i1 < G.gx.n; ++i1) {
    double v = std::abs(G.gx.x(i1)) <= mask_x1 ? 1.0 : 0.0;
    for (int q = 0; q < nt; ++q) w[i1 * nt + q] = v;
  }
  return w;
}

GradedForm CgoSolution::remainder_unprimed(const CylinderGrid& G) const {
  Field ph(G.size());
  const int nt = G.tg.size();
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q)
      ph[i1 * nt + q] = std::exp(I * tau * double(rsign) * chart->r[q]);
  return mul_graded(G, Rp, ph);
}

GradedForm CgoSolution::z_envelope(const CylinderGrid& G) const {
  GradedForm R = remainder_unprimed(G);
  return A + R;
}

CgoSolution build_schrodinger_cgo(const CgoRecipe& rec, const TField& a0, const TField& a1,
                                  const TField& b0, const TField& b1) {
  const ConjugatedProblem& P = *rec.prob;
  const CylinderGrid& G = *P.G;
  const PolarChart& ch = *rec.chart;
  P.require_admissible(rec.tau, true);

  const int nt = G.tg.size();
  TField m14(nt);
  for (int q = 0; q < nt; ++q) m14[q] = std::pow(ch.m[q], -0.25);

  CgoSolution sol;
  sol.tau = rec.tau;
  sol.lambda = rec.lambda;
  sol.rsign = rec.rsign;
  sol.chart = &ch;

  ToneVars vars = tone_vars_from_slots(G, a0, a1, b0, b1, m14);
  sol.A = amplitude_from_vars(G, rec.lambda, vars);

  // F2-part: (Delta + k^2) A per scalar variable; the phase-conjugated tone
  // profiles pick up e^{-i tau rsign r}
  const double k = P.k;
  TField cphase(nt);
  for (int q = 0; q < nt; ++q)
    cphase[q] = std::exp(-I * rec.tau * double(rec.rsign) * ch.r[q]);
  auto f_of = [&](const TField& v) {
    TField lap = t_lap0(G.tg, v);
    TField out(nt);
    for (int q = 0; q < nt; ++q)
      out[q] = ((k * k - rec.lambda * rec.lambda) * v[q] + lap[q]) * cphase[q];
    return out;
  };
  ToneVars fv;
  fv.r0 = f_of(vars.r0);
  fv.s0v = f_of(vars.s0v);
  fv.r11 = f_of(vars.r11);
  fv.s11 = f_of(vars.s11);

  GradedRhs rhs;
  rhs.has_tone = true;
  rhs.tone = rec.lambda;
  rhs.tone_prof = slot_profiles_from_vars(G, fv);

  const bool has_q = rec.pot && !rec.pot->Q.empty();
  Field phase_m = radial_phase(G, ch, -rec.tau * rec.rsign);
  Field phase_p = radial_phase(G, ch, +rec.tau * rec.rsign);
  SolveDiag sdiag;
  if (has_q) {
    GradedForm QA = rec.pot->Q.apply(G, sol.A);
    rhs.has_f1 = true;
    rhs.F1 = mul_graded(G, QA, phase_m);
    rhs.F1 *= cplx(-1.0);
    GradedPotential Qop = [&](const GradedForm& V) {
      GradedForm t = mul_graded(G, V, phase_p);
      GradedForm qt = rec.pot->Q.apply(G, t);
      return mul_graded(G, qt, phase_m);
    };
    sol.Rp = solve_graded_potential(P, rec.tau, Qop, rhs, rec.neumann_tol, &sdiag);
  } else {
    sol.Rp = solve_graded(P, rec.tau, rhs, &sdiag);
  }

  sol.diag.eq_residual = sdiag.channel_residual;
  sol.diag.rhs_tail = sdiag.rhs_tail;
  sol.diag.neumann_iters = sdiag.iterations;
  sol.diag.contraction = sdiag.contraction;

  Eigen::VectorXd mask = mask_region(G, rec.mask_x1);
  Eigen::VectorXd wm = agmon_weight(G, -2.0 * P.delta);
  sol.diag.r_norm_m = norm_l2(G, sol.Rp, &mask);
  sol.diag.r_norm_wm = norm_l2(G, sol.Rp, &wm);
  sol.diag.a_norm_m = norm_l2(G, sol.A, &mask);
  return sol;
}

namespace {

// Yp = (Ptau + k - W_kind)(v_tone + Rp) with the analytic tone derivative on
// the amplitude part and the spectral derivative on the remainder
GradedForm companion_field(const CgoRecipe& rec, const GradedForm& v_tone,
                           const GradedForm& Rp, WKind kind, double k_shift_sign) {
  const ConjugatedProblem& P = *rec.prob;
  const CylinderGrid& G = *P.G;
  const double lam = rec.lambda;
  DX1 tone_dx = [&](const Field& u) { return Field(I * lam * u); };
  DX1 spec_dx = [&](const Field& u) { return dx1_spec(P, u); };
  GradedForm Yp = dirac_tau_x(G, v_tone, rec.tau, tone_dx);
  Yp += dirac_tau_x(G, Rp, rec.tau, spec_dx);
  GradedForm vsum = v_tone + Rp;
  GradedForm kpart = vsum;
  kpart *= cplx(k_shift_sign * P.k);
  Yp += kpart;
  GradedForm wpart = apply_W(*rec.mc, kind, vsum);
  Yp -= wpart;
  return Yp;
}

}  // namespace

CgoSolution build_maxwell_cgo(const CgoRecipe& rec, double budget_cb) {
  const ConjugatedProblem& P = *rec.prob;
  const CylinderGrid& G = *P.G;
  const PolarChart& ch = *rec.chart;
  if (P.k <= 0) throw std::invalid_argument("build_maxwell_cgo: k > 0 required");
  if (std::abs(P.k - rec.mc->k) > 1e-12)
    throw std::invalid_argument("build_maxwell_cgo: coefficient k does not match the solver");

  const int nt = G.tg.size();
  const double k = P.k, lam = rec.lambda, tau = rec.tau;
  TField base(nt);
  for (int q = 0; q < nt; ++q)
    base[q] = std::exp(-lam * double(rec.rsign) * ch.r[q]) *
              chi_profile(ch.th[q], rec.chi_center, rec.chi_width);
  const cplx ika = I * k;
  TField a1(nt), a0(nt), b1(nt), b0(nt);
  for (int q = 0; q < nt; ++q) {
    a1[q] = (ika * rec.s0 / tau) * base[q];
    a0[q] = ((tau - I * lam) / ika) * a1[q];
    b1[q] = (ika * rec.t0 / tau) * base[q];
    b0[q] = ((tau - I * lam) / ika) * b1[q];
  }
  CgoSolution sol = build_schrodinger_cgo(rec, a0, a1, b0, b1);

  // amplitude identity a0 = (tau - i lambda)/(i k) a1, machine precision
  double ai = 0, as = 0;
  for (int q = 0; q < nt; ++q) {
    ai = std::max(ai, std::abs(ika * a0[q] - (tau - I * lam) * a1[q]));
    as = std::max(as, std::abs(a1[q]) * std::abs(tau - I * lam));
  }
  sol.diag.amp_identity = as > 0 ? ai / as : 0.0;

  // companion Dirac field Y = (P + k - W^t) Z in the primed frame
  Field phase_m = radial_phase(G, ch, -tau * rec.rsign);
  GradedForm v_tone = mul_graded(G, sol.A, phase_m);
  sol.Y = companion_field(rec, v_tone, sol.Rp, WKind::Wt, +1.0);

  // scalar-part smallness: the numerical surrogate of the uniqueness step
  Eigen::VectorXd mask = mask_region(G, rec.mask_x1);
  Eigen::VectorXd wm(G.size());
  const int n1 = G.gx.n;
  for (int i1 = 0; i1 < n1; ++i1) {
    double x1 = G.gx.x(i1);
    double v = (std::abs(x1) <= rec.mask_x1)
                   ? std::exp(-2.0 * tau * (x1 + rec.mask_x1))
                   : 0.0;
    for (int q = 0; q < nt; ++q) wm[i1 * nt + q] = v;
  }
  sol.diag.y_norm = norm_l2(G, sol.Y, &wm);
  sol.diag.y0_norm = norm_l2(G, sol.Y.s0, &wm);
  sol.diag.y3_norm = norm_l2(G, sol.Y.s3, &wm);
  double h = std::max({G.gx.h, G.tg.hxi, G.tg.Lxi * G.tg.heta});
  sol.diag.uniq_budget = budget_cb * (h * h + 1.0 / std::abs(tau)) * sol.diag.y_norm;
  if (sol.diag.y0_norm + sol.diag.y3_norm > sol.diag.uniq_budget)
    throw std::runtime_error(
        "build_maxwell_cgo: scalar parts exceed the uniqueness budget (increase tau or "
        "resolution)");
  return sol;
}

CgoSolution build_adjoint_cgo(const CgoRecipe& rec) {
  const ConjugatedProblem& P = *rec.prob;
  const CylinderGrid& G = *P.G;
  const PolarChart& ch = *rec.chart;
  const int nt = G.tg.size();
  const double tau = rec.tau;
  P.require_admissible(tau, true);

  TField m14(nt);
  for (int q = 0; q < nt; ++q) m14[q] = std::pow(ch.m[q], -0.25);

  // internal ansatz constants: the displayed amplitude for real (s0,t0)
  // emerges after s -> -i s0, t -> -i t0
  const cplx s_in = -I * rec.s0, t_in = -I * rec.t0;

  CgoSolution sol;
  sol.tau = tau;
  sol.lambda = 0.0;
  sol.rsign = rec.rsign;
  sol.chart = &ch;

  ToneVars vars;
  vars.r0 = TField::Zero(nt);
  vars.s0v = TField::Zero(nt);
  vars.r11.resize(nt);
  vars.s11.resize(nt);
  for (int q = 0; q < nt; ++q) {
    vars.r11[q] = m14[q] * s_in;
    vars.s11[q] = m14[q] * t_in;
  }
  sol.A = amplitude_from_vars(G, 0.0, vars);

  // F = e^{-i tau r} (Delta + k^2 - Qhat) A, cut smoothly to a band around M
  const double k = P.k;
  TField cphase(nt);
  for (int q = 0; q < nt; ++q) cphase[q] = std::exp(-I * tau * double(rec.rsign) * ch.r[q]);
  auto f_of = [&](const TField& v) {
    TField lap = t_lap0(G.tg, v);
    TField out(nt);
    for (int q = 0; q < nt; ++q) out[q] = (k * k * v[q] + lap[q]) * cphase[q];
    return out;
  };
  ToneVars fv;
  fv.r0 = f_of(vars.r0);
  fv.s0v = f_of(vars.s0v);
  fv.r11 = f_of(vars.r11);
  fv.s11 = f_of(vars.s11);
  GradedForm F1 = GradedForm::zero(G);
  {
    std::array<TField, 8> sp = slot_profiles_from_vars(G, fv);
    for (int s = 0; s < 8; ++s)
      if (sp[size_t(s)].size()) F1.slot(s) = tone_field(G, 0.0, sp[size_t(s)]);
  }
  if (rec.pot && !rec.pot->Qhat.empty()) {
    GradedForm QA = rec.pot->Qhat.apply(G, sol.A);
    Field phase_m = radial_phase(G, ch, -tau * rec.rsign);
    F1 -= mul_graded(G, QA, phase_m);
  }
  // smooth cut to the band |x1| <= mask + margin
  const double cut_lo = rec.mask_x1 + 0.2, cut_hi = rec.mask_x1 + 1.0;
  Field cut(G.size());
  for (int i1 = 0; i1 < G.gx.n; ++i1) {
    double a = std::abs(G.gx.x(i1));
    double v = 1.0 - cinf_step((a - cut_lo) / (cut_hi - cut_lo));
    for (int q = 0; q < nt; ++q) cut[i1 * nt + q] = v;
  }
  F1 = mul_graded(G, F1, cut);

  GradedRhs rhs;
  rhs.has_f1 = true;
  rhs.F1 = F1;
  SolveDiag sdiag;
  if (rec.pot && !rec.pot->Qhat.empty()) {
    Field phase_m = radial_phase(G, ch, -tau * rec.rsign);
    Field phase_p = radial_phase(G, ch, +tau * rec.rsign);
    GradedPotential Qop = [&](const GradedForm& V) {
      GradedForm t = mul_graded(G, V, phase_p);
      GradedForm qt = rec.pot->Qhat.apply(G, t);
      return mul_graded(G, qt, phase_m);
    };
    sol.Rp = solve_graded_potential(P, tau, Qop, rhs, rec.neumann_tol, &sdiag);
  } else {
    sol.Rp = solve_graded(P, tau, rhs, &sdiag);
  }
  sol.diag.eq_residual = sdiag.channel_residual;
  sol.diag.rhs_tail = sdiag.rhs_tail;

  // Y = (1/tau)(P + k - Wbar) Z
  Field phase_m = radial_phase(G, ch, -tau * rec.rsign);
  GradedForm v_tone = mul_graded(G, sol.A, phase_m);
  sol.Y = companion_field(rec, v_tone, sol.Rp, WKind::Wbar, +1.0);
  sol.Y *= cplx(1.0 / tau);

  // leading amplitude: i (d rho ^ + i_{d rho}) A with d rho = dx1 + i s dr
  OneForm drho = OneForm::zero(G);
  drho.a1 = Field::Ones(G.size());
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q) {
      drho.a2[i1 * nt + q] = I * double(rec.rsign) * ch.dr_xi[q];
      drho.a3[i1 * nt + q] = I * double(rec.rsign) * ch.dr_eta[q];
    }
  GradedForm wedge = GradedForm::zero(G);
  wedge.A1 = wedge0(G, drho, sol.A.s0);
  wedge.F2 = wedge1(G, drho, sol.A.A1);
  wedge.s3 = wedge2(G, drho, sol.A.F2);
  GradedForm inter = GradedForm::zero(G);
  inter.s0 = interior1(G, drho, sol.A.A1);
  inter.A1 = interior2(G, drho, sol.A.F2);
  inter.F2 = interior3(G, drho, sol.A.s3);
  GradedForm lead = wedge + inter;
  lead *= I;

  // compare e^{i tau r} Yp against the leading amplitude over M
  Field phase_p = radial_phase(G, ch, +tau * rec.rsign);
  GradedForm Yun = mul_graded(G, sol.Y, phase_p);
  Eigen::VectorXd mask = mask_region(G, rec.mask_x1);
  double dl = norm_l2(G, GradedForm(Yun - lead), &mask);
  double nl = norm_l2(G, lead, &mask);
  sol.diag.amp_lead_err = dl / std::max(1e-300, nl);
  Eigen::VectorXd wmm = agmon_weight(G, -2.0 * P.delta);
  sol.diag.r_norm_m = norm_l2(G, sol.Rp, &mask);
  sol.diag.r_norm_wm = norm_l2(G, sol.Rp, &wmm);
  sol.diag.a_norm_m = norm_l2(G, sol.A, &mask);
  sol.diag.y_norm = norm_l2(G, sol.Y, &mask);
  return sol;
}

}  // namespace cgomax
