// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "cgomax/cgo.hpp"
#include "helpers.hpp"

using namespace cgomax;
using namespace cgomax::testing;

namespace {

struct CgoLab {
  CylinderGrid G;
  TransversalSpectrum sp;
  ConjugatedProblem P;
  ConformalMetric2D met;
  PolarChart chart;
  MaterialCoefficients mc;
  Potentials pot;

  CgoLab(int n1 = 256, double X1 = 8.0, int nr = 16, int nphi = 32, int nev = 60,
         double k = 1.0)
      : G(disc_cylinder(n1, X1, nr, nphi)),
        sp(build_spectrum(G.tg, nev)),
        chart(build_polar_chart(G.tg, met, Eigen::Vector2d(1.15, 0.0))),
        mc(MaterialCoefficients::build(G, Field::Constant(G.size(), 1.0),
                                       Field::Constant(G.size(), 1.0), k, 1.0, 1.0, true)),
        pot(build_potentials(mc)) {
    P.G = &G;
    P.sp = &sp;
    P.k = k;
    P.delta = 0.55;
    P.gmin = 0.5;
  }

  CgoRecipe recipe(double tau, double lambda = 2.0, cplx s0 = 1.0, cplx t0 = 0.0,
                   int rsign = +1) {
    CgoRecipe r;
    r.prob = &P;
    r.mc = &mc;
    r.pot = &pot;
    r.chart = &chart;
    r.tau = nudge_tau(tau, P.k, merged_spectrum(sp), P.gmin, 2.0);
    r.lambda = lambda;
    r.rsign = rsign;
    r.chi_center = 0.0;
    r.chi_width = 0.5;
    r.s0 = s0;
    r.t0 = t0;
    return r;
  }
};

}  // namespace

TEST_CASE("eikonal structure of the phase") {
  CgoLab L;
  // <d rho, d rho> = 0: the tau^2 term of the expansion vanishes to chart
  // accuracy; <d psi, d phi> = 0 exactly by the block structure
  const CylinderGrid& G = L.G;
  const int nt = G.tg.size();
  OneForm drho = OneForm::zero(G);
  drho.a1 = Field::Ones(G.size());
  Field rho3d(G.size());
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q) {
      drho.a2[i1 * nt + q] = I * L.chart.dr_xi[q];
      drho.a3[i1 * nt + q] = I * L.chart.dr_eta[q];
      rho3d[i1 * nt + q] = G.gx.x(i1) + I * L.chart.r[q];
    }
  Field rr = pair1(G, drho, drho, false);
  double emax = rr.cwiseAbs().maxCoeff();
  CHECK(emax < 3.0 * (L.chart.eikonal_err + 1e-12));
  // real/imag split: |d psi|^2 = |d phi|^2 and <d psi, d phi> = 0
  OneForm dpsi = OneForm::zero(G);
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q) {
      dpsi.a2[i1 * nt + q] = L.chart.dr_xi[q];
      dpsi.a3[i1 * nt + q] = L.chart.dr_eta[q];
    }
  OneForm dphi = OneForm::zero(G);
  dphi.a1 = Field::Ones(G.size());
  Field cross = pair1(G, dpsi, dphi, false);
  CHECK(cross.cwiseAbs().maxCoeff() < 1e-14);  // block metric: exact
}

TEST_CASE("transport criteria on the chart") {
  CgoLab L;
  const TransversalGrid& tg = L.G.tg;
  const int nt = tg.size();

  SUBCASE("a = |g|^{-1/4} const satisfies the scalar criterion exactly") {
    TField a(nt);
    for (int q = 0; q < nt; ++q) a[q] = std::pow(L.chart.m[q], -0.25);
    double res = transport_criterion(tg, L.chart, 0.0, +1, a, +1);
    CHECK(res < 1e-12);
  }

  SUBCASE("tone amplitude with chi(theta) passes; wrong weight fails") {
    TField seed(nt);
    for (int q = 0; q < nt; ++q) seed[q] = chi_profile(L.chart.th[q], 0.0, 0.5);
    TField a = transport_solve_scalar(tg, L.chart, 2.0, +1, seed);
    double res = transport_criterion(tg, L.chart, 2.0, +1, a, +1);
    CHECK(res < 0.02);  // finite differences of the chart fields

    // a_theta carries the |g|^{-1/4} weight in its criterion: testing the
    // same profile against the a_r-type (+1) weight must fail
    TField atheta(nt);
    for (int q = 0; q < nt; ++q)
      atheta[q] = std::pow(L.chart.m[q], +0.25) *
                  std::exp(-2.0 * L.chart.r[q]) * seed[q];
    double res_theta = transport_criterion(tg, L.chart, 2.0, +1, atheta, -1);
    double res_wrong = transport_criterion(tg, L.chart, 2.0, +1, atheta, +1);
    CHECK(res_theta < 0.02);
    CHECK(res_wrong > 10.0 * res_theta);
  }
}

TEST_CASE("delta_tau expansion terms") {
  CgoLab L;
  const CylinderGrid& G = L.G;
  ChristoffelField C = christoffels(G);

  SUBCASE("rho = x1, u = 1: terms are (tau^2, 0, 0)") {
    OneForm drho = OneForm::zero(G);
    drho.a1 = Field::Ones(G.size());
    Field rho3d(G.size());
    const int nt = G.tg.size();
    for (int i1 = 0; i1 < G.gx.n; ++i1)
      for (int q = 0; q < nt; ++q) rho3d[i1 * nt + q] = G.gx.x(i1);
    Field one = Field::Ones(G.size());
    DeltaTauTerms T = delta_tau_expand(G, C, drho, rho3d, one, nullptr);
    CHECK((T.t2_0 - one).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(T.t1_0.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(T.t0_0.cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("reassembly matches the composite conjugated laplacian") {
    Rng rng(83);
    OneForm drho = OneForm::zero(G);
    drho.a1 = Field::Ones(G.size());
    Field rho3d(G.size());
    const int nt = G.tg.size();
    for (int i1 = 0; i1 < G.gx.n; ++i1)
      for (int q = 0; q < nt; ++q) {
        drho.a2[i1 * nt + q] = I * L.chart.dr_xi[q];
        drho.a3[i1 * nt + q] = I * L.chart.dr_eta[q];
        rho3d[i1 * nt + q] = G.gx.x(i1) + I * L.chart.r[q];
      }
    GradedForm X = random_smooth_graded(G, rng, 0.7, 0.7);
    Field u0 = X.s0;
    OneForm u1 = X.A1;
    DeltaTauTerms T = delta_tau_expand(G, C, drho, rho3d, u0, &u1);
    // the tau powers must reassemble the composite operator; the defect is a
    // pure discrete commutator, small at moderate tau and O(h^2)
    double d = delta_tau_reassembly_defect(G, drho, 3.0, T, u0, &u1);
    CHECK(d < 0.05);
    CylinderGrid G2 = disc_cylinder(256, 8.0, 32, 64);
    // refinement of the transversal mesh shrinks the defect
    ConformalMetric2D met;
    PolarChart ch2 = build_polar_chart(G2.tg, met, Eigen::Vector2d(1.15, 0.0));
    ChristoffelField C2 = christoffels(G2);
    OneForm drho2 = OneForm::zero(G2);
    drho2.a1 = Field::Ones(G2.size());
    Field rho2(G2.size());
    const int nt2 = G2.tg.size();
    for (int i1 = 0; i1 < G2.gx.n; ++i1)
      for (int q = 0; q < nt2; ++q) {
        drho2.a2[i1 * nt2 + q] = I * ch2.dr_xi[q];
        drho2.a3[i1 * nt2 + q] = I * ch2.dr_eta[q];
        rho2[i1 * nt2 + q] = G2.gx.x(i1) + I * ch2.r[q];
      }
    Rng rng2(83);
    GradedForm X2 = random_smooth_graded(G2, rng2, 0.7, 0.7);
    DeltaTauTerms T2 = delta_tau_expand(G2, C2, drho2, rho2, X2.s0, &X2.A1);
    double d2 = delta_tau_reassembly_defect(G2, drho2, 3.0, T2, X2.s0, &X2.A1);
    CHECK(d2 < 0.6 * d);
  }
}

TEST_CASE("maxwell-compatible CGO at constant coefficients") {
  CgoLab L;

  SUBCASE("zero polarization gives zero") {
    CgoRecipe r = L.recipe(8.0, 2.0, 0.0, 0.0);
    CgoSolution sol = build_maxwell_cgo(r);
    CHECK(norm_l2(L.G, sol.A) == 0.0);
    CHECK(norm_l2(L.G, sol.Rp) < 1e-14);
  }

  SUBCASE("residuals, scalar-part smallness, amplitude identity") {
    CgoRecipe r = L.recipe(8.0, 2.0, 1.0, 0.0);
    CgoSolution sol = build_maxwell_cgo(r);
    CHECK(sol.diag.amp_identity < 1e-14);
    CHECK(sol.diag.eq_residual < 1e-6);
    CHECK(sol.diag.y_norm > 0.0);
    CHECK(sol.diag.y0_norm / sol.diag.y_norm < 1e-6);
    CHECK(sol.diag.y3_norm / sol.diag.y_norm < 1e-6);
    CHECK(sol.diag.r_norm_m > 0.0);

    // both polarizations: the (0,1) choice excites the b-slots
    CgoRecipe r2 = L.recipe(8.0, 2.0, 0.0, 1.0);
    CgoSolution sol2 = build_maxwell_cgo(r2);
    CHECK(norm_l2(L.G, sol2.A.s3) > 0.0);
    CHECK(sol2.diag.y0_norm / sol2.diag.y_norm < 1e-6);
  }

  SUBCASE("remainder decays like 1/tau over a sweep") {
    std::vector<double> taus = {8, 16, 32};
    std::vector<double> lx, ly;
    for (double t : taus) {
      CgoRecipe r = L.recipe(t, 2.0, 1.0, 0.5);
      CgoSolution sol = build_maxwell_cgo(r);
      lx.push_back(std::log(r.tau));
      ly.push_back(std::log(sol.diag.r_norm_m));
    }
    double slope = fit_slope(lx, ly);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.2));
    // halving check between successive doublings
    for (size_t i = 0; i + 1 < ly.size(); ++i) {
      double ratio = std::exp(ly[i + 1]) / std::exp(ly[i]);
      CHECK(ratio > 0.3);
      CHECK(ratio < 0.7);
    }
  }
}

TEST_CASE("adjoint CGO: displayed leading amplitude and decay") {
  CgoLab L;
  CgoRecipe r = L.recipe(12.0, 2.0, 1.0, 0.7);
  CgoSolution sol = build_adjoint_cgo(r);
  CHECK(sol.diag.eq_residual < 1e-6);
  CHECK(sol.diag.amp_lead_err < 3.0 / r.tau);

  // leading term equals |g|^{-1/4}(s0, -i s0 dx1^dr, t0 *1, i t0 *dx1^dr)
  const CylinderGrid& G = L.G;
  const int nt = G.tg.size();
  Field phase_p(G.size());
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q)
      phase_p[i1 * nt + q] = std::exp(I * r.tau * L.chart.r[q]);
  GradedForm Yun = GradedForm::zero(G);
  for (int s = 0; s < 8; ++s) Yun.slot(s) = sol.Y.slot(s).cwiseProduct(phase_p);

  GradedForm disp = GradedForm::zero(G);
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q) {
      int p = i1 * nt + q;
      double m14 = std::pow(L.chart.m[q], -0.25);
      disp.s0[p] = m14 * r.s0;
      // -i s0 dx1 ^ dr: F12 coeff = dr_xi, F31 coeff = -dr_eta
      disp.F2.f12[p] = -I * r.s0 * m14 * L.chart.dr_xi[q];
      disp.F2.f31[p] = I * r.s0 * m14 * L.chart.dr_eta[q];
      disp.s3[p] = m14 * r.t0 * G.w[p];  // t0 * 1
    }
  // i t0 * (dx1 ^ dr) via the metric star
  OneForm drf = OneForm::zero(G);
  TwoForm dx1dr = TwoForm::zero(G);
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q) {
      int p = i1 * nt + q;
      dx1dr.f12[p] = L.chart.dr_xi[q];
      dx1dr.f31[p] = -L.chart.dr_eta[q];
    }
  OneForm stardx1dr = star2(G, dx1dr);
  for (int i1 = 0; i1 < G.gx.n; ++i1)
    for (int q = 0; q < nt; ++q) {
      int p = i1 * nt + q;
      double m14 = std::pow(L.chart.m[q], -0.25);
      disp.A1.a1[p] = I * r.t0 * m14 * stardx1dr.a1[p];
      disp.A1.a2[p] = I * r.t0 * m14 * stardx1dr.a2[p];
      disp.A1.a3[p] = I * r.t0 * m14 * stardx1dr.a3[p];
    }
  Eigen::VectorXd mask = mask_region(G, r.mask_x1);
  double dd = norm_l2(G, GradedForm(Yun - disp), &mask) / norm_l2(G, disp, &mask);
  CHECK(dd < 3.0 / r.tau);

  // tau-sweep of the amplitude defect: slope -1 +- 0.2
  std::vector<double> lx, ly;
  for (double t : {8.0, 16.0, 32.0}) {
    CgoRecipe rr = L.recipe(t, 2.0, 1.0, 0.7);
    CgoSolution s2 = build_adjoint_cgo(rr);
    lx.push_back(std::log(rr.tau));
    ly.push_back(std::log(s2.diag.amp_lead_err));
  }
  CHECK(fit_slope(lx, ly) == doctest::Approx(-1.0).epsilon(0.25));
}
