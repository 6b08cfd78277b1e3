// SPDX-License-Identifier: Apache-2.0
#include "cgomax/conjugated.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cgomax {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double freq(int k, int n, double L) {
  int kk = (k <= n / 2) ? k : k - n;
  return kTwoPi * kk / L;
}

// factorization shifts: mu_{1,2} = tau -+ s with s = sqrt(lam - k^2)
// (imaginary for lam < k^2)
inline void shifts(double tau, double k, double lam, cplx& mu1, cplx& mu2) {
  cplx s = std::sqrt(cplx(lam - k * k, 0.0));
  mu1 = tau - s;
  mu2 = tau + s;
}

// composed cutoff multiplier applied to the analytically tapered tone
Eigen::VectorXcd solve_tone_composite(const LineGrid& g, cplx mu1, cplx mu2, double tone,
                                      cplx amp, double lambda_c) {
  const int N = g.npad();
  TonePad tp = build_tapered_tone(g, N, tone, amp);
  Eigen::VectorXcd& buf = tp.buf;
  fft_pow2(buf, -1);
  const double L = N * g.h;
  for (int k = 0; k < N; ++k) {
    double xi = freq(k, N, L);
    cplx den = (cplx(0.0, xi) - mu1) * (cplx(0.0, xi) - mu2);
    buf[k] *= -cutoff_profile(xi / lambda_c) / den;
  }
  fft_pow2(buf, +1);
  return buf.segment(tp.offset, g.n);
}

}  // namespace

Eigen::VectorXcd solve_channel(const LineGrid& line, double tau, double k, double lam,
                               const ChannelRhs& rhs, double lambda_c) {
  cplx mu1, mu2;
  shifts(tau, k, lam, mu1, mu2);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(line.n);
  if (rhs.decay.size()) {
    double amin = std::min(std::abs(mu1.real()), std::abs(mu2.real()));
    int npad = adaptive_npad(line, amin);
    if (amin * double(npad - line.n) * line.h >= 23.0) {
      // composite multiplier on a padding wide enough for the slowest kernel
      Eigen::VectorXcd buf = Eigen::VectorXcd::Zero(npad);
      buf.head(line.n) = rhs.decay;
      fft_pow2(buf, -1);
      const double L = npad * line.h;
      for (int j = 0; j < npad; ++j) {
        double xi = freq(j, npad, L);
        buf[j] *= -1.0 / ((cplx(0.0, xi) - mu1) * (cplx(0.0, xi) - mu2));
      }
      fft_pow2(buf, +1);
      u += buf.head(line.n);
    } else {
      // extreme near-resonance: sequential route, quadrature on the slow factor
      cplx first = mu1, second = mu2;
      if (std::abs(second.real()) < std::abs(first.real())) std::swap(first, second);
      Eigen::VectorXcd v = apply_smu(line, {first, std::nullopt}, rhs.decay);
      v = apply_smu(line, {second, std::nullopt}, v);
      u -= v;
    }
  }
  if (rhs.amp != cplx(0.0)) {
    u += solve_tone_composite(line, mu1, mu2, rhs.tone, rhs.amp, lambda_c);
  }
  return u;
}

double channel_residual(const LineGrid& line, double tau, double k, double lam,
                        const Eigen::VectorXcd& u, const ChannelRhs& rhs, int margin) {
  const int n = line.n;
  auto d6 = [&](const Eigen::VectorXcd& f) {
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(n);
    for (int j = 3; j + 3 < n; ++j)
      d[j] = (-f[j - 3] + 9.0 * f[j - 2] - 45.0 * f[j - 1] + 45.0 * f[j + 1] - 9.0 * f[j + 2] +
              f[j + 3]) /
             (60.0 * line.h);
    return d;
  };
  Eigen::VectorXcd du = d6(u), ddu = d6(du);
  double num = 0, den = 0;
  for (int j = std::max(margin, 7); j < n - std::max(margin, 7); ++j) {
    cplx f = rhs.decay.size() ? rhs.decay[j] : cplx(0.0);
    f += rhs.amp * std::exp(I * rhs.tone * line.x(j));
    cplx r = -ddu[j] + 2.0 * tau * du[j] - (tau * tau + k * k - lam) * u[j] - f;
    num += std::norm(r);
    den += std::norm(f);
  }
  if (den == 0) return std::sqrt(num);
  return std::sqrt(num / den);
}

double channel_symbol_min(const LineGrid& line, double tau, double k, double lam) {
  const int N = line.npad();
  const double L = N * line.h;
  double best = 1e300;
  for (int j = 0; j < N; ++j) {
    double xi = freq(j, N, L);
    cplx sym(xi * xi - tau * tau - k * k + lam, 2.0 * tau * xi);
    best = std::min(best, std::abs(sym));
  }
  return best;
}

void ConjugatedProblem::require_admissible(double tau, bool graded) const {
  if (!G || !sp) throw std::invalid_argument("ConjugatedProblem: missing grid or spectrum");
  if (!G->unit_conformal)
    throw std::invalid_argument(
        "conjugated solver requires c == 1; apply the conformal pre-reduction first");
  double gap = spectral_gap(tau, k, sp->dirichlet.evals_all);
  if (graded) gap = std::min(gap, spectral_gap(tau, k, sp->oneform.evals_all));
  if (gap < gmin)
    throw std::runtime_error("tau inadmissible: spectral gap " + std::to_string(gap) +
                             " below " + std::to_string(gmin));
}

namespace {

// shared scalar-channel machinery over a given scalar eigensystem
void solve_scalar_channels(const ConjugatedProblem& P, const ScalarEigensystem& sys,
                           double tau, const ScalarRhs& rhs, Eigen::MatrixXcd& channels,
                           SolveDiag* diag) {
  const CylinderGrid& G = *P.G;
  const LineGrid line = P.line();
  const int nev = sys.nev;
  const int n1 = G.gx.n;

  Eigen::MatrixXcd fch;
  if (rhs.f1.size()) {
    fch = expand_scalar(sys, G, rhs.f1);
    if (diag) {
      Field back = synth_scalar(sys, G, fch);
      double n0 = norm_l2(G, rhs.f1);
      if (n0 > 0)
        diag->rhs_tail = std::max(diag->rhs_tail, norm_l2(G, Field(rhs.f1 - back)) / n0);
    }
  }
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(nev);
  if (rhs.tone_profile.size()) {
    for (int l = 0; l < nev; ++l) {
      cplx a = 0;
      for (int q = 0; q < G.tg.size(); ++q)
        a += sys.vecs(q, l) * sys.mass[q] * rhs.tone_profile[q];
      amps[l] = a;
    }
  }
  // the taper spreads the tone spectrum; the cutoff sits at half the tone so
  // the spread stays well inside psi == 1
  const double lambda_c = std::abs(rhs.tone) > 0 ? 0.5 * std::abs(rhs.tone) : 1.0;
  channels.resize(nev, n1);
  double content_max = 0;
  for (int l = 0; l < nev; ++l) {
    double c = (fch.size() ? fch.row(l).norm() : 0.0) +
               std::abs(amps[l]) * std::sqrt(double(line.n));
    content_max = std::max(content_max, c);
  }
  double worst = 0;
  for (int l = 0; l < nev; ++l) {
    double lam = sys.evals[l];
    ChannelRhs cr;
    if (fch.size()) cr.decay = fch.row(l).transpose();
    cr.tone = rhs.tone;
    cr.amp = amps[l];
    Eigen::VectorXcd u = solve_channel(line, tau, P.k, lam, cr, lambda_c);
    channels.row(l) = u.transpose();
    if (diag) {
      double scale = (cr.decay.size() ? cr.decay.norm() : 0.0) +
                     std::abs(cr.amp) * std::sqrt(double(line.n));
      // channels with negligible content would only measure roundoff noise
      if (scale > 1e-8 * content_max && content_max > 0)
        worst = std::max(worst, channel_residual(line, tau, P.k, lam, u, cr));
    }
  }
  if (diag) diag->channel_residual = std::max(diag->channel_residual, worst);
}

}  // namespace

Field solve_scalar_free(const ConjugatedProblem& P, double tau, const ScalarRhs& rhs,
                        SolveDiag* diag, Eigen::MatrixXcd* channels_out) {
  P.require_admissible(tau, false);
  Eigen::MatrixXcd ch;
  solve_scalar_channels(P, P.sp->dirichlet, tau, rhs, ch, diag);
  if (channels_out) *channels_out = ch;
  return synth_scalar(P.sp->dirichlet, *P.G, ch);
}

Field solve_scalar_potential(const ConjugatedProblem& P, double tau, const Field& q,
                             const ScalarRhs& rhs, double tol, SolveDiag* diag) {
  P.require_admissible(tau, false);
  const CylinderGrid& G = *P.G;
  Eigen::VectorXd wplus = agmon_weight(G, 2.0 * P.delta);

  // split handling: u = G f2 + G v with (I + q G) v = f1 - q G f2
  Field rhs_decay = Eigen::VectorXcd::Zero(G.size());
  if (rhs.f1.size()) rhs_decay += rhs.f1;
  if (rhs.tone_profile.size()) {
    ScalarRhs tone_only{Field(), rhs.tone, rhs.tone_profile};
    Field gf2 = solve_scalar_free(P, tau, tone_only, diag);
    rhs_decay -= q.cwiseProduct(gf2);
  }

  Field v = rhs_decay;
  double prev_dn = -1;
  int it = 0;
  for (; it < 60; ++it) {
    ScalarRhs r1{v, 0.0, TField()};
    Field gu = solve_scalar_free(P, tau, r1, nullptr);
    Field v_new = rhs_decay - q.cwiseProduct(gu);
    double dn = norm_l2(G, Field(v_new - v), &wplus);
    double vn = norm_l2(G, v_new, &wplus);
    if (prev_dn > 0) {
      double contraction = dn / prev_dn;
      if (diag) diag->contraction = contraction;
      if (contraction >= 1.0)
        throw std::runtime_error(
            "solve_scalar_potential: Neumann iteration diverges, contraction " +
            std::to_string(contraction) + " (tau too small)");
    }
    v = v_new;
    prev_dn = dn;
    if (dn <= tol * std::max(1.0, vn)) break;
  }
  if (diag) diag->iterations = it + 1;
  ScalarRhs rv{v, 0.0, TField()};
  Field u = solve_scalar_free(P, tau, rv, diag);
  if (rhs.tone_profile.size()) {
    ScalarRhs tone_only{Field(), rhs.tone, rhs.tone_profile};
    u += solve_scalar_free(P, tau, tone_only, nullptr);
  }
  return u;
}

namespace {

// Extract the scalar-type and transversal variables of a graded form:
// U = (R0, *S1, *S0, R1) with S1 = *(2-form slot), S0 = *(3-form slot).
struct GradedVars {
  Field R0, S0, R11, S11;
  Field R1t2, R1t3, S1t2, S1t3;
};

GradedVars split_vars(const CylinderGrid& G, const GradedForm& X) {
  GradedVars v;
  v.R0 = X.s0;
  v.S0 = star3(G, X.s3);
  OneForm S1 = star2(G, X.F2);
  v.S11 = S1.a1;
  v.S1t2 = S1.a2;
  v.S1t3 = S1.a3;
  v.R11 = X.A1.a1;
  v.R1t2 = X.A1.a2;
  v.R1t3 = X.A1.a3;
  return v;
}

GradedForm join_vars(const CylinderGrid& G, const GradedVars& v) {
  GradedForm X = GradedForm::zero(G);
  X.s0 = v.R0;
  X.s3 = star0(G, v.S0);
  OneForm S1{v.S11, v.S1t2, v.S1t3};
  X.F2 = star1(G, S1);
  X.A1 = OneForm{v.R11, v.R1t2, v.R1t3};
  return X;
}

// transversal-star arithmetic on tone profiles, in the variable order
// (R0, S0, R11, S11, R1t2, R1t3, S1t2, S1t3); c == 1 so the slab-0 metric
// describes every slab.
std::array<TField, 8> split_tone_profiles(const CylinderGrid& G,
                                          const std::array<TField, 8>& slot_prof) {
  const int nt = G.tg.size();
  std::array<TField, 8> out;
  for (auto& f : out) f = TField();
  if (slot_prof[0].size()) out[0] = slot_prof[0];
  if (slot_prof[4].size()) {
    TField s(nt);
    for (int q = 0; q < nt; ++q) s[q] = slot_prof[4][q] / G.w[q];
    out[1] = s;
  }
  if (slot_prof[1].size() || slot_prof[2].size() || slot_prof[3].size()) {
    TField f23 = slot_prof[1].size() ? slot_prof[1] : TField(TField::Zero(nt));
    TField f31 = slot_prof[2].size() ? slot_prof[2] : TField(TField::Zero(nt));
    TField f12 = slot_prof[3].size() ? slot_prof[3] : TField(TField::Zero(nt));
    TField s11(nt), st2(nt), st3(nt);
    for (int q = 0; q < nt; ++q) {
      double iw = 1.0 / G.w[q];
      s11[q] = G.cfac[q] * f23[q] * iw;
      st2[q] = (G.l22[q] * f31[q] + G.l23[q] * f12[q]) * iw;
      st3[q] = (G.l23[q] * f31[q] + G.l33[q] * f12[q]) * iw;
    }
    out[3] = s11;
    out[6] = st2;
    out[7] = st3;
  }
  if (slot_prof[5].size()) out[2] = slot_prof[5];
  if (slot_prof[6].size()) out[4] = slot_prof[6];
  if (slot_prof[7].size()) out[5] = slot_prof[7];
  return out;
}

void solve_oneform_channels(const ConjugatedProblem& P, double tau, const Field& f2,
                            const Field& f3, double tone, const TField& prof2,
                            const TField& prof3, Eigen::MatrixXcd& channels, SolveDiag* diag) {
  const CylinderGrid& G = *P.G;
  const OneFormEigensystem& sys = P.sp->oneform;
  const LineGrid line = P.line();
  const int nev = sys.nev, n1 = G.gx.n;
  Eigen::MatrixXcd fch;
  bool has_decay = f2.size() > 0;
  if (has_decay) {
    fch = expand_oneform(sys, G, f2, f3);
    if (diag) {
      Field b2, b3;
      synth_oneform(sys, G, fch, b2, b3);
      OneForm orig{zero_field(G), f2, f3};
      OneForm dd{zero_field(G), Field(f2 - b2), Field(f3 - b3)};
      double n0 = std::sqrt(std::abs(integrate(G, pair1(G, orig, orig, true))));
      if (n0 > 0)
        diag->rhs_tail = std::max(
            diag->rhs_tail, std::sqrt(std::abs(integrate(G, pair1(G, dd, dd, true)))) / n0);
    }
  }
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(nev);
  bool has_tone = prof2.size() > 0 || prof3.size() > 0;
  if (has_tone) {
    const TransversalGrid& tg = G.tg;
    const int nt = tg.size();
    TField p2 = prof2.size() ? prof2 : TField(TField::Zero(nt));
    TField p3 = prof3.size() ? prof3 : TField(TField::Zero(nt));
    for (int l = 0; l < nev; ++l) {
      cplx a = 0;
      for (int q = 0; q < nt; ++q) {
        a += tg.dV[q] *
             (tg.gi11[q] * p2[q] * sys.comp_xi(q, l) +
              tg.gi12[q] * (p2[q] * sys.comp_eta(q, l) + p3[q] * sys.comp_xi(q, l)) +
              tg.gi22[q] * p3[q] * sys.comp_eta(q, l));
      }
      amps[l] = a;
    }
  }
  const double lambda_c = std::abs(tone) > 0 ? 0.5 * std::abs(tone) : 1.0;
  channels.resize(nev, n1);
  double content_max = 0;
  for (int m = 0; m < nev; ++m) {
    double c = (has_decay ? fch.row(m).norm() : 0.0) +
               std::abs(amps[m]) * std::sqrt(double(line.n));
    content_max = std::max(content_max, c);
  }
  double worst = 0;
  for (int m = 0; m < nev; ++m) {
    double lam = sys.evals[m];
    ChannelRhs cr;
    if (has_decay) cr.decay = fch.row(m).transpose();
    cr.tone = tone;
    cr.amp = amps[m];
    Eigen::VectorXcd u = solve_channel(line, tau, P.k, lam, cr, lambda_c);
    channels.row(m) = u.transpose();
    if (diag) {
      double scale = (cr.decay.size() ? cr.decay.norm() : 0.0) +
                     std::abs(cr.amp) * std::sqrt(double(line.n));
      if (scale > 1e-8 * content_max && content_max > 0)
        worst = std::max(worst, channel_residual(line, tau, P.k, lam, u, cr));
    }
  }
  if (diag) diag->channel_residual = std::max(diag->channel_residual, worst);
}

}  // namespace

GradedForm solve_graded(const ConjugatedProblem& P, double tau, const GradedRhs& rhs,
                        SolveDiag* diag, GradedChannels* chan) {
  P.require_admissible(tau, true);
  const CylinderGrid& G = *P.G;

  GradedVars fv;
  bool has_f1 = rhs.has_f1;
  if (has_f1) fv = split_vars(G, rhs.F1);

  std::array<TField, 8> tp;
  for (auto& t : tp) t = TField();
  if (rhs.has_tone) tp = split_tone_profiles(G, rhs.tone_prof);

  auto scalar_rhs = [&](const Field& f, const TField& prof) {
    ScalarRhs r;
    if (has_f1) r.f1 = f;
    r.tone = rhs.tone;
    r.tone_profile = prof;
    return r;
  };

  GradedChannels local;
  GradedChannels& C = chan ? *chan : local;
  solve_scalar_channels(P, P.sp->dirichlet, tau, scalar_rhs(fv.R0, tp[0]), C.R0, diag);
  solve_scalar_channels(P, P.sp->dirichlet, tau, scalar_rhs(fv.S0, tp[1]), C.S0, diag);
  solve_scalar_channels(P, P.sp->dirichlet, tau, scalar_rhs(fv.R11, tp[2]), C.R11, diag);
  solve_scalar_channels(P, P.sp->dirichlet, tau, scalar_rhs(fv.S11, tp[3]), C.S11, diag);
  solve_oneform_channels(P, tau, has_f1 ? fv.R1t2 : Field(), has_f1 ? fv.R1t3 : Field(),
                         rhs.tone, tp[4], tp[5], C.R1t, diag);
  solve_oneform_channels(P, tau, has_f1 ? fv.S1t2 : Field(), has_f1 ? fv.S1t3 : Field(),
                         rhs.tone, tp[6], tp[7], C.S1t, diag);

  GradedVars uv;
  uv.R0 = synth_scalar(P.sp->dirichlet, G, C.R0);
  uv.S0 = synth_scalar(P.sp->dirichlet, G, C.S0);
  uv.R11 = synth_scalar(P.sp->dirichlet, G, C.R11);
  uv.S11 = synth_scalar(P.sp->dirichlet, G, C.S11);
  synth_oneform(P.sp->oneform, G, C.R1t, uv.R1t2, uv.R1t3);
  synth_oneform(P.sp->oneform, G, C.S1t, uv.S1t2, uv.S1t3);
  return join_vars(G, uv);
}

GradedForm solve_graded_potential(const ConjugatedProblem& P, double tau,
                                  const GradedPotential& Q, const GradedRhs& rhs,
                                  double tol, SolveDiag* diag, GradedChannels* chan) {
  P.require_admissible(tau, true);
  const CylinderGrid& G = *P.G;
  Eigen::VectorXd wplus = agmon_weight(G, 2.0 * P.delta);

  GradedForm rhs_decay = GradedForm::zero(G);
  if (rhs.has_f1) rhs_decay += rhs.F1;
  GradedForm u_tone = GradedForm::zero(G);
  if (rhs.has_tone) {
    GradedRhs tone_only;
    tone_only.has_tone = true;
    tone_only.tone = rhs.tone;
    tone_only.tone_prof = rhs.tone_prof;
    u_tone = solve_graded(P, tau, tone_only, diag);
    rhs_decay -= Q(u_tone);
  }

  GradedForm v = rhs_decay;
  double prev_dn = -1;
  int it = 0;
  for (; it < 60; ++it) {
    GradedRhs rv;
    rv.has_f1 = true;
    rv.F1 = v;
    GradedForm gu = solve_graded(P, tau, rv, nullptr);
    GradedForm v_new = rhs_decay - Q(gu);
    double dn = norm_l2(G, GradedForm(v_new - v), &wplus);
    double vn = norm_l2(G, v_new, &wplus);
    if (prev_dn > 0) {
      double contraction = dn / prev_dn;
      if (diag) diag->contraction = contraction;
      if (contraction >= 1.0)
        throw std::runtime_error(
            "solve_graded_potential: Neumann iteration diverges (tau too small)");
    }
    v = v_new;
    prev_dn = dn;
    if (dn <= tol * std::max(1.0, vn)) break;
  }
  if (diag) diag->iterations = it + 1;
  GradedRhs rv;
  rv.has_f1 = true;
  rv.F1 = v;
  GradedForm u = solve_graded(P, tau, rv, diag, chan);
  u += u_tone;
  return u;
}

std::vector<ScalingRow> norm_scaling_probe(const ConjugatedProblem& P, const ScalarRhs& rhs,
                                           const std::vector<double>& taus) {
  const CylinderGrid& G = *P.G;
  ChristoffelField C = christoffels(G);
  std::vector<ScalingRow> rows;
  for (double tau : taus) {
    Field u = solve_scalar_free(P, tau, rhs);
    ScalingRow row;
    row.tau = tau;
    for (int s = 0; s <= 2; ++s) row.hs[size_t(s)] = sobolev_norm(G, C, u, -P.delta, s);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cgomax
