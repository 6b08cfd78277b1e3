// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cgomax/exterior.hpp"
#include "cgomax/smu.hpp"
#include "cgomax/spectrum.hpp"

namespace cgomax {

// Solver for e^{tau x1} (-Delta - k^2 + q) e^{-tau x1} u = f on the product
// cylinder with c == 1, by partial eigenfunction expansion over M0 and the
// factored 1D solution operators per channel.
struct ConjugatedProblem {
  const CylinderGrid* G = nullptr;
  const TransversalSpectrum* sp = nullptr;
  double k = 0;
  double delta = 0.55;
  double gmin = 0.5;
  int pad_factor = 4;

  LineGrid line() const { return LineGrid(G->gx, pad_factor); }
  // Throws when c != 1 or the spectral gap of tau^2+k^2 is below gmin.
  void require_admissible(double tau, bool graded) const;
};

// Channel right-hand side: decaying window samples plus an optional pure
// tone amp * e^{i tone x1}.
struct ChannelRhs {
  Eigen::VectorXcd decay;  // size 0 if absent
  double tone = 0;
  cplx amp = 0;
};

Eigen::VectorXcd solve_channel(const LineGrid& line, double tau, double k, double lam,
                               const ChannelRhs& rhs, double lambda_c);
// Relative residual of -u'' + 2 tau u' - (tau^2+k^2-lam) u = f over the
// interior of the window (independent 4th-order stencils).
double channel_residual(const LineGrid& line, double tau, double k, double lam,
                        const Eigen::VectorXcd& u, const ChannelRhs& rhs, int margin = 8);

struct ScalarRhs {
  Field f1;             // size 0 => absent
  double tone = 0;
  TField tone_profile;  // size 0 => absent
};

struct SolveDiag {
  double channel_residual = 0;  // max relative channel residual
  double rhs_tail = 0;          // out-of-basis fraction of the decaying rhs
  int iterations = 0;
  double contraction = 0;       // measured Neumann contraction factor
};

Field solve_scalar_free(const ConjugatedProblem& P, double tau, const ScalarRhs& rhs,
                        SolveDiag* diag = nullptr, Eigen::MatrixXcd* channels_out = nullptr);

Field solve_scalar_potential(const ConjugatedProblem& P, double tau, const Field& q,
                             const ScalarRhs& rhs, double tol = 1e-10,
                             SolveDiag* diag = nullptr);

struct GradedRhs {
  bool has_f1 = false;
  GradedForm F1;
  bool has_tone = false;
  double tone = 0;
  std::array<TField, 8> tone_prof;  // per graded slot, size 0 = absent
};

// Channel data of the solved unknowns, for consistency diagnostics.
struct GradedChannels {
  Eigen::MatrixXcd R0, S0, R11, S11;  // scalar-type, nev x n1
  Eigen::MatrixXcd R1t, S1t;          // transversal 1-form, nev x n1
};

GradedForm solve_graded(const ConjugatedProblem& P, double tau, const GradedRhs& rhs,
                        SolveDiag* diag = nullptr, GradedChannels* chan = nullptr);

using GradedPotential = std::function<GradedForm(const GradedForm&)>;

GradedForm solve_graded_potential(const ConjugatedProblem& P, double tau,
                                  const GradedPotential& Q, const GradedRhs& rhs,
                                  double tol = 1e-9, SolveDiag* diag = nullptr,
                                  GradedChannels* chan = nullptr);

struct ScalingRow {
  double tau;
  std::array<double, 3> hs;  // H^s_{-delta} norms, s = 0,1,2
};
std::vector<ScalingRow> norm_scaling_probe(const ConjugatedProblem& P, const ScalarRhs& rhs,
                                           const std::vector<double>& taus);

// min over the frequency grid of |xi^2 + 2 i tau xi - tau^2 - k^2 + lam|
// (the channel symbol; positive iff the channel is invertible).
double channel_symbol_min(const LineGrid& line, double tau, double k, double lam);

}  // namespace cgomax
