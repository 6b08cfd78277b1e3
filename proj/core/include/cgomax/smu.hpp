// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <optional>

#include "cgomax/grid.hpp"
#include "cgomax/util.hpp"

namespace cgomax {

// Line grid with FFT padding metadata for the solution operators S_mu of
// u' - mu u = f. Signals live on the window [x0, x0+(n-1)h]; the padded
// length is the next power of two >= pad_factor*n.
struct LineGrid {
  int n = 0;
  double x0 = 0, h = 0;
  int pad_factor = 4;

  LineGrid() = default;
  explicit LineGrid(const Grid1D& g, int pad = 4) : n(g.n), x0(g.x0), h(g.h), pad_factor(pad) {}
  double x(int i) const { return x0 + h * i; }
  int npad() const {
    int want = pad_factor * n, p = 1;
    while (p < want) p <<= 1;
    return p;
  }
};

struct MultiplierSpec {
  cplx mu;                          // a + ib, a = Re mu
  std::optional<double> cutoff;     // low-frequency cutoff lambda_c
};

enum class SmuRoute { Auto, Fft, Quadrature };

// Solution operator of u' - mu u = f for decaying data. Auto dispatches to
// the Fourier multiplier when the padded window suppresses wrap-around below
// 1e-10 and to the exponential-kernel quadrature otherwise. Re(mu) == 0
// without a cutoff is rejected.
Eigen::VectorXcd apply_smu(const LineGrid& g, const MultiplierSpec& spec,
                           const Eigen::VectorXcd& f, SmuRoute route = SmuRoute::Auto);

// Cutoff variant m(xi) = psi(xi/lambda_c)/(i xi - mu) for signals whose
// spectrum stays above the cutoff. Throws (reporting the leaked energy
// fraction) if more than `leak_tol` of the energy sits below lambda_c.
Eigen::VectorXcd apply_smu_cutoff(const LineGrid& g, const MultiplierSpec& spec,
                                  const Eigen::VectorXcd& f, double leak_tol = 1e-4);

// Pure-tone fast path: f(x) = amp * e^{i tone x} continued analytically into
// the padding with a smooth taper, then the cutoff multiplier is applied.
// Returns the response sampled on the window.
Eigen::VectorXcd apply_smu_cutoff_tone(const LineGrid& g, const MultiplierSpec& spec,
                                       double tone, cplx amp);

// Smooth cutoff profile: 0 for |s| <= 1/2, 1 for |s| >= 1.
double cutoff_profile(double s);

// C-infinity monotone step: 0 for s <= 0, 1 for s >= 1.
double cinf_step(double s);

// Padded length large enough that an exponential kernel of rate `amin`
// decays below 1e-10 across the extension (capped; callers fall back to the
// quadrature route when the cap is hit).
int adaptive_npad(const LineGrid& g, double amin);

// Analytically continued tone on a padded buffer, tapered to zero at both
// circular ends with a C-infinity profile; the window occupies
// [offset, offset + n).
struct TonePad {
  Eigen::VectorXcd buf;
  int offset = 0;
};
TonePad build_tapered_tone(const LineGrid& g, int npad, double tone, cplx amp);

// || <x>^delta f ||_{H^s}, s in {0,1,2}, on the window (trapezoid).
double weighted_norm(const LineGrid& g, const Eigen::VectorXcd& f, double delta, int s);

// Spectral derivative on the padded grid (zero extension).
Eigen::VectorXcd fft_derivative(const LineGrid& g, const Eigen::VectorXcd& f, int order);

// In-place FFT utility used by the solver layer (length must be a power of
// two); sign = -1 forward, +1 inverse (inverse is normalized).
void fft_pow2(Eigen::VectorXcd& buf, int sign);

}  // namespace cgomax
