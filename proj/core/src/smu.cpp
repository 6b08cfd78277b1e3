// SPDX-License-Identifier: Apache-2.0
#include "cgomax/smu.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace cgomax {

namespace {

std::mutex g_fftw_mutex;
std::map<std::pair<int, int>, fftw_plan> g_plans;

fftw_plan plan_for(int n, int sign) {
  std::lock_guard<std::mutex> lk(g_fftw_mutex);
  auto key = std::make_pair(n, sign);
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;
  fftw_complex* buf = fftw_alloc_complex(size_t(n));
  fftw_plan p = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  g_plans.emplace(key, p);
  return p;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxPad = 1 << 22;

inline double freq(int k, int n, double L) {
  int kk = (k <= n / 2) ? k : k - n;
  return kTwoPi * kk / L;
}

// E_k(z) = int_0^1 s^k e^{-z s} ds, stable for small |z| via series.
void exp_moments(cplx z, cplx E[4]) {
  if (std::abs(z) < 1e-3) {
    for (int k = 0; k < 4; ++k) {
      cplx acc = 1.0 / double(k + 1);
      cplx zp = 1.0;
      double fact = 1.0;
      for (int m = 1; m <= 10; ++m) {
        zp *= -z;
        fact *= m;
        acc += zp / (fact * double(k + m + 1));
      }
      E[k] = acc;
    }
    return;
  }
  cplx ez = std::exp(-z);
  E[0] = (1.0 - ez) / z;
  for (int k = 1; k < 4; ++k) E[k] = (double(k) * E[k - 1] - ez) / z;
}

// int_0^h f(t) e^{-mu t} dt with a cubic Hermite model of f on [0,h].
cplx hermite_exp_integral(cplx f0, cplx d0, cplx f1, cplx d1, cplx mu, double h) {
  cplx E[4];
  exp_moments(mu * h, E);
  cplx c0 = 2.0 * E[3] - 3.0 * E[2] + E[0];
  cplx c1 = E[3] - 2.0 * E[2] + E[1];
  cplx c2 = -2.0 * E[3] + 3.0 * E[2];
  cplx c3 = E[3] - E[2];
  return h * (f0 * c0 + h * d0 * c1 + f1 * c2 + h * d1 * c3);
}

Eigen::VectorXcd derivative4(const Eigen::VectorXcd& f, double h) {
  const int n = int(f.size());
  Eigen::VectorXcd d(n);
  for (int j = 0; j < n; ++j) {
    if (j >= 2 && j + 2 < n)
      d[j] = (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * h);
    else if (j == 0)
      d[j] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    else if (j == n - 1)
      d[j] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    else
      d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
  }
  return d;
}

Eigen::VectorXcd smu_quadrature(const LineGrid& g, cplx mu, const Eigen::VectorXcd& f) {
  const int n = g.n;
  const double a = mu.real();
  Eigen::VectorXcd d = derivative4(f, g.h);
  Eigen::VectorXcd u(n);
  if (a > 0) {
    u[n - 1] = 0.0;
    cplx decay = std::exp(-mu * g.h);
    for (int j = n - 2; j >= 0; --j) {
      cplx Ij = hermite_exp_integral(f[j], d[j], f[j + 1], d[j + 1], mu, g.h);
      u[j] = decay * u[j + 1] - Ij;
    }
  } else {
    u[0] = 0.0;
    cplx grow = std::exp(mu * g.h);  // |grow| < 1 for a < 0
    for (int j = 1; j < n; ++j) {
      cplx Ij = hermite_exp_integral(f[j - 1], d[j - 1], f[j], d[j], mu, g.h);
      u[j] = grow * (u[j - 1] + Ij);
    }
  }
  return u;
}

Eigen::VectorXcd smu_fft(const LineGrid& g, cplx mu, const Eigen::VectorXcd& f, int npad,
                         const std::optional<double>& cutoff) {
  Eigen::VectorXcd buf = Eigen::VectorXcd::Zero(npad);
  buf.head(g.n) = f;
  fft_pow2(buf, -1);
  const double L = npad * g.h;
  for (int k = 0; k < npad; ++k) {
    double xi = freq(k, npad, L);
    cplx m = 1.0 / (cplx(0.0, xi) - mu);
    if (cutoff) m *= cutoff_profile(xi / *cutoff);
    buf[k] *= m;
  }
  fft_pow2(buf, +1);
  return buf.head(g.n);
}

}  // namespace

void fft_pow2(Eigen::VectorXcd& buf, int sign) {
  const int n = int(buf.size());
  if (n & (n - 1)) throw std::invalid_argument("fft_pow2: length must be a power of two");
  fftw_plan p = plan_for(n, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(buf.data()));
  if (sign > 0) buf /= double(n);
}

double cutoff_profile(double s) {
  // C-infinity transition on [1/2, 1]: the multiplier kernel then decays
  // faster than any power, which the stationary-tone checks rely on
  double a = std::abs(s);
  return cinf_step(2.0 * (a - 0.5));
}

double cinf_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double fa = std::exp(-1.0 / s), fb = std::exp(-1.0 / (1.0 - s));
  return fa / (fa + fb);
}

int adaptive_npad(const LineGrid& g, double amin) {
  int p = g.npad();
  if (amin <= 0) return p;
  double need_len = 46.0 / amin;
  while (p < kMaxPad && double(p - g.n) * g.h < need_len) p <<= 1;
  return p;
}

TonePad build_tapered_tone(const LineGrid& g, int npad, double tone, cplx amp) {
  const int ext = npad - g.n;
  const int T0 = ext / 2;
  const int Tr = npad - T0 - g.n;
  TonePad tp;
  tp.offset = T0;
  tp.buf.resize(npad);
  for (int j = 0; j < npad; ++j) {
    double theta;
    if (j < T0)
      theta = cinf_step(double(j) / T0);
    else if (j < T0 + g.n)
      theta = 1.0;
    else
      theta = 1.0 - cinf_step(double(j - T0 - g.n + 1) / Tr);
    double x = g.x0 + (j - T0) * g.h;
    tp.buf[j] = amp * std::exp(I * tone * x) * theta;
  }
  return tp;
}

Eigen::VectorXcd apply_smu(const LineGrid& g, const MultiplierSpec& spec,
                           const Eigen::VectorXcd& f, SmuRoute route) {
  if (f.size() != g.n) throw std::invalid_argument("apply_smu: size mismatch");
  const double a = spec.mu.real();
  if (spec.cutoff) return apply_smu_cutoff(g, spec, f);
  if (a == 0.0) throw std::invalid_argument("apply_smu: Re(mu) = 0 requires a cutoff");
  int npad = adaptive_npad(g, std::abs(a));
  if (route == SmuRoute::Auto) {
    // wrap-around of the exponential kernel across the padding
    double margin = double(npad - g.n) * g.h;
    route = (std::abs(a) * margin >= 23.0) ? SmuRoute::Fft : SmuRoute::Quadrature;
  }
  return route == SmuRoute::Fft ? smu_fft(g, spec.mu, f, npad, std::nullopt)
                                : smu_quadrature(g, spec.mu, f);
}

Eigen::VectorXcd apply_smu_cutoff(const LineGrid& g, const MultiplierSpec& spec,
                                  const Eigen::VectorXcd& f, double leak_tol) {
  if (!spec.cutoff || *spec.cutoff <= 0)
    throw std::invalid_argument("apply_smu_cutoff: positive cutoff required");
  const int N = g.npad();
  Eigen::VectorXcd buf = Eigen::VectorXcd::Zero(N);
  buf.head(g.n) = f;
  fft_pow2(buf, -1);
  const double L = N * g.h;
  double low = 0, tot = 0;
  for (int k = 0; k < N; ++k) {
    double e = std::norm(buf[k]);
    tot += e;
    if (std::abs(freq(k, N, L)) < *spec.cutoff) low += e;
  }
  if (tot > 0 && low / tot > leak_tol)
    throw std::runtime_error("apply_smu_cutoff: spectral support violated, leaked fraction " +
                             std::to_string(low / tot));
  for (int k = 0; k < N; ++k) {
    double xi = freq(k, N, L);
    buf[k] *= cutoff_profile(xi / *spec.cutoff) / (cplx(0.0, xi) - spec.mu);
  }
  fft_pow2(buf, +1);
  return buf.head(g.n);
}

Eigen::VectorXcd apply_smu_cutoff_tone(const LineGrid& g, const MultiplierSpec& spec,
                                       double tone, cplx amp) {
  if (!spec.cutoff || *spec.cutoff <= 0)
    throw std::invalid_argument("apply_smu_cutoff_tone: positive cutoff required");
  const int N = g.npad();
  TonePad tp = build_tapered_tone(g, N, tone, amp);
  Eigen::VectorXcd& buf = tp.buf;
  fft_pow2(buf, -1);
  const double L = N * g.h;
  for (int k = 0; k < N; ++k) {
    double xi = freq(k, N, L);
    buf[k] *= cutoff_profile(xi / *spec.cutoff) / (cplx(0.0, xi) - spec.mu);
  }
  fft_pow2(buf, +1);
  return buf.segment(tp.offset, g.n);
}

double weighted_norm(const LineGrid& g, const Eigen::VectorXcd& f, double delta, int s) {
  if (f.size() != g.n) throw std::invalid_argument("weighted_norm: size mismatch");
  if (s < 0 || s > 2) throw std::invalid_argument("weighted_norm: s in {0,1,2}");
  Eigen::VectorXcd v(g.n);
  for (int j = 0; j < g.n; ++j) {
    double x = g.x(j);
    v[j] = f[j] * std::pow(1.0 + x * x, 0.5 * delta);
  }
  auto l2 = [&](const Eigen::VectorXcd& w) {
    double acc = 0;
    for (int j = 0; j < g.n; ++j) {
      double tw = (j == 0 || j == g.n - 1) ? 0.5 : 1.0;
      acc += tw * std::norm(w[j]);
    }
    return std::sqrt(acc * g.h);
  };
  double nrm = l2(v);
  if (s >= 1) {
    Eigen::VectorXcd d1 = derivative4(v, g.h);
    nrm += l2(d1);
    if (s >= 2) nrm += l2(derivative4(d1, g.h));
  }
  return nrm;
}

Eigen::VectorXcd fft_derivative(const LineGrid& g, const Eigen::VectorXcd& f, int order) {
  const int N = g.npad();
  Eigen::VectorXcd buf = Eigen::VectorXcd::Zero(N);
  buf.head(g.n) = f;
  fft_pow2(buf, -1);
  const double L = N * g.h;
  for (int k = 0; k < N; ++k) {
    cplx ix(0.0, freq(k, N, L));
    cplx m = 1.0;
    for (int o = 0; o < order; ++o) m *= ix;
    buf[k] *= m;
  }
  fft_pow2(buf, +1);
  return buf.head(g.n);
}

}  // namespace cgomax
