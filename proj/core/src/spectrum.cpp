// SPDX-License-Identifier: Apache-2.0
#include "cgomax/spectrum.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cgomax/cache.hpp"

namespace cgomax {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;


namespace {

// Conservative flux-form stiffness of -Laplace_{g0} on the cell-centered
// chart grid; symmetric w.r.t. the diagonal mass dV. Requires g12 == 0.
SpMat assemble_stiffness(const TransversalGrid& tg, ScalarBc bc) {
  for (int q = 0; q < tg.size(); ++q)
    if (std::abs(tg.g12[q]) > 1e-14)
      throw std::invalid_argument("eigensolver requires a diagonal chart metric");

  std::vector<Trip> trips;
  trips.reserve(size_t(tg.size()) * 6);
  auto cxi = [&](int q) { return tg.sqrtg[q] * tg.gi11[q]; };
  auto ceta = [&](int q) { return tg.sqrtg[q] * tg.gi22[q]; };

  // interior xi faces
  for (int i = 0; i + 1 < tg.nxi; ++i)
    for (int j = 0; j < tg.neta; ++j) {
      int a = tg.idx(i, j), b = tg.idx(i + 1, j);
      double c = 0.5 * (cxi(a) + cxi(b)) * tg.heta / tg.hxi;
      trips.emplace_back(a, a, c);
      trips.emplace_back(b, b, c);
      trips.emplace_back(a, b, -c);
      trips.emplace_back(b, a, -c);
    }
  // eta faces
  for (int i = 0; i < tg.nxi; ++i)
    for (int j = 0; j < tg.neta; ++j) {
      int jn = j + 1;
      if (jn == tg.neta) {
        if (!tg.eta_periodic) continue;
        jn = 0;
      }
      int a = tg.idx(i, j), b = tg.idx(i, jn);
      double c = 0.5 * (ceta(a) + ceta(b)) * tg.hxi / tg.heta;
      trips.emplace_back(a, a, c);
      trips.emplace_back(b, b, c);
      trips.emplace_back(a, b, -c);
      trips.emplace_back(b, a, -c);
    }
  // physical boundary faces
  auto bd = [&](int q, double coef_times_h) {
    if (bc == ScalarBc::Dirichlet) trips.emplace_back(q, q, coef_times_h);
  };
  for (int j = 0; j < tg.neta; ++j) {
    // outer xi face; extrapolate the face coefficient
    int q1 = tg.idx(tg.nxi - 1, j), q2 = tg.idx(tg.nxi - 2, j);
    double cf = 1.5 * cxi(q1) - 0.5 * cxi(q2);
    bd(q1, cf * tg.heta / (0.5 * tg.hxi));
    if (!tg.has_origin_closure()) {
      int p1 = tg.idx(0, j), p2 = tg.idx(1, j);
      double cf0 = 1.5 * cxi(p1) - 0.5 * cxi(p2);
      bd(p1, cf0 * tg.heta / (0.5 * tg.hxi));
    }
    // polar inner face sits at the coordinate origin: zero-area, no flux
  }
  if (!tg.eta_periodic) {
    for (int i = 0; i < tg.nxi; ++i) {
      int q1 = tg.idx(i, 0), q2 = tg.idx(i, 1);
      double cf = 1.5 * ceta(q1) - 0.5 * ceta(q2);
      bd(q1, cf * tg.hxi / (0.5 * tg.heta));
      int r1 = tg.idx(i, tg.neta - 1), r2 = tg.idx(i, tg.neta - 2);
      double cf2 = 1.5 * ceta(r1) - 0.5 * ceta(r2);
      bd(r1, cf2 * tg.hxi / (0.5 * tg.heta));
    }
  }
  SpMat K(tg.size(), tg.size());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

// Lowest eigenpairs of the standard symmetric problem A x = lambda x by
// shift-inverted block subspace iteration with Rayleigh-Ritz.
void lowest_pairs(const SpMat& A, int nev, Eigen::VectorXd& evals, Eigen::MatrixXd& vecs) {
  const int n = int(A.rows());
  const int block = std::min(n, nev + std::max(10, nev / 5));
  const double sigma = -0.5;
  SpMat S = A;
  for (int q = 0; q < n; ++q) S.coeffRef(q, q) -= sigma;
  Eigen::SimplicialLDLT<SpMat> chol(S);
  if (chol.info() != Eigen::Success)
    throw std::runtime_error("eigensolver: factorization failed");

  Rng rng(12345);
  Eigen::MatrixXd X(n, block);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < block; ++j) X(i, j) = urand(rng, -1.0, 1.0);

  Eigen::VectorXd ritz(block);
  Eigen::MatrixXd V;
  double prev = 1e300;
  for (int it = 0; it < 200; ++it) {
    X = chol.solve(X);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    Eigen::MatrixXd H = Q.transpose() * (A * Q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    ritz = es.eigenvalues();
    V = Q * es.eigenvectors();
    X = V;
    // convergence on the nev-th Ritz value
    double cur = ritz[std::min(nev, block) - 1];
    if (std::abs(cur - prev) < 1e-11 * std::max(1.0, std::abs(cur)) && it >= 8) break;
    prev = cur;
  }
  evals = ritz.head(nev);
  vecs = V.leftCols(nev);
}

}  // namespace

ScalarEigensystem solve_scalar_eigensystem(const TransversalGrid& tg, int nev, ScalarBc bc) {
  if (nev < 1) throw std::invalid_argument("solve_scalar_eigensystem: nev >= 1 required");
  const int n = tg.size();
  if (nev > n) throw std::invalid_argument("solve_scalar_eigensystem: nev exceeds grid size");
  SpMat K = assemble_stiffness(tg, bc);
  Eigen::VectorXd mass = tg.dV;
  Eigen::VectorXd isq = mass.cwiseSqrt().cwiseInverse();
  // standard form A = M^{-1/2} K M^{-1/2}
  SpMat A = isq.asDiagonal() * K * isq.asDiagonal();
  SpMat As = 0.5 * (SpMat(A.transpose()) + A);

  ScalarEigensystem out;
  out.bc = bc;
  out.nev = nev;
  out.mass = mass;
  out.grid_hash = tg.hash();

  if (n <= 1400) {
    Eigen::MatrixXd Ad = Eigen::MatrixXd(As);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ad);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed to converge");
    out.evals_all = es.eigenvalues();
    out.evals = es.eigenvalues().head(nev);
    out.vecs = isq.asDiagonal() * es.eigenvectors().leftCols(nev);
  } else {
    Eigen::MatrixXd Ad = Eigen::MatrixXd(As);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ad, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed to converge");
    out.evals_all = es.eigenvalues();
    Eigen::VectorXd ev;
    Eigen::MatrixXd vc;
    lowest_pairs(As, nev, ev, vc);
    out.evals = ev;
    out.vecs = isq.asDiagonal() * vc;
    double drift = (out.evals - out.evals_all.head(nev)).cwiseAbs().maxCoeff();
    if (drift > 1e-7 * std::max(1.0, out.evals[nev - 1]))
      throw std::runtime_error("eigensolver: subspace iteration did not converge (residual " +
                               std::to_string(drift) + ")");
  }
  if (bc == ScalarBc::Dirichlet && out.evals[0] <= 0)
    throw std::runtime_error("Dirichlet eigensolver produced a nonpositive eigenvalue");
  return out;
}

double ScalarEigensystem::residual(const TransversalGrid& tg, int l) const {
  SpMat K = assemble_stiffness(tg, bc);
  Eigen::VectorXd v = vecs.col(l);
  Eigen::VectorXd r = K * v - evals[l] * mass.asDiagonal() * v;
  // mass-weighted norm of the defect in operator form
  Eigen::VectorXd rop = r.cwiseQuotient(mass);
  return std::sqrt(rop.cwiseAbs2().dot(mass));
}

double oneform_dot(const TransversalGrid& tg, const Eigen::VectorXd& axi,
                   const Eigen::VectorXd& aeta, const Eigen::VectorXd& bxi,
                   const Eigen::VectorXd& beta) {
  double acc = 0;
  for (int q = 0; q < tg.size(); ++q) {
    acc += tg.dV[q] * (tg.gi11[q] * axi[q] * bxi[q] +
                       tg.gi12[q] * (axi[q] * beta[q] + aeta[q] * bxi[q]) +
                       tg.gi22[q] * aeta[q] * beta[q]);
  }
  return acc;
}

OneFormEigensystem solve_oneform_relative(const TransversalGrid& tg, int nev,
                                          const ScalarEigensystem& dirichlet,
                                          const ScalarEigensystem& neumann) {
  const int n = tg.size();
  // Harmonic-field guard: on a disc the Neumann spectrum has exactly one
  // (near-)zero eigenvalue, the constant.
  const double ztol = 1e-8 * std::max(1.0, neumann.evals_all[neumann.evals_all.size() - 1]);
  int nzero = 0;
  for (int l = 0; l < neumann.evals.size(); ++l)
    if (neumann.evals[l] < ztol) ++nzero;
  if (nzero > 1)
    throw std::runtime_error("solve_oneform_relative: harmonic 1-form field detected; "
                             "the synthesized basis is incomplete on this manifold");

  struct Cand {
    double ev;
    int fam;
    Eigen::VectorXd cxi, ceta;
  };
  std::vector<Cand> cands;
  auto real_tp = [&](const Eigen::VectorXd& u, bool xi, OriginParity par) {
    TField uc = u.cast<cplx>();
    return TField(tpartial(tg, uc, xi, par)).real().eval();
  };
  for (int l = 0; l < dirichlet.nev; ++l) {
    double lam = dirichlet.evals[l];
    Eigen::VectorXd phi = dirichlet.vecs.col(l);
    Cand c;
    c.ev = lam;
    c.fam = 0;
    c.cxi = real_tp(phi, true, OriginParity::Even) / std::sqrt(lam);
    c.ceta = real_tp(phi, false, OriginParity::Even) / std::sqrt(lam);
    cands.push_back(std::move(c));
  }
  for (int l = 0; l < neumann.nev; ++l) {
    double mu = neumann.evals[l];
    if (mu < ztol) continue;  // the constant mode has *d(const) = 0
    Eigen::VectorXd chi = neumann.vecs.col(l);
    Eigen::VectorXd dxi = real_tp(chi, true, OriginParity::Even);
    Eigen::VectorXd deta = real_tp(chi, false, OriginParity::Even);
    Cand c;
    c.ev = mu;
    c.fam = 1;
    c.cxi.resize(n);
    c.ceta.resize(n);
    for (int q = 0; q < n; ++q) {
      double up_xi = tg.gi11[q] * dxi[q] + tg.gi12[q] * deta[q];
      double up_eta = tg.gi12[q] * dxi[q] + tg.gi22[q] * deta[q];
      c.cxi[q] = -tg.sqrtg[q] * up_eta / std::sqrt(mu);
      c.ceta[q] = tg.sqrtg[q] * up_xi / std::sqrt(mu);
    }
    cands.push_back(std::move(c));
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.ev < b.ev; });
  if (int(cands.size()) < nev)
    throw std::runtime_error("solve_oneform_relative: increase scalar N_ev to cover request");
  cands.resize(size_t(nev));

  // Joint modified Gram-Schmidt in the 1-form mass inner product.
  OneFormEigensystem out;
  out.nev = nev;
  out.grid_hash = tg.hash();
  out.evals.resize(nev);
  out.comp_xi.resize(n, nev);
  out.comp_eta.resize(n, nev);
  out.family.resize(size_t(nev));
  for (int m = 0; m < nev; ++m) {
    Eigen::VectorXd cxi = cands[m].cxi, ceta = cands[m].ceta;
    for (int l = 0; l < m; ++l) {
      double pr = oneform_dot(tg, cxi, ceta, out.comp_xi.col(l), out.comp_eta.col(l));
      cxi -= pr * out.comp_xi.col(l);
      ceta -= pr * out.comp_eta.col(l);
    }
    double nr = std::sqrt(oneform_dot(tg, cxi, ceta, cxi, ceta));
    if (nr < 1e-10)
      throw std::runtime_error("solve_oneform_relative: degenerate candidate basis");
    out.comp_xi.col(m) = cxi / nr;
    out.comp_eta.col(m) = ceta / nr;
    out.evals[m] = cands[m].ev;
    out.family[size_t(m)] = cands[m].fam;
  }

  // full 1-form spectrum = Dirichlet values + positive Neumann values
  std::vector<double> all;
  for (int l = 0; l < dirichlet.evals_all.size(); ++l) all.push_back(dirichlet.evals_all[l]);
  for (int l = 0; l < neumann.evals_all.size(); ++l)
    if (neumann.evals_all[l] > ztol) all.push_back(neumann.evals_all[l]);
  std::sort(all.begin(), all.end());
  out.evals_all = Eigen::Map<Eigen::VectorXd>(all.data(), Eigen::Index(all.size()));
  return out;
}

TransversalSpectrum build_spectrum(const TransversalGrid& tg, int nev) {
  TransversalSpectrum sp;
  sp.dirichlet = solve_scalar_eigensystem(tg, nev, ScalarBc::Dirichlet);
  // +1 accounts for the excluded Neumann constant mode
  sp.neumann = solve_scalar_eigensystem(tg, std::min(nev + 1, tg.size()), ScalarBc::Neumann);
  sp.oneform = solve_oneform_relative(tg, nev, sp.dirichlet, sp.neumann);
  return sp;
}

double spectral_gap(double tau, double k, const Eigen::VectorXd& spec) {
  double val = tau * tau + k * k;
  if (spec.size() == 0) throw std::invalid_argument("spectral_gap: empty spectrum");
  if (val > spec[spec.size() - 1])
    throw std::runtime_error("spectral_gap: tau^2+k^2 beyond computed spectrum; increase N_ev");
  double best = 1e300;
  for (int l = 0; l < spec.size(); ++l) best = std::min(best, std::abs(spec[l] - val));
  return best;
}

Eigen::VectorXd merged_spectrum(const TransversalSpectrum& sp) {
  std::vector<double> all;
  for (int l = 0; l < sp.dirichlet.evals_all.size(); ++l)
    all.push_back(sp.dirichlet.evals_all[l]);
  for (int l = 0; l < sp.oneform.evals_all.size(); ++l) all.push_back(sp.oneform.evals_all[l]);
  std::sort(all.begin(), all.end());
  return Eigen::Map<Eigen::VectorXd>(all.data(), Eigen::Index(all.size()));
}

double nudge_tau(double tau, double k, const Eigen::VectorXd& spec, double gmin, double window) {
  auto ok = [&](double t) {
    double val = t * t + k * k;
    for (int l = 0; l < spec.size(); ++l)
      if (std::abs(spec[l] - val) < gmin) return false;
    return true;
  };
  if (spectral_gap(tau, k, spec) >= gmin) return tau;
  double sgn = tau >= 0 ? 1.0 : -1.0;
  std::vector<double> candidates;
  double val = tau * tau + k * k;
  for (int l = 0; l < spec.size(); ++l) {
    if (std::abs(spec[l] - val) > 4 * gmin + window * (2 * std::abs(tau) + window)) continue;
    for (double v : {spec[l] - gmin, spec[l] + gmin}) {
      if (v - k * k <= 0) continue;
      candidates.push_back(sgn * std::sqrt(v - k * k));
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](double a, double b) {
    return std::abs(a - tau) < std::abs(b - tau);
  });
  for (double c : candidates) {
    // push marginally inside the allowed region
    for (double eps : {0.0, 1e-9, -1e-9, 1e-6, -1e-6})
      if (std::abs(c + eps - tau) <= window && ok(c + eps)) return c + eps;
  }
  throw std::runtime_error("nudge_tau: no admissible tau within window");
}

Eigen::MatrixXcd expand_scalar(const ScalarEigensystem& sys, const CylinderGrid& G,
                               const Field& f) {
  const int nt = G.tg.size(), n1 = G.gx.n;
  Eigen::Map<const Eigen::MatrixXcd> F(f.data(), nt, n1);
  Eigen::MatrixXd W = sys.mass.asDiagonal() * sys.vecs;  // nt x nev
  return W.transpose().cast<cplx>() * F;                 // nev x n1
}

Field synth_scalar(const ScalarEigensystem& sys, const CylinderGrid& G,
                   const Eigen::MatrixXcd& channels) {
  const int nt = G.tg.size(), n1 = G.gx.n;
  Field f(G.size());
  Eigen::Map<Eigen::MatrixXcd> F(f.data(), nt, n1);
  F = sys.vecs.cast<cplx>() * channels;
  return f;
}

Eigen::MatrixXcd expand_oneform(const OneFormEigensystem& sys, const CylinderGrid& G,
                                const Field& a2, const Field& a3) {
  const int nt = G.tg.size(), n1 = G.gx.n;
  const TransversalGrid& tg = G.tg;
  Eigen::MatrixXd Wxi(nt, sys.nev), Weta(nt, sys.nev);
  for (int l = 0; l < sys.nev; ++l)
    for (int q = 0; q < nt; ++q) {
      Wxi(q, l) = tg.dV[q] * (tg.gi11[q] * sys.comp_xi(q, l) + tg.gi12[q] * sys.comp_eta(q, l));
      Weta(q, l) = tg.dV[q] * (tg.gi12[q] * sys.comp_xi(q, l) + tg.gi22[q] * sys.comp_eta(q, l));
    }
  Eigen::Map<const Eigen::MatrixXcd> A2(a2.data(), nt, n1), A3(a3.data(), nt, n1);
  return Wxi.transpose().cast<cplx>() * A2 + Weta.transpose().cast<cplx>() * A3;
}

void synth_oneform(const OneFormEigensystem& sys, const CylinderGrid& G,
                   const Eigen::MatrixXcd& channels, Field& a2, Field& a3) {
  const int nt = G.tg.size(), n1 = G.gx.n;
  a2.resize(G.size());
  a3.resize(G.size());
  Eigen::Map<Eigen::MatrixXcd> A2(a2.data(), nt, n1), A3(a3.data(), nt, n1);
  A2 = sys.comp_xi.cast<cplx>() * channels;
  A3 = sys.comp_eta.cast<cplx>() * channels;
}

namespace {
constexpr uint32_t kSpecVersion = 3;

void put_scalar(BlobWriter& w, const ScalarEigensystem& s) {
  w.put_i32(int(s.bc));
  w.put_i32(s.nev);
  w.put_vec(s.evals);
  w.put_vec(s.evals_all);
  w.put_mat(s.vecs);
  w.put_vec(s.mass);
  w.put_u64(s.grid_hash);
}
ScalarEigensystem get_scalar(BlobReader& r) {
  ScalarEigensystem s;
  s.bc = ScalarBc(r.get_i32());
  s.nev = r.get_i32();
  s.evals = r.get_vec();
  s.evals_all = r.get_vec();
  s.vecs = r.get_mat();
  s.mass = r.get_vec();
  s.grid_hash = r.get_u64();
  return s;
}
std::string spec_cache_path(const std::string& dir, uint64_t grid_hash, int nev) {
  return dir + "/spectrum_" + std::to_string(grid_hash) + "_" + std::to_string(nev) + ".bin";
}
}  // namespace

bool load_spectrum_cache(const std::string& dir, const TransversalGrid& tg, int nev,
                         TransversalSpectrum& out) {
  std::vector<char> payload;
  if (!read_blob_file(spec_cache_path(dir, tg.hash(), nev), "SPEC", kSpecVersion, payload))
    return false;
  BlobReader r(std::move(payload));
  out.dirichlet = get_scalar(r);
  out.neumann = get_scalar(r);
  out.oneform.nev = r.get_i32();
  out.oneform.evals = r.get_vec();
  out.oneform.evals_all = r.get_vec();
  out.oneform.comp_xi = r.get_mat();
  out.oneform.comp_eta = r.get_mat();
  out.oneform.family = r.get_ints();
  out.oneform.grid_hash = r.get_u64();
  if (out.dirichlet.grid_hash != tg.hash())
    throw std::runtime_error("spectrum cache: grid hash mismatch");
  return true;
}

void store_spectrum_cache(const std::string& dir, const TransversalSpectrum& sp) {
  BlobWriter w;
  put_scalar(w, sp.dirichlet);
  put_scalar(w, sp.neumann);
  w.put_i32(sp.oneform.nev);
  w.put_vec(sp.oneform.evals);
  w.put_vec(sp.oneform.evals_all);
  w.put_mat(sp.oneform.comp_xi);
  w.put_mat(sp.oneform.comp_eta);
  w.put_ints(sp.oneform.family);
  w.put_u64(sp.oneform.grid_hash);
  write_blob_file(spec_cache_path(dir, sp.dirichlet.grid_hash, sp.dirichlet.nev), "SPEC",
                  kSpecVersion, w.data());
}

}  // namespace cgomax
