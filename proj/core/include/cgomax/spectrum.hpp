// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cgomax/exterior.hpp"
#include "cgomax/grid.hpp"

namespace cgomax {

enum class ScalarBc { Dirichlet, Neumann };

// Eigen-system of the Laplace-Beltrami operator on M0: all discrete
// eigenvalues (for spectral-gap queries) and the first nev eigenvectors,
// orthonormal in L2(M0, dV).
struct ScalarEigensystem {
  ScalarBc bc = ScalarBc::Dirichlet;
  int nev = 0;
  Eigen::VectorXd evals;       // first nev
  Eigen::VectorXd evals_all;   // full discrete spectrum, ascending
  Eigen::MatrixXd vecs;        // nodes x nev
  Eigen::VectorXd mass;        // dV weights
  uint64_t grid_hash = 0;

  double residual(const TransversalGrid& tg, int l) const;  // ||.|| of eigen defect
};

ScalarEigensystem solve_scalar_eigensystem(const TransversalGrid& tg, int nev, ScalarBc bc);

// 1-form eigensystem with relative boundary conditions, synthesized from the
// exact family d(phi)/sqrt(lambda) over Dirichlet pairs and the coexact
// family *d(chi)/sqrt(mu) over Neumann pairs with mu > 0, merged, sorted and
// re-orthonormalized in L2(Omega^1 M0).
struct OneFormEigensystem {
  int nev = 0;
  Eigen::VectorXd evals;
  Eigen::VectorXd evals_all;
  Eigen::MatrixXd comp_xi, comp_eta;  // nodes x nev
  std::vector<int> family;            // 0 = exact, 1 = coexact
  uint64_t grid_hash = 0;
};

OneFormEigensystem solve_oneform_relative(const TransversalGrid& tg, int nev,
                                          const ScalarEigensystem& dirichlet,
                                          const ScalarEigensystem& neumann);

struct TransversalSpectrum {
  ScalarEigensystem dirichlet;
  ScalarEigensystem neumann;
  OneFormEigensystem oneform;
};

TransversalSpectrum build_spectrum(const TransversalGrid& tg, int nev);

// 1-form mass inner product on M0.
double oneform_dot(const TransversalGrid& tg, const Eigen::VectorXd& axi,
                   const Eigen::VectorXd& aeta, const Eigen::VectorXd& bxi,
                   const Eigen::VectorXd& beta);

// Distance of tau^2 + k^2 to the given spectrum; throws if tau^2 + k^2 lies
// beyond the computed spectral range.
double spectral_gap(double tau, double k, const Eigen::VectorXd& spec);
Eigen::VectorXd merged_spectrum(const TransversalSpectrum& sp);  // 0-form + 1-form
// Smallest move of tau that achieves gap >= gmin; throws if none within
// |tau' - tau| <= window.
double nudge_tau(double tau, double k, const Eigen::VectorXd& spec, double gmin, double window);

// ---- partial eigen-expansions over the transversal direction -----------
// channels(l, i1) = integral over M0 of f(x1,.) phi_l dV.
Eigen::MatrixXcd expand_scalar(const ScalarEigensystem& sys, const CylinderGrid& G,
                               const Field& f);
Field synth_scalar(const ScalarEigensystem& sys, const CylinderGrid& G,
                   const Eigen::MatrixXcd& channels);
// transversal 1-form part (components a2, a3)
Eigen::MatrixXcd expand_oneform(const OneFormEigensystem& sys, const CylinderGrid& G,
                                const Field& a2, const Field& a3);
void synth_oneform(const OneFormEigensystem& sys, const CylinderGrid& G,
                   const Eigen::MatrixXcd& channels, Field& a2, Field& a3);

// Spectrum cache on disk, keyed by grid hash + nev.
bool load_spectrum_cache(const std::string& dir, const TransversalGrid& tg, int nev,
                         TransversalSpectrum& out);
void store_spectrum_cache(const std::string& dir, const TransversalSpectrum& sp);

}  // namespace cgomax
