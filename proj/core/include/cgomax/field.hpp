// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>

#include "cgomax/grid.hpp"
#include "cgomax/util.hpp"

namespace cgomax {

using Field = Eigen::VectorXcd;    // complex scalar field over 3D nodes
using TField = Eigen::VectorXcd;   // complex scalar field over transversal nodes

inline Field zero_field(const CylinderGrid& G) { return Field::Zero(G.size()); }

// 1-form by covariant components (a_1, a_xi, a_eta) in the cylinder chart.
struct OneForm {
  Field a1, a2, a3;
  static OneForm zero(const CylinderGrid& G) {
    return {zero_field(G), zero_field(G), zero_field(G)};
  }
};

// 2-form components (F_23, F_31, F_12); coordinate order (x1, xi, eta).
struct TwoForm {
  Field f23, f31, f12;
  static TwoForm zero(const CylinderGrid& G) {
    return {zero_field(G), zero_field(G), zero_field(G)};
  }
};

// Graded form in the vector layout (degree0, degree2, degree3, degree1);
// the 3-form is stored by its single coefficient t in t*dx1^dxi^deta.
struct GradedForm {
  Field s0;
  TwoForm F2;
  Field s3;
  OneForm A1;

  static GradedForm zero(const CylinderGrid& G) {
    return {zero_field(G), TwoForm::zero(G), zero_field(G), OneForm::zero(G)};
  }

  // Flat slot order: [0]=deg0, [1..3]=deg2, [4]=deg3, [5..7]=deg1.
  static constexpr int kSlots = 8;
  Field& slot(int s) {
    switch (s) {
      case 0: return s0;
      case 1: return F2.f23;
      case 2: return F2.f31;
      case 3: return F2.f12;
      case 4: return s3;
      case 5: return A1.a1;
      case 6: return A1.a2;
      default: return A1.a3;
    }
  }
  const Field& slot(int s) const { return const_cast<GradedForm*>(this)->slot(s); }

  GradedForm& operator+=(const GradedForm& o) {
    for (int s = 0; s < kSlots; ++s) slot(s) += o.slot(s);
    return *this;
  }
  GradedForm& operator-=(const GradedForm& o) {
    for (int s = 0; s < kSlots; ++s) slot(s) -= o.slot(s);
    return *this;
  }
  GradedForm& operator*=(cplx c) {
    for (int s = 0; s < kSlots; ++s) slot(s) *= c;
    return *this;
  }
};

inline GradedForm operator+(GradedForm a, const GradedForm& b) { a += b; return a; }
inline GradedForm operator-(GradedForm a, const GradedForm& b) { a -= b; return a; }
inline GradedForm operator*(cplx c, GradedForm a) { a *= c; return a; }

}  // namespace cgomax
