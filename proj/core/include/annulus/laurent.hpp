#pragma once

#include <functional>
#include <vector>

#include "annulus/types.hpp"

namespace annulus {

/// A finite Laurent polynomial sum_n c_n z^n with c_n stored from min_power up.
struct LaurentPolynomial {
  int min_power = 0;
  std::vector<cd> coeffs;

  static LaurentPolynomial monomial(int power, cd coefficient = 1.0);

  int max_power() const { return min_power + static_cast<int>(coeffs.size()) - 1; }
  bool empty() const { return coeffs.empty(); }
  cd coefficient(int power) const;
  cd operator()(cd z) const;
};

/// Integer power by repeated squaring; negative exponents invert first.
cd ipow(cd z, int n);

/// Where and how densely a function is sampled to recover its Laurent
/// coefficients. Indices j >= 0 come from the circle |z| = radius_pos, indices
/// j < 0 from |z| = radius_neg; both circles use `nodes` trapezoidal nodes.
struct CircleQuadrature {
  double radius_pos = 1.0;
  double radius_neg = 1.0;
  int nodes = 0;
};

/// Plain Laurent coefficients c_j, |j| <= max_index, of a scalar function
/// analytic on an annulus containing both circles. Entry j + max_index holds c_j.
std::vector<cd> laurent_coefficients(const std::function<cd(cd)>& f, int max_index,
                                     const CircleQuadrature& quad);

/// Matrix-valued variant. All samples must share one shape.
std::vector<CMatrix> laurent_coefficients(const std::function<CMatrix(cd)>& f, int max_index,
                                          const CircleQuadrature& quad);

}  // namespace annulus
