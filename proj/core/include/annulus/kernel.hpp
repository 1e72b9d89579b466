#pragma once

#include <functional>
#include <vector>

#include "annulus/laurent.hpp"
#include "annulus/types.hpp"

namespace annulus {

/// Modulus of the annulus q < |z| < 1 with derived constants. The
/// Jordan-Kronecker constant is calibrated once in the constructor and never
/// changes afterwards, so instances may be shared freely across threads.
class AnnulusParams {
 public:
  explicit AnnulusParams(double q = 0.25);

  double q() const noexcept { return q_; }
  double sqrt_q() const noexcept { return sqrt_q_; }
  /// Reciprocal-kernel constant: k(z,w) k(z,-w) = 1 / c_prime().
  double c_prime() const noexcept { return c_prime_; }
  /// Proportionality constant between the kernel and its theta quotient.
  cd jordan_kronecker() const noexcept { return jk_constant_; }

  /// q <= |z| <= 1 up to a relative slack.
  bool in_closed(cd z, double slack = 1e-12) const noexcept;
  /// q < |z| < 1.
  bool in_open(cd z) const noexcept;
  /// Distance of |z| to the nearer boundary circle (negative outside).
  double margin(cd z) const noexcept;

 private:
  double q_;
  double sqrt_q_;
  cd jk_constant_;
  double c_prime_;
};

struct SeriesControl {
  int max_index = 4000;
  double tol = 1e-15;
};

struct KernelValue {
  cd value;
  double tail_bound = 0.0;
};

enum class KernelMethod { series, theta };

/// Jacobi theta function 2 q^{1/4} sin x prod_{n>=1} (1-q^{2n})(1-q^{2n}e^{2ix})(1-q^{2n}e^{-2ix}).
cd theta1(cd x, double q);

/// Number of product factors theta1 uses at (x, q).
int theta1_depth(cd x, double q);

/// Sarason kernel k(z,w;t) = sum_n (z conj w)^n / (1 + t q^{2n}).
KernelValue kernel(const AnnulusParams& params, cd z, cd w, double t = 1.0,
                   KernelMethod method = KernelMethod::series, const SeriesControl& control = {});

/// Shorthand for the distinguished kernel value k(z,w;1) by series.
cd kernel_value(const AnnulusParams& params, cd z, cd w);

/// Orthonormal basis element zeta_n(z) = z^n / sqrt(1 + t q^{2n}).
cd basis_zeta(const AnnulusParams& params, int n, cd z, double t = 1.0);

/// log(1 + q^{2n}) without overflow for large negative n.
double log_basis_weight(double q, int n);

/// C' for modulus q; equals AnnulusParams(q).c_prime().
double reciprocal_constant(double q);

/// Entry (i,j) = k(z_i, z_j; t). Points must lie strictly inside.
CMatrix gram_matrix(const AnnulusParams& params, const std::vector<cd>& points, double t = 1.0);

/// Integral of f conj(g) against the boundary measure of H^2_t: normalized arc
/// length on |z| = 1 plus t times normalized arc length on |z| = q. nodes = 0
/// picks an exact node count from the coefficient ranges.
cd boundary_inner_product(const AnnulusParams& params, const LaurentPolynomial& f,
                          const LaurentPolynomial& g, double t = 1.0, int nodes = 0);

/// Same integral for arbitrary functions sampled at `nodes` points per circle.
cd boundary_inner_product(const AnnulusParams& params, const std::function<cd(cd)>& f,
                          const std::function<cd(cd)>& g, double t, int nodes);

}  // namespace annulus
