#include "annulus/kernel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "annulus/errors.hpp"

namespace annulus {

namespace {

constexpr double kFactorTol = 1e-17;
constexpr int kThetaCap = 100000;

void check_modulus(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    std::ostringstream os;
    os << "modulus q = " << q << " outside (0,1)";
    fail(ErrorKind::domain, os.str());
  }
}

std::string describe(cd z) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i)";
  return os.str();
}

// Series at alpha = z conj(w) with certified tail. Positive indices decay like
// |alpha|^n, negative ones like (q^2/|alpha|)^n / t.
KernelValue kernel_series(double q, cd alpha, double t, const SeriesControl& control) {
  const double a = std::abs(alpha);
  const double q2 = q * q;
  const double b = q2 / a;
  if (!(a < 1.0) || !(b < 1.0)) fail(ErrorKind::domain, "series kernel needs q^2 < |z conj w| < 1");
  const cd alpha_inv_scaled = q2 / alpha;
  cd sum = 1.0 / (1.0 + t);
  cd pos = 1.0;
  cd neg = 1.0;
  double q2n = 1.0;
  for (int n = 1; n <= control.max_index; ++n) {
    pos *= alpha;
    neg *= alpha_inv_scaled;
    q2n *= q2;
    sum += pos / (1.0 + t * q2n) + neg / (q2n + t);
    const double tail = std::pow(a, n + 1) / (1.0 - a) + std::pow(b, n + 1) / ((1.0 - b) * t);
    if (tail < control.tol) return {sum, tail};
  }
  std::ostringstream os;
  os << "series tail did not reach " << control.tol << " within " << control.max_index
     << " terms at |z conj w| = " << a;
  fail(ErrorKind::convergence, os.str());
}

// Theta quotient without the constant; also returns a relative truncation bound.
cd theta_quotient(double q, cd alpha, double t, double* rel_tail) {
  if (alpha == cd(0.0)) fail(ErrorKind::domain, "theta kernel needs z conj w != 0");
  const cd x = -kI * std::log(alpha) / 2.0;
  const cd yp = -kI * std::log(t) / 2.0 + kPi / 2.0;
  const cd den = theta1(x, q) * theta1(yp, q);
  if (std::abs(den) < 1e-300) fail(ErrorKind::singularity, "kernel pole at z conj w = " + describe(alpha));
  if (rel_tail) {
    // three products truncated at factors within kFactorTol of one
    *rel_tail = 3.0 * kFactorTol / (1.0 - q * q) + 8.0 * std::numeric_limits<double>::epsilon();
  }
  return theta1(x + yp, q) / den;
}

}  // namespace

AnnulusParams::AnnulusParams(double q) : q_(q), sqrt_q_(std::sqrt(q)) {
  check_modulus(q);
  // Calibrate at (sqrt q, sqrt q), t = 1, where the series converges like q^n.
  const cd alpha = q;
  const KernelValue ref = kernel_series(q, alpha, 1.0, SeriesControl{});
  jk_constant_ = ref.value / theta_quotient(q, alpha, 1.0, nullptr);
  const cd half_pi_theta = theta1(kPi / 2.0, q);
  c_prime_ = (-(half_pi_theta * half_pi_theta) / (jk_constant_ * jk_constant_)).real();
}

bool AnnulusParams::in_closed(cd z, double slack) const noexcept {
  const double r = std::abs(z);
  return r >= q_ * (1.0 - slack) && r <= 1.0 + slack;
}

bool AnnulusParams::in_open(cd z) const noexcept {
  const double r = std::abs(z);
  return r > q_ && r < 1.0;
}

double AnnulusParams::margin(cd z) const noexcept {
  const double r = std::abs(z);
  return std::min(r - q_, 1.0 - r);
}

int theta1_depth(cd x, double q) {
  check_modulus(q);
  const double growth = std::exp(2.0 * std::abs(x.imag()));
  const double q2 = q * q;
  double q2n = q2;
  int n = 1;
  while (q2n * growth >= kFactorTol && n < kThetaCap) {
    q2n *= q2;
    ++n;
  }
  return n;
}

cd theta1(cd x, double q) {
  check_modulus(q);
  if (!(std::abs(x.imag()) < -2.0 * std::log(q))) {
    std::ostringstream os;
    os << "theta1 argument " << describe(x) << " has |Im x| >= -2 log q";
    fail(ErrorKind::domain, os.str());
  }
  const cd e2 = std::exp(2.0 * kI * x);
  const cd em2 = 1.0 / e2;
  const double q2 = q * q;
  const int depth = theta1_depth(x, q);
  cd prod = 2.0 * std::pow(q, 0.25) * std::sin(x);
  double q2n = 1.0;
  for (int n = 1; n <= depth; ++n) {
    q2n *= q2;
    prod *= (1.0 - q2n) * (1.0 - q2n * e2) * (1.0 - q2n * em2);
  }
  return prod;
}

KernelValue kernel(const AnnulusParams& params, cd z, cd w, double t, KernelMethod method,
                   const SeriesControl& control) {
  if (!(t > 0.0)) {
    std::ostringstream os;
    os << "kernel weight t = " << t << " must be positive";
    fail(ErrorKind::domain, os.str());
  }
  const cd alpha = z * std::conj(w);
  if (method == KernelMethod::series) {
    if (!params.in_open(z) || !params.in_open(w))
      fail(ErrorKind::domain, "series kernel needs interior points, got " + describe(z) + ", " + describe(w));
    return kernel_series(params.q(), alpha, t, control);
  }
  if (!params.in_closed(z) || !params.in_closed(w))
    fail(ErrorKind::domain, "theta kernel needs points in the closed annulus, got " + describe(z) + ", " +
                                describe(w));
  double rel = 0.0;
  const cd value = params.jordan_kronecker() * theta_quotient(params.q(), alpha, t, &rel);
  return {value, rel * std::max(1.0, std::abs(value))};
}

cd kernel_value(const AnnulusParams& params, cd z, cd w) {
  return kernel(params, z, w, 1.0, KernelMethod::series).value;
}

double log_basis_weight(double q, int n) {
  const double lq = std::log(q);
  if (n >= 0) return std::log1p(std::exp(2.0 * n * lq));
  // 1 + q^{2n} = q^{2n} (1 + q^{-2n})
  return 2.0 * n * lq + std::log1p(std::exp(-2.0 * n * lq));
}

cd basis_zeta(const AnnulusParams& params, int n, cd z, double t) {
  if (!(t > 0.0)) fail(ErrorKind::domain, "basis weight t must be positive");
  if (z == cd(0.0)) {
    if (n < 0) fail(ErrorKind::domain, "zeta_n(0) undefined for n < 0");
    if (n > 0) return 0.0;
    return 1.0 / std::sqrt(1.0 + t);
  }
  const double q = params.q();
  if (n >= 0) return ipow(z, n) / std::sqrt(1.0 + t * std::pow(q, 2.0 * n));
  const int m = -n;
  // z^{-m} / sqrt(1 + t q^{-2m}) = (q/z)^m / sqrt(q^{2m} + t)
  return ipow(q / z, m) / std::sqrt(std::pow(q, 2.0 * m) + t);
}

double reciprocal_constant(double q) { return AnnulusParams(q).c_prime(); }

CMatrix gram_matrix(const AnnulusParams& params, const std::vector<cd>& points, double t) {
  const auto n = static_cast<Eigen::Index>(points.size());
  for (cd z : points)
    if (!params.in_open(z)) fail(ErrorKind::domain, "Gram point " + describe(z) + " not strictly inside");
  CMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = kernel(params, points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(i)], t).value.real();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      g(i, j) = kernel(params, points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)], t).value;
      g(j, i) = std::conj(g(i, j));
    }
  }
  return g;
}

cd boundary_inner_product(const AnnulusParams& params, const LaurentPolynomial& f,
                          const LaurentPolynomial& g, double t, int nodes) {
  if (f.empty() || g.empty()) return 0.0;
  // f conj(g) on a circle carries frequencies f.min - g.max .. f.max - g.min
  const int span = std::max(std::abs(f.max_power() - g.min_power), std::abs(f.min_power - g.max_power()));
  if (nodes == 0) nodes = 2 * span + 8;
  if (nodes <= span) {
    std::ostringstream os;
    os << nodes << " quadrature nodes cannot resolve frequency " << span;
    fail(ErrorKind::resolution, os.str());
  }
  return boundary_inner_product(
      params, [&](cd z) { return f(z); }, [&](cd z) { return g(z); }, t, nodes);
}

cd boundary_inner_product(const AnnulusParams& params, const std::function<cd(cd)>& f,
                          const std::function<cd(cd)>& g, double t, int nodes) {
  if (nodes < 1) fail(ErrorKind::resolution, "boundary quadrature needs at least one node");
  cd outer = 0.0;
  cd inner = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const cd u = std::polar(1.0, 2.0 * kPi * k / nodes);
    outer += f(u) * std::conj(g(u));
    const cd v = params.q() * u;
    inner += f(v) * std::conj(g(v));
  }
  return (outer + t * inner) / static_cast<double>(nodes);
}

}  // namespace annulus
