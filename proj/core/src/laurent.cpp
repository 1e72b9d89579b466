#include "annulus/laurent.hpp"

#include <cmath>

#include "annulus/errors.hpp"
#include "annulus/parallel.hpp"

namespace annulus {

LaurentPolynomial LaurentPolynomial::monomial(int power, cd coefficient) {
  return LaurentPolynomial{power, {coefficient}};
}

cd LaurentPolynomial::coefficient(int power) const {
  const int idx = power - min_power;
  if (idx < 0 || idx >= static_cast<int>(coeffs.size())) return 0.0;
  return coeffs[static_cast<std::size_t>(idx)];
}

cd LaurentPolynomial::operator()(cd z) const {
  if (coeffs.empty()) return 0.0;
  // Horner in z, then shift by z^min_power.
  cd acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc * ipow(z, min_power);
}

cd ipow(cd z, int n) {
  if (n == 0) return 1.0;
  if (n < 0) {
    if (z == cd(0.0)) fail(ErrorKind::domain, "negative power of zero");
    z = 1.0 / z;
    n = -n;
  }
  cd result = 1.0;
  while (n > 0) {
    if (n & 1) result *= z;
    z *= z;
    n >>= 1;
  }
  return result;
}

namespace {

void check_quadrature(int max_index, const CircleQuadrature& quad) {
  if (max_index < 0) fail(ErrorKind::domain, "negative Laurent truncation");
  if (quad.radius_pos <= 0.0 || quad.radius_neg <= 0.0)
    fail(ErrorKind::domain, "quadrature radii must be positive");
  if (quad.nodes < 2 * max_index + 1)
    fail(ErrorKind::resolution, "quadrature node count " + std::to_string(quad.nodes) +
                                    " cannot resolve Laurent index " + std::to_string(max_index));
}

// Trapezoidal DFT of samples taken at radius * exp(2 pi i k / M).
template <typename Value, typename Zero>
void accumulate(const std::vector<Value>& samples, double radius, int j, int max_index,
                std::vector<Value>& out, Zero zero) {
  const int m = static_cast<int>(samples.size());
  Value acc = zero();
  for (int k = 0; k < m; ++k) {
    // exp(-2 pi i j k / M) with the product reduced mod M for accuracy
    const long long phase_index = (static_cast<long long>(j) * k) % m;
    const double angle = -2.0 * kPi * static_cast<double>(phase_index) / m;
    acc += samples[static_cast<std::size_t>(k)] * cd(std::cos(angle), std::sin(angle));
  }
  // c_j = (1/M) sum f(r w^k) w^{-jk} r^{-j}
  const double scale = std::exp(-static_cast<double>(j) * std::log(radius)) / m;
  out[static_cast<std::size_t>(j + max_index)] = acc * scale;
}

template <typename Value, typename Fn>
std::vector<Value> sample_circle(const Fn& f, double radius, int nodes) {
  std::vector<Value> samples(static_cast<std::size_t>(nodes));
  parallel_for(samples.size(), [&](std::size_t k) {
    const double angle = 2.0 * kPi * static_cast<double>(k) / nodes;
    samples[k] = f(std::polar(radius, angle));
  });
  return samples;
}

}  // namespace

std::vector<cd> laurent_coefficients(const std::function<cd(cd)>& f, int max_index,
                                     const CircleQuadrature& quad) {
  check_quadrature(max_index, quad);
  std::vector<cd> out(static_cast<std::size_t>(2 * max_index + 1));
  const auto pos = sample_circle<cd>(f, quad.radius_pos, quad.nodes);
  const bool shared = quad.radius_neg == quad.radius_pos;
  const auto neg = shared ? pos : sample_circle<cd>(f, quad.radius_neg, quad.nodes);
  auto zero = [] { return cd(0.0); };
  for (int j = 0; j <= max_index; ++j) accumulate(pos, quad.radius_pos, j, max_index, out, zero);
  for (int j = -max_index; j < 0; ++j) accumulate(neg, quad.radius_neg, j, max_index, out, zero);
  return out;
}

std::vector<CMatrix> laurent_coefficients(const std::function<CMatrix(cd)>& f, int max_index,
                                          const CircleQuadrature& quad) {
  check_quadrature(max_index, quad);
  std::vector<CMatrix> out(static_cast<std::size_t>(2 * max_index + 1));
  const auto pos = sample_circle<CMatrix>(f, quad.radius_pos, quad.nodes);
  const bool shared = quad.radius_neg == quad.radius_pos;
  const auto neg = shared ? pos : sample_circle<CMatrix>(f, quad.radius_neg, quad.nodes);
  const auto rows = pos.front().rows();
  const auto cols = pos.front().cols();
  auto zero = [&] { return CMatrix::Zero(rows, cols).eval(); };
  parallel_for(out.size(), [&](std::size_t idx) {
    const int j = static_cast<int>(idx) - max_index;
    if (j >= 0)
      accumulate(pos, quad.radius_pos, j, max_index, out, zero);
    else
      accumulate(neg, quad.radius_neg, j, max_index, out, zero);
  });
  return out;
}

}  // namespace annulus
