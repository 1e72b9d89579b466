#pragma once

#include <random>
#include <vector>

#include "annulus/decomposition.hpp"
#include "annulus/hereditary.hpp"
#include "annulus/kernel.hpp"
#include "annulus/realization.hpp"
#include "annulus/solver.hpp"
#include "annulus/test_functions.hpp"

namespace annulus::fixtures {

inline const std::vector<cd>& standard_nodes() {
  static const std::vector<cd> nodes{{0.5, 0.0}, {0.4, 0.3}, {-0.6, 0.1}, {0.1, -0.45}};
  return nodes;
}

inline const AnnulusParams& params() {
  static const AnnulusParams p(0.25);
  return p;
}

inline std::shared_ptr<const AtomFunction> phi() {
  static const auto f = build_phi(params());
  return f;
}

inline std::vector<cd> sample(const std::function<cd(cd)>& f, const std::vector<cd>& nodes) {
  std::vector<cd> out;
  for (cd z : nodes) out.push_back(f(z));
  return out;
}

/// Targets of a single test function psi_gamma with gamma = exp(2 pi i 3 / 32).
inline std::vector<cd> psi_targets(const std::vector<cd>& nodes = standard_nodes()) {
  const TestFunction tf = make_test_function(sample_test_set(32)[3], phi());
  return sample([&](cd z) { return tf(z); }, nodes);
}

/// Transfer function of a random colligation with 8 atoms, one copy each.
inline Colligation random_transfer(std::uint64_t seed = 7) {
  return random_colligation(sample_test_set(8), 1, 1, seed, phi());
}

inline std::vector<cd> transfer_targets(const Colligation& col, const std::vector<cd>& nodes = standard_nodes()) {
  return sample([&](cd z) { return transfer_eval(col, z)(0, 0); }, nodes);
}

struct Feasible {
  std::string name;
  std::vector<cd> nodes;
  std::vector<cd> targets;
};

inline std::vector<Feasible> feasible_fixtures() {
  return {{"psi_sampled", standard_nodes(), psi_targets()},
          {"random_transfer", standard_nodes(), transfer_targets(random_transfer())},
          {"constant", standard_nodes(), std::vector<cd>(4, cd(0.3))},
          {"small_targets", standard_nodes(), {{0.2, 0.0}, {0.1, 0.3}, {-0.4, 0.0}, {0.0, -0.2}}}};
}

/// Random matrix with entries uniform in the unit square.
inline CMatrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cd(u(rng), u(rng));
  return m;
}

/// Random T = S D S^{-1} with eigenvalue moduli in [q + margin, 1 - margin].
inline CMatrix random_operator(std::mt19937_64& rng, Eigen::Index n, double margin, const AnnulusParams& p) {
  std::uniform_real_distribution<double> radius(p.q() + margin, 1.0 - margin);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  CVector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = std::polar(radius(rng), angle(rng));
  CMatrix s = CMatrix::Identity(n, n) + 0.3 * random_matrix(rng, n, n);
  return s * d.asDiagonal() * s.inverse();
}

inline cd random_interior(std::mt19937_64& rng, const AnnulusParams& p, double margin = 0.02) {
  std::uniform_real_distribution<double> radius(p.q() + margin, 1.0 - margin);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  return std::polar(radius(rng), angle(rng));
}

}  // namespace annulus::fixtures
