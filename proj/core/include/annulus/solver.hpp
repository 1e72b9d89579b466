#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "annulus/decomposition.hpp"

namespace annulus {

enum class FeasibilityStatus { feasible, infeasible, stalled };

std::string_view to_string(FeasibilityStatus status) noexcept;

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 20000;
  /// Seeds the start of the alternating projections (zero atoms plus a small
  /// deterministic PSD perturbation); identical seeds give identical runs.
  std::uint64_t seed = 0;
  /// Hand plateaued alternating projections to the interior-point refinement.
  bool interior_point = true;
  int interior_max_iter = 120;
  /// Upper bound on the number of atoms for solve_adaptive.
  int max_atoms = 256;
};

struct FeasibilityReport {
  FeasibilityStatus status = FeasibilityStatus::stalled;
  double residual = 0.0;
  int iterations = 0;
  int interior_iterations = 0;
  std::size_t atoms = 0;
  /// Dual witness H: every adjoint_atom(m, H) is negative semidefinite while
  /// Re tr(H target) > 0. Normalized so that Re tr(H target) = 1.
  std::optional<CMatrix> certificate;
  double certificate_violation = 0.0;
  std::vector<std::size_t> attempted_sizes;
};

struct SolveResult {
  FeasibilityReport report;
  AtomicDecomposition decomposition;
};

/// Worst eigenvalue max_m lambda_max(adjoint_atom(m, H)) after normalizing
/// Re tr(H target) = 1; returns +inf when Re tr(H target) <= 0.
double certificate_violation(const AtomicSystem& system, const CMatrix& H);

SolveResult solve_atoms(const AtomicSystem& system, const SolverOptions& options = {});

/// Retries at twice the atom count while the status is stalled, up to
/// options.max_atoms; builder(N) assembles the system on N atoms.
SolveResult solve_adaptive(const std::function<AtomicSystem(int)>& builder, int initial_atoms,
                           const SolverOptions& options = {});

}  // namespace annulus
