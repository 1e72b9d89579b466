#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "annulus/hereditary.hpp"
#include "annulus/kernel.hpp"
#include "annulus/test_functions.hpp"
#include "annulus/types.hpp"

namespace annulus {

/// Atomic operator measure sum_m delta_{psi_{gamma_m}} Gamma_m.
struct AtomicDecomposition {
  std::vector<cd> gammas;
  std::vector<CMatrix> atoms;

  std::size_t size() const noexcept { return atoms.size(); }
  /// mu(T) = sum_m Gamma_m.
  CMatrix total() const;
};

/// N equispaced points exp(2 pi i m / N).
std::vector<cd> sample_test_set(int count);

/// Linear constraint sum_m map_m(Gamma_m) = target over Hermitian n x n atoms,
/// each Gamma_m PSD. In congruence form map_m(G) = G - S_m G S_m^*; in
/// Hadamard form map_m(G) = W_m o G.
struct AtomicSystem {
  enum class Form { congruence, hadamard };

  Form form = Form::congruence;
  std::vector<cd> gammas;
  CMatrix target;
  std::vector<CMatrix> maps;

  Eigen::Index dim() const noexcept { return target.rows(); }
  std::size_t atoms() const noexcept { return maps.size(); }

  CMatrix apply_atom(std::size_t m, const CMatrix& g) const;
  /// Adjoint of apply_atom for the real inner product Re tr(A^* B).
  CMatrix adjoint_atom(std::size_t m, const CMatrix& h) const;
  CMatrix apply(const std::vector<CMatrix>& atoms) const;
  /// |apply(atoms) - target|_F / max(1, |target|_F).
  double residual(const std::vector<CMatrix>& atoms) const;
};

/// B = inv_k_hereditary(T, I - X X^*), S_m = T_{psi_m}.
AtomicSystem assemble_system(const CMatrix& T, const CMatrix& X, const std::vector<cd>& gammas,
                             const AnnulusParams& params, std::shared_ptr<const AtomFunction> phi = nullptr);

/// Entrywise form 1 - w_j conj(w_l) = sum_m (1 - psi_m(z_j) conj psi_m(z_l)) (Gamma_m)_{jl}.
AtomicSystem pick_scalar_system(const std::vector<cd>& nodes, const std::vector<cd>& targets,
                                const std::vector<cd>& gammas, const AnnulusParams& params,
                                std::shared_ptr<const AtomFunction> phi = nullptr);

/// T_psi for each gamma.
std::vector<CMatrix> test_operators(const OperatorCalculus& calculus, const std::vector<cd>& gammas);

enum class Weighting { mu, lambda };

/// Lambda_m = k(T,T^*)(Gamma_m).
std::vector<CMatrix> lambda_atoms(const CMatrix& T, const AtomicDecomposition& dec, const AnnulusParams& params);

/// sum_m T_{psi_m} W_m T_{psi_m}^* with W_m = Gamma_m or Lambda_m.
CMatrix riemann_sum(const CMatrix& T, const AtomicDecomposition& dec, Weighting which, const AnnulusParams& params,
                    std::shared_ptr<const AtomFunction> phi = nullptr);

/// Same sum from precomputed operators and weights.
CMatrix riemann_sum(const std::vector<CMatrix>& operators, const std::vector<CMatrix>& weights);

struct SchurViolation {
  std::size_t atom = 0;
  std::size_t sample = 0;
  double min_eigenvalue = 0.0;
};

struct SchurReport {
  std::size_t checks = 0;
  double worst_relative = 0.0;
  std::vector<SchurViolation> violations;
  bool passed() const noexcept { return violations.empty(); }
};

/// For each atom Lambda_m and each multiplier operator T_phi: min eigenvalue of
/// Lambda_m - T_phi Lambda_m T_phi^* must be at least -tol |Lambda_m|.
SchurReport check_schur_domination(const std::vector<CMatrix>& lambdas, const std::vector<CMatrix>& multipliers,
                                   double tol = 1e-8);

/// Convenience form: multipliers given by plain Laurent coefficients, each
/// certified contractive by its truncated multiplication matrix (norm at most
/// 1 + 1e-8 at truncation 64); a non-contractive sample is a domain error.
SchurReport check_schur_domination(const CMatrix& T, const AtomicDecomposition& dec,
                                   const std::vector<LaurentPolynomial>& samples, const AnnulusParams& params,
                                   std::shared_ptr<const AtomFunction> phi = nullptr, double tol = 1e-8);

/// Finite models of L^2(mu) and L^2(Lambda): Gamma_m = F_m^* F_m and
/// Lambda_m = G_m^* G_m with F_m, G_m of full row rank.
struct FiniteL2Model {
  std::vector<Eigen::Index> block_dims;
  std::vector<CMatrix> factors;
  std::vector<CMatrix> lambda_atoms;
  std::vector<CMatrix> lambda_factors;

  Eigen::Index total_dim() const;
  Eigen::Index lambda_dim() const;
};

/// Factors every atom; a factorization error if some atom has an eigenvalue
/// below -1e-10 |Gamma_m|.
FiniteL2Model build_l2_model(const CMatrix& T, const AtomicDecomposition& dec, const AnnulusParams& params);

/// Y m = (G_m T_{psi_m}^* m)_m, iota m = (G_m m)_m, and Phi^* = diag(F_m G_m^+)
/// from L^2(Lambda) to L^2(mu) coordinates.
struct ModelOperators {
  CMatrix Y;
  CMatrix iota;
  CMatrix Phi_star;
  std::vector<CMatrix> operators;
};

ModelOperators build_model_operators(const CMatrix& T, const AtomicDecomposition& dec, const FiniteL2Model& model,
                                     const AnnulusParams& params, std::shared_ptr<const AtomFunction> phi = nullptr);

/// |R^*R + Y^* Phi Phi^* Y - X R^*R X^* - iota^* Phi Phi^* iota| in the spectral norm.
double lurking_residual(const CMatrix& R, const CMatrix& X, const ModelOperators& ops);

struct RefinementReport {
  std::vector<int> depths;
  std::vector<double> differences;
  std::vector<double> oracle_errors;
  double final_error = 0.0;
  bool monotone = false;
};

/// Dyadic partitions of the circle with midpoint tags: sums of
/// T_psi mu(arc) T_psi^* with mu(arc) the integral of density over the arc
/// (normalized arc length), compared with a 4096-node trapezoidal oracle.
/// Differences below `floor` count as converged when checking monotonicity.
RefinementReport refinement_convergence(const std::function<double(double)>& density, const CMatrix& T,
                                        const std::vector<int>& depths, const AnnulusParams& params,
                                        std::shared_ptr<const AtomFunction> phi = nullptr, double floor = 1e-13);

}  // namespace annulus
