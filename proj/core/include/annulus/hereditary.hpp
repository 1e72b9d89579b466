#pragma once

#include <memory>
#include <vector>

#include "annulus/kernel.hpp"
#include "annulus/laurent.hpp"
#include "annulus/test_functions.hpp"
#include "annulus/types.hpp"

namespace annulus {

/// Commuting pair with sigma(T) inside the annulus.
struct OperatorPair {
  CMatrix T;
  CMatrix X;
  double spectral_margin = 0.0;
};

/// min over eigenvalues of min(|lambda| - q, 1 - |lambda|); throws a spectrum
/// error naming the offending eigenvalue when it is not positive.
double check_spectrum(const CMatrix& T, const AnnulusParams& params);

/// T^j / sqrt(1 + q^{2j}); negative j uses one LU inverse of T.
CMatrix zeta_of_operator(const CMatrix& T, int j, const AnnulusParams& params);

struct HereditaryOptions {
  /// Stop once the next term pair is below tol * |G| * (1 - r) / 2.
  double tol = 1e-15;
  int max_terms = 4000;
  int min_terms = 8;
};

/// sum_j T_j G T_j^*.
CMatrix hereditary_k(const CMatrix& T, const CMatrix& G, const AnnulusParams& params,
                     const HereditaryOptions& options = {}, int* terms_used = nullptr);

/// C' sum_j (-1)^j T_j G T_j^*; inverse of hereditary_k.
CMatrix inv_k_hereditary(const CMatrix& T, const CMatrix& G, const AnnulusParams& params,
                         const HereditaryOptions& options = {}, int* terms_used = nullptr);

enum class FactorOrdering { descending, ascending };

/// R with R^* R = inv_k_hereditary(T, I); rows are the eigenvectors with
/// eigenvalue above 1e-12 times the largest, scaled by square roots.
CMatrix defect_factor(const CMatrix& T, const AnnulusParams& params,
                      FactorOrdering ordering = FactorOrdering::descending);

/// Lifting V: H -> H^2(k) (x) H truncated to |j| <= trunc. Block j occupies rows
/// (j + trunc) h .. (j + trunc + 1) h - 1 and equals R T_j^*.
struct LiftingData {
  CMatrix R;
  CMatrix V;
  int trunc = 0;
  double tail_estimate = 0.0;

  Eigen::Index h() const noexcept { return R.rows(); }
  CMatrix block(int j) const;
  /// Coordinate projection onto the zeta_0 block, h x (2 trunc + 1) h.
  CMatrix zeroth_projection() const;
};

Eigen::Index block_index(int j, int trunc, Eigen::Index h, Eigen::Index row);

/// Builds V and checks the tail sum_{|j| > N} |R T_j^*|^2 < 1e-12.
LiftingData build_lifting(const CMatrix& T, const CMatrix& R, int trunc, const AnnulusParams& params);

/// Smallest truncation whose lifting tail estimate is below 1e-12 (at least min_trunc).
int lifting_truncation(const CMatrix& T, const CMatrix& R, const AnnulusParams& params, int min_trunc = 8,
                       int max_trunc = 4000);

/// (2N+1) x (2N+1) matrix of multiplication by f in the zeta basis. Coefficients
/// beyond N/2 must be negligible (below 1e-15 of the largest).
CMatrix multiplication_matrix(const LaurentCoeffs& coeffs, int trunc);

/// Matrix-valued variant; plain[j + max_index] is the plain coefficient of z^j.
CMatrix multiplication_matrix(const std::vector<CMatrix>& plain, int max_index, int trunc, double q);

/// M kron I_h with block layout matching LiftingData.
CMatrix kron_identity(const CMatrix& m, Eigen::Index h);

/// |V T^* - M_z^* V| in the spectral norm.
double intertwining_residual(const LiftingData& lifting, const CMatrix& T, const AnnulusParams& params);

/// Pick data realized on span{k_{z_j}}: the Gram matrix factors as L L^*,
/// T = L^{-1} diag(z) L and X = L^{-1} diag(w) L in orthonormal coordinates.
/// A form K in kernel coordinates corresponds to L^{-1} K L^{-*}.
struct PickModel {
  OperatorPair pair;
  std::vector<cd> nodes;
  std::vector<cd> targets;
  CMatrix gram;
  CMatrix factor;

  CMatrix to_orthonormal(const CMatrix& kernel_form) const;
  CMatrix to_kernel(const CMatrix& orthonormal_form) const;
};

PickModel pick_model(const std::vector<cd>& nodes, const std::vector<cd>& targets, const AnnulusParams& params);

/// Integer powers T^j, |j| <= extent, computed once; functional calculus for
/// Laurent polynomials and test functions on top of them.
class OperatorCalculus {
 public:
  OperatorCalculus(const CMatrix& T, std::shared_ptr<const AtomFunction> phi);

  const CMatrix& T() const noexcept { return T_; }
  const CMatrix& inverse() const noexcept { return inverse_; }
  int extent() const noexcept { return extent_; }
  std::shared_ptr<const AtomFunction> atom_ptr() const noexcept { return phi_; }
  const CMatrix& power(int j) const;

  /// sum_j c_j T^j for a Laurent polynomial within the cached extent.
  CMatrix evaluate(const LaurentPolynomial& f) const;
  /// phi(scale T) for |scale| = 1.
  CMatrix phi_of(cd scale) const;
  /// T_psi = delta phi(T) phi(conj(gamma) T) T^{-1}.
  CMatrix test_function(const TestFunction& tf) const;

 private:
  CMatrix T_;
  CMatrix inverse_;
  std::shared_ptr<const AtomFunction> phi_;
  int extent_;
  std::vector<CMatrix> powers_;
  CMatrix phi_T_;
};

}  // namespace annulus
