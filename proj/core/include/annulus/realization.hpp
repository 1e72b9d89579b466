#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "annulus/decomposition.hpp"
#include "annulus/hereditary.hpp"
#include "annulus/laurent.hpp"
#include "annulus/test_functions.hpp"
#include "annulus/types.hpp"

namespace annulus {

/// One test-function atom of the state space with its multiplicity.
struct AtomBlock {
  cd gamma;
  Eigen::Index multiplicity = 0;
};

/// Unitary U = [[A, B], [C, D]] on E (+) H. E is atom-major: block m spans
/// multiplicity_m consecutive coordinates and rho(E(z)) multiplies it by
/// psi_{gamma_m}(z). Within a block built from an atom of rank r, pad slot s
/// occupies coordinates [s r, (s + 1) r).
struct Colligation {
  CMatrix A;
  CMatrix B;
  CMatrix C;
  CMatrix D;
  std::vector<AtomBlock> blocks;
  int pad_dim = 1;
  std::shared_ptr<const AtomFunction> phi;

  Eigen::Index state_dim() const noexcept { return A.rows(); }
  Eigen::Index io_dim() const noexcept { return D.rows(); }
  CMatrix unitary() const;
  /// Same block structure with U replaced by `u`.
  Colligation with_unitary(const CMatrix& u) const;
};

/// max(|U^*U - I|, |UU^* - I|).
double unitarity_defect(const Colligation& col);

/// The two spans of the lurking isometry in E (+) H coordinates:
/// P = [W Phi^* Y; R] and Q = [W Phi^* iota; R X^*], with W the embedding into
/// pad slot 0. P^* P = Q^* Q up to the decomposition residual.
struct LurkingSpans {
  CMatrix P;
  CMatrix Q;
  std::vector<AtomBlock> blocks;
  int pad_dim = 1;
};

LurkingSpans lurking_spans(const CMatrix& T, const CMatrix& X, const CMatrix& R, const AtomicDecomposition& dec,
                           int pad_dim, const AnnulusParams& params,
                           std::shared_ptr<const AtomFunction> phi = nullptr);

/// Smallest pad making the complements of both spans equal in dimension.
int minimal_pad_dim(const LurkingSpans& spans);

/// U with U^* P = Q: the unitary closest to mapping P onto Q (orthogonal
/// Procrustes on the SVD of Q P^*), which restricts to the isometry between
/// the spans and pairs their complements.
Colligation build_colligation(const CMatrix& T, const CMatrix& X, const CMatrix& R, const AtomicDecomposition& dec,
                              int pad_dim, const AnnulusParams& params,
                              std::shared_ptr<const AtomFunction> phi = nullptr);

/// |A^* W Phi^* Y + C^* R - W Phi^* iota| and |B^* W Phi^* Y + D^* R - R X^*|.
std::pair<double, double> system_residuals(const Colligation& col, const LurkingSpans& spans);

/// Diagonal of rho(E(z)).
CVector rho_diagonal(const Colligation& col, cd z);
/// rho(E(z)) as a dense matrix; z must lie in the closed annulus.
CMatrix rho_of_E(const Colligation& col, cd z);

/// W_r(z) = D + C (I - r rho(E(z)) A)^{-1} r rho(E(z)) B; r = 1 is the transfer function.
CMatrix transfer_eval(const Colligation& col, cd z, double r = 1.0);
/// Condition number of I - r rho(E(z)) A.
double resolvent_condition(const Colligation& col, cd z, double r = 1.0);
/// H_r(z) = C (I - r rho(E(z)) A)^{-1}.
CMatrix h_r_eval(const Colligation& col, cd z, double r);

/// Circles for Laurent extraction of functions applied to T: midway between the
/// spectrum of T and each boundary circle, with enough nodes that aliasing
/// stays below 1e-15 (at least 4 * max_index).
CircleQuadrature spectral_contour(const CMatrix& T, const AnnulusParams& params, int max_index);

/// Plain Laurent coefficients of W (index j + max_index).
std::vector<CMatrix> transfer_coefficients(const Colligation& col, int max_index, const CircleQuadrature& quad);

struct CommutantReport {
  double residual = 0.0;
  /// Largest |W_j| |T^j| over the outermost two coefficient pairs.
  double tail = 0.0;
};

/// |X V^* - V^* M_W| with M_W the truncated multiplication matrix of W built
/// from coefficients |j| <= 2 trunc; truncation error if the tail exceeds 1e-8.
CommutantReport commutant_residual(const Colligation& col, const CMatrix& T, const CMatrix& X,
                                   const LiftingData& lifting, const AnnulusParams& params);

/// Matrix of HH_r^*: H^2(k) (x) H -> E in the zeta basis, block j equal to
/// (H_r coefficient j)^* sqrt(1 + q^{2j}); shape state_dim x (2 trunc + 1) h.
CMatrix h_r_matrix(const Colligation& col, double r, int trunc, const CircleQuadrature& quad);

/// Smallest kappa with [kappa k(z_i,z_j) I - H_r(z_i) H_r(z_j)^*] PSD on the points.
double estimate_kappa(const Colligation& col, double r, const std::vector<cd>& points, const AnnulusParams& params);

/// mu_m = (HH_r^* V)^* E_m (HH_r^* V) for each block m.
AtomicDecomposition extract_decomposition(const Colligation& col, const LiftingData& lifting, double r,
                                          const CMatrix& T, const AnnulusParams& params);

/// |inv_k(T, I - X X^*) - mu(T) + riemann_sum(mu)| in the spectral norm.
double key_mu_residual(const CMatrix& T, const CMatrix& X, const AtomicDecomposition& dec,
                       const AnnulusParams& params, std::shared_ptr<const AtomFunction> phi = nullptr);

/// Haar-distributed unitary of size n from a seeded generator.
CMatrix random_unitary(Eigen::Index n, std::uint64_t seed);

/// Colligation with the given atoms (multiplicity each) and io dimension,
/// U drawn from random_unitary(seed).
Colligation random_colligation(const std::vector<cd>& gammas, Eigen::Index multiplicity, Eigen::Index io_dim,
                               std::uint64_t seed, std::shared_ptr<const AtomFunction> phi);

}  // namespace annulus
