#include "annulus/hereditary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "annulus/errors.hpp"

namespace annulus {

namespace {

CMatrix checked_inverse(const CMatrix& T) {
  Eigen::PartialPivLU<CMatrix> lu(T);
  if (!(lu.rcond() > 1e-14)) fail(ErrorKind::singularity, "operator numerically singular");
  return lu.inverse();
}

CMatrix matrix_power(CMatrix base, int n) {
  CMatrix result = CMatrix::Identity(base.rows(), base.cols());
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

// Shared summation for k(T,T*) and its reciprocal. Negative powers are carried
// as (q T^{-1})^j so they decay instead of growing.
CMatrix hereditary_sum(const CMatrix& T, const CMatrix& G, const AnnulusParams& params,
                       const HereditaryOptions& options, bool alternating, int* terms_used) {
  if (T.rows() != T.cols() || G.rows() != T.rows() || G.cols() != T.cols())
    fail(ErrorKind::dimension, "hereditary sum needs square T and G of equal size");
  const double scale = G.norm();
  if (scale == 0.0) {
    if (terms_used) *terms_used = 0;
    return CMatrix::Zero(G.rows(), G.cols());
  }
  const double q = params.q();
  const double q2 = q * q;
  const CMatrix qinv = q * checked_inverse(T);
  CMatrix pos = CMatrix::Identity(T.rows(), T.cols());
  CMatrix neg = pos;
  CMatrix sum = G / 2.0;
  double q2j = 1.0;
  double previous = -1.0;
  for (int j = 1; j <= options.max_terms; ++j) {
    pos = pos * T;
    neg = neg * qinv;
    q2j *= q2;
    const CMatrix term_pos = pos * G * pos.adjoint() / (1.0 + q2j);
    const CMatrix term_neg = neg * G * neg.adjoint() / (q2j + 1.0);
    const double sign = (alternating && (j & 1)) ? -1.0 : 1.0;
    sum += sign * (term_pos + term_neg);
    const double size = term_pos.norm() + term_neg.norm();
    if (j >= options.min_terms && previous > 0.0) {
      const double ratio = size / previous;
      if (ratio < 1.0 && size < options.tol * scale * (1.0 - ratio) / 2.0) {
        if (terms_used) *terms_used = j;
        return sum;
      }
    }
    if (size == 0.0) {
      if (terms_used) *terms_used = j;
      return sum;
    }
    previous = size;
  }
  std::ostringstream os;
  os << "hereditary sum did not settle within " << options.max_terms << " terms";
  fail(ErrorKind::convergence, os.str());
}

}  // namespace

double check_spectrum(const CMatrix& T, const AnnulusParams& params) {
  if (T.rows() != T.cols() || T.rows() == 0) fail(ErrorKind::dimension, "spectrum check needs a square matrix");
  Eigen::ComplexEigenSolver<CMatrix> es(T, false);
  double margin = std::numeric_limits<double>::infinity();
  cd worst = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cd lambda = es.eigenvalues()(i);
    const double m = params.margin(lambda);
    if (m < margin) {
      margin = m;
      worst = lambda;
    }
  }
  if (!(margin > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "eigenvalue " << worst.real() << (worst.imag() < 0 ? "" : "+") << worst.imag()
       << "i lies outside the open annulus";
    fail(ErrorKind::spectrum, os.str());
  }
  return margin;
}

CMatrix zeta_of_operator(const CMatrix& T, int j, const AnnulusParams& params) {
  if (T.rows() != T.cols()) fail(ErrorKind::dimension, "zeta_of_operator needs a square matrix");
  const double q = params.q();
  if (j >= 0) return matrix_power(T, j) / std::sqrt(1.0 + std::pow(q, 2.0 * j));
  const int m = -j;
  return matrix_power(q * checked_inverse(T), m) / std::sqrt(std::pow(q, 2.0 * m) + 1.0);
}

CMatrix hereditary_k(const CMatrix& T, const CMatrix& G, const AnnulusParams& params,
                     const HereditaryOptions& options, int* terms_used) {
  return hereditary_sum(T, G, params, options, false, terms_used);
}

CMatrix inv_k_hereditary(const CMatrix& T, const CMatrix& G, const AnnulusParams& params,
                         const HereditaryOptions& options, int* terms_used) {
  return params.c_prime() * hereditary_sum(T, G, params, options, true, terms_used);
}

CMatrix defect_factor(const CMatrix& T, const AnnulusParams& params, FactorOrdering ordering) {
  const CMatrix D = hermitian_part(inv_k_hereditary(T, CMatrix::Identity(T.rows(), T.cols()), params));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(D);
  const RVector& ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  if (ev(0) < -1e-10 * std::max(1.0, top)) {
    std::ostringstream os;
    os << "(1/k)(T,T*)(I) has eigenvalue " << ev(0);
    fail(ErrorKind::positivity, os.str());
  }
  const double keep = std::max(1e-12 * top, 1e-300);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > keep) kept.push_back(i);
  if (ordering == FactorOrdering::descending) std::reverse(kept.begin(), kept.end());
  CMatrix R(static_cast<Eigen::Index>(kept.size()), T.cols());
  for (std::size_t r = 0; r < kept.size(); ++r)
    R.row(static_cast<Eigen::Index>(r)) = std::sqrt(ev(kept[r])) * es.eigenvectors().col(kept[r]).adjoint();
  return R;
}

CMatrix LiftingData::block(int j) const {
  if (j < -trunc || j > trunc) return CMatrix::Zero(h(), V.cols());
  return V.middleRows(block_index(j, trunc, h(), 0), h());
}

CMatrix LiftingData::zeroth_projection() const {
  CMatrix p = CMatrix::Zero(h(), V.rows());
  p.middleCols(block_index(0, trunc, h(), 0), h()).setIdentity();
  return p;
}

Eigen::Index block_index(int j, int trunc, Eigen::Index h, Eigen::Index row) {
  return static_cast<Eigen::Index>(j + trunc) * h + row;
}

namespace {

// Squared norms |R T_j^*|^2 for j = 0..limit on both sides.
struct LiftingTerms {
  std::vector<double> pos;
  std::vector<double> neg;
};

LiftingTerms lifting_terms(const CMatrix& T, const CMatrix& R, const AnnulusParams& params, int limit) {
  const double q = params.q();
  const CMatrix qinv = q * checked_inverse(T);
  CMatrix pos = R;
  CMatrix neg = R;
  LiftingTerms out;
  double q2j = 1.0;
  out.pos.push_back(R.squaredNorm() / 2.0);
  out.neg.push_back(R.squaredNorm() / 2.0);
  for (int j = 1; j <= limit; ++j) {
    pos = pos * T.adjoint();
    neg = neg * qinv.adjoint();
    q2j *= q * q;
    out.pos.push_back(pos.squaredNorm() / (1.0 + q2j));
    out.neg.push_back(neg.squaredNorm() / (q2j + 1.0));
  }
  return out;
}

// Geometric extrapolation of the tail beyond index n from the last two terms.
double geometric_tail(const std::vector<double>& terms, int n) {
  const double last = terms[static_cast<std::size_t>(n)];
  if (last == 0.0) return 0.0;
  const double prev = terms[static_cast<std::size_t>(n - 1)];
  const double ratio = prev > 0.0 ? last / prev : 1.0;
  if (!(ratio < 1.0)) return std::numeric_limits<double>::infinity();
  return last * ratio / (1.0 - ratio);
}

}  // namespace

int lifting_truncation(const CMatrix& T, const CMatrix& R, const AnnulusParams& params, int min_trunc,
                       int max_trunc) {
  const auto terms = lifting_terms(T, R, params, max_trunc);
  for (int n = std::max(min_trunc, 2); n <= max_trunc; ++n) {
    if (geometric_tail(terms.pos, n) + geometric_tail(terms.neg, n) < 1e-12) return n;
  }
  fail(ErrorKind::truncation, "no lifting truncation up to " + std::to_string(max_trunc) + " meets the tail bound");
}

LiftingData build_lifting(const CMatrix& T, const CMatrix& R, int trunc, const AnnulusParams& params) {
  if (trunc < 2) fail(ErrorKind::truncation, "lifting truncation must be at least 2");
  if (R.cols() != T.rows()) fail(ErrorKind::dimension, "defect factor and operator sizes differ");
  const auto terms = lifting_terms(T, R, params, trunc);
  const double tail = geometric_tail(terms.pos, trunc) + geometric_tail(terms.neg, trunc);
  if (!(tail < 1e-12)) {
    std::ostringstream os;
    os << "lifting tail estimate " << tail << " at truncation " << trunc << " exceeds 1e-12";
    fail(ErrorKind::truncation, os.str());
  }
  LiftingData out;
  out.R = R;
  out.trunc = trunc;
  out.tail_estimate = tail;
  const Eigen::Index h = R.rows();
  out.V.resize((2 * trunc + 1) * h, T.cols());
  for (int j = -trunc; j <= trunc; ++j)
    out.V.middleRows(block_index(j, trunc, h, 0), h) = R * zeta_of_operator(T, j, params).adjoint();
  return out;
}

CMatrix multiplication_matrix(const LaurentCoeffs& coeffs, int trunc) {
  if (trunc < 1) fail(ErrorKind::support, "multiplication truncation must be positive");
  double largest = 0.0;
  for (cd v : coeffs.values) largest = std::max(largest, std::abs(v));
  for (int j = -coeffs.center_index; j <= coeffs.center_index; ++j) {
    if (2 * std::abs(j) > trunc && std::abs(coeffs.basis(j)) > 1e-15 * largest) {
      std::ostringstream os;
      os << "coefficient index " << j << " outside [-N/2, N/2] for N = " << trunc;
      fail(ErrorKind::support, os.str());
    }
  }
  const int size = 2 * trunc + 1;
  CMatrix m = CMatrix::Zero(size, size);
  for (int n = -trunc; n <= trunc; ++n)
    for (int k = -trunc; k <= trunc; ++k) {
      const int d = n - k;
      if (d < -coeffs.center_index || d > coeffs.center_index) continue;
      const double w = std::exp(0.5 * (log_basis_weight(coeffs.q, n) - log_basis_weight(coeffs.q, k)));
      m(n + trunc, k + trunc) = coeffs.plain(d) * w;
    }
  return m;
}

CMatrix multiplication_matrix(const std::vector<CMatrix>& plain, int max_index, int trunc, double q) {
  if (plain.size() != static_cast<std::size_t>(2 * max_index + 1))
    fail(ErrorKind::dimension, "coefficient list length does not match its index range");
  const Eigen::Index rows = plain.front().rows();
  const Eigen::Index cols = plain.front().cols();
  const int size = 2 * trunc + 1;
  CMatrix m = CMatrix::Zero(size * rows, size * cols);
  for (int n = -trunc; n <= trunc; ++n)
    for (int k = -trunc; k <= trunc; ++k) {
      const int d = n - k;
      if (d < -max_index || d > max_index) continue;
      const double w = std::exp(0.5 * (log_basis_weight(q, n) - log_basis_weight(q, k)));
      m.block((n + trunc) * rows, (k + trunc) * cols, rows, cols) = plain[static_cast<std::size_t>(d + max_index)] * w;
    }
  return m;
}

CMatrix kron_identity(const CMatrix& m, Eigen::Index h) {
  CMatrix out = CMatrix::Zero(m.rows() * h, m.cols() * h);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != cd(0.0)) out.block(i * h, j * h, h, h) = m(i, j) * CMatrix::Identity(h, h);
  return out;
}

double intertwining_residual(const LiftingData& lifting, const CMatrix& T, const AnnulusParams& params) {
  const auto z = LaurentCoeffs::from_plain(LaurentPolynomial::monomial(1), params.q(), 1);
  const CMatrix mz = kron_identity(multiplication_matrix(z, lifting.trunc), lifting.h());
  return spectral_norm(lifting.V * T.adjoint() - mz.adjoint() * lifting.V);
}

CMatrix PickModel::to_orthonormal(const CMatrix& kernel_form) const {
  const auto lower = factor.triangularView<Eigen::Lower>();
  const CMatrix left = lower.solve(kernel_form);
  return lower.solve(left.adjoint()).adjoint();
}

CMatrix PickModel::to_kernel(const CMatrix& orthonormal_form) const {
  return factor * orthonormal_form * factor.adjoint();
}

PickModel pick_model(const std::vector<cd>& nodes, const std::vector<cd>& targets, const AnnulusParams& params) {
  if (nodes.empty()) fail(ErrorKind::domain, "Pick model needs at least one node");
  if (nodes.size() != targets.size()) fail(ErrorKind::dimension, "node and target counts differ");
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (nodes[i] == nodes[j]) fail(ErrorKind::domain, "Pick nodes must be distinct");
  PickModel model;
  model.nodes = nodes;
  model.targets = targets;
  model.gram = gram_matrix(params, nodes);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(model.gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
  if (!(lo > 0.0) || hi / lo > 1e12) {
    std::ostringstream os;
    os << "Gram matrix condition number " << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity())
       << " exceeds 1e12";
    fail(ErrorKind::conditioning, os.str());
  }
  Eigen::LLT<CMatrix> llt(model.gram);
  if (llt.info() != Eigen::Success) fail(ErrorKind::conditioning, "Gram matrix Cholesky failed");
  model.factor = llt.matrixL();
  const auto n = static_cast<Eigen::Index>(nodes.size());
  CVector z(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z(i) = nodes[static_cast<std::size_t>(i)];
    w(i) = targets[static_cast<std::size_t>(i)];
  }
  const auto lower = model.factor.triangularView<Eigen::Lower>();
  model.pair.T = lower.solve(z.asDiagonal() * model.factor);
  model.pair.X = lower.solve(w.asDiagonal() * model.factor);
  model.pair.spectral_margin = check_spectrum(model.pair.T, params);
  return model;
}

OperatorCalculus::OperatorCalculus(const CMatrix& T, std::shared_ptr<const AtomFunction> phi)
    : T_(T), inverse_(checked_inverse(T)), phi_(std::move(phi)) {
  if (!phi_) fail(ErrorKind::construction, "operator calculus needs an atom function");
  const auto& f = phi_->laurent();
  extent_ = std::max(f.max_power(), -f.min_power);
  powers_.resize(static_cast<std::size_t>(2 * extent_ + 1));
  powers_[static_cast<std::size_t>(extent_)] = CMatrix::Identity(T.rows(), T.cols());
  for (int j = 1; j <= extent_; ++j) {
    powers_[static_cast<std::size_t>(extent_ + j)] = powers_[static_cast<std::size_t>(extent_ + j - 1)] * T_;
    powers_[static_cast<std::size_t>(extent_ - j)] = powers_[static_cast<std::size_t>(extent_ - j + 1)] * inverse_;
  }
  phi_T_ = phi_of(1.0);
}

const CMatrix& OperatorCalculus::power(int j) const {
  if (j < -extent_ || j > extent_) fail(ErrorKind::support, "operator power outside cached range");
  return powers_[static_cast<std::size_t>(j + extent_)];
}

CMatrix OperatorCalculus::evaluate(const LaurentPolynomial& f) const {
  CMatrix out = CMatrix::Zero(T_.rows(), T_.cols());
  for (int j = f.min_power; j <= f.max_power(); ++j) {
    const cd c = f.coefficient(j);
    if (c != cd(0.0)) out += c * power(j);
  }
  return out;
}

CMatrix OperatorCalculus::phi_of(cd scale) const {
  const auto& f = phi_->laurent();
  CMatrix out = CMatrix::Zero(T_.rows(), T_.cols());
  for (int j = f.min_power; j <= f.max_power(); ++j) out += (f.coefficient(j) * ipow(scale, j)) * power(j);
  return out;
}

CMatrix OperatorCalculus::test_function(const TestFunction& tf) const {
  return tf.delta() * phi_T_ * phi_of(std::conj(tf.gamma())) * inverse_;
}

}  // namespace annulus
