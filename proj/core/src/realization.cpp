#include "annulus/realization.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "annulus/errors.hpp"

namespace annulus {

namespace {

std::shared_ptr<const AtomFunction> ensure_phi(std::shared_ptr<const AtomFunction> phi, const AnnulusParams& params) {
  if (phi && phi->params().q() == params.q()) return phi;
  return build_phi(params);
}

CMatrix resolvent_solve(const Colligation& col, const CVector& z, double r, const CMatrix& rhs) {
  const Eigen::Index d = col.state_dim();
  const CMatrix m = CMatrix::Identity(d, d) - r * z.asDiagonal() * col.A;
  Eigen::PartialPivLU<CMatrix> lu(m);
  if (!(lu.rcond() > 1e-14)) fail(ErrorKind::singularity, "I - rho(E(z)) A is numerically singular");
  return lu.solve(rhs);
}

std::pair<double, double> spectral_radii(const CMatrix& T) {
  Eigen::ComplexEigenSolver<CMatrix> es(T, false);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double a = std::abs(es.eigenvalues()(i));
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  return {lo, hi};
}

}  // namespace

CMatrix Colligation::unitary() const {
  const Eigen::Index d = A.rows();
  const Eigen::Index h = D.rows();
  CMatrix u(d + h, d + h);
  u << A, B, C, D;
  return u;
}

Colligation Colligation::with_unitary(const CMatrix& u) const {
  const Eigen::Index d = A.rows();
  const Eigen::Index h = D.rows();
  if (u.rows() != d + h || u.cols() != d + h) fail(ErrorKind::dimension, "replacement unitary has the wrong size");
  Colligation out = *this;
  out.A = u.topLeftCorner(d, d);
  out.B = u.topRightCorner(d, h);
  out.C = u.bottomLeftCorner(h, d);
  out.D = u.bottomRightCorner(h, h);
  return out;
}

double unitarity_defect(const Colligation& col) {
  const CMatrix u = col.unitary();
  const CMatrix I = CMatrix::Identity(u.rows(), u.cols());
  return std::max(spectral_norm(u.adjoint() * u - I), spectral_norm(u * u.adjoint() - I));
}

LurkingSpans lurking_spans(const CMatrix& T, const CMatrix& X, const CMatrix& R, const AtomicDecomposition& dec,
                           int pad_dim, const AnnulusParams& params, std::shared_ptr<const AtomFunction> phi) {
  if (pad_dim < 1) fail(ErrorKind::dimension, "pad dimension must be at least 1 (minimal pad is 1)");
  phi = ensure_phi(std::move(phi), params);
  const FiniteL2Model model = build_l2_model(T, dec, params);
  const auto ops = test_operators(OperatorCalculus(T, phi), dec.gammas);
  const Eigen::Index n = T.rows();
  const Eigen::Index h = R.rows();
  Eigen::Index d = 0;
  for (auto r : model.block_dims) d += r * pad_dim;
  LurkingSpans spans;
  spans.pad_dim = pad_dim;
  spans.P = CMatrix::Zero(d + h, n);
  spans.Q = CMatrix::Zero(d + h, n);
  Eigen::Index offset = 0;
  for (std::size_t m = 0; m < dec.gammas.size(); ++m) {
    const Eigen::Index r = model.block_dims[m];
    if (r == 0) continue;
    const CMatrix& f = model.factors[m];
    spans.P.middleRows(offset, r) = f * ops[m].adjoint();
    spans.Q.middleRows(offset, r) = f;
    spans.blocks.push_back({dec.gammas[m], r * pad_dim});
    offset += r * pad_dim;
  }
  spans.P.bottomRows(h) = R;
  spans.Q.bottomRows(h) = R * X.adjoint();
  return spans;
}

int minimal_pad_dim(const LurkingSpans&) {
  // In finite dimensions the spans have equal rank, so their complements in
  // the common space E (+) H always match.
  return 1;
}

Colligation build_colligation(const CMatrix& T, const CMatrix& X, const CMatrix& R, const AtomicDecomposition& dec,
                              int pad_dim, const AnnulusParams& params, std::shared_ptr<const AtomFunction> phi) {
  phi = ensure_phi(std::move(phi), params);
  const LurkingSpans spans = lurking_spans(T, X, R, dec, pad_dim, params, phi);
  const Eigen::Index total = spans.P.rows();
  const Eigen::Index h = R.rows();
  const Eigen::Index d = total - h;

  // Orthogonal Procrustes: the unitary U^* minimising |U^* P - Q|. Singular
  // directions of Q P^* beyond the rank of P pair the two complements.
  Eigen::BDCSVD<CMatrix> svd(spans.Q * spans.P.adjoint(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix u = (svd.matrixU() * svd.matrixV().adjoint()).adjoint();

  Colligation col;
  col.blocks = spans.blocks;
  col.pad_dim = pad_dim;
  col.phi = phi;
  col.A = u.topLeftCorner(d, d);
  col.B = u.topRightCorner(d, h);
  col.C = u.bottomLeftCorner(h, d);
  col.D = u.bottomRightCorner(h, h);
  return col;
}

std::pair<double, double> system_residuals(const Colligation& col, const LurkingSpans& spans) {
  const Eigen::Index d = col.state_dim();
  const Eigen::Index h = col.io_dim();
  const CMatrix wy = spans.P.topRows(d);
  const CMatrix r = spans.P.bottomRows(h);
  const CMatrix wi = spans.Q.topRows(d);
  const CMatrix rx = spans.Q.bottomRows(h);
  return {spectral_norm(col.A.adjoint() * wy + col.C.adjoint() * r - wi),
          spectral_norm(col.B.adjoint() * wy + col.D.adjoint() * r - rx)};
}

CVector rho_diagonal(const Colligation& col, cd z) {
  CVector diag(col.state_dim());
  Eigen::Index offset = 0;
  for (const auto& block : col.blocks) {
    const TestFunction tf(block.gamma, col.phi);
    diag.segment(offset, block.multiplicity).setConstant(tf(z));
    offset += block.multiplicity;
  }
  if (offset != col.state_dim()) fail(ErrorKind::dimension, "block structure does not cover the state space");
  return diag;
}

CMatrix rho_of_E(const Colligation& col, cd z) {
  if (!col.phi->params().in_closed(z)) fail(ErrorKind::domain, "rho(E(z)) needs z in the closed annulus");
  return rho_diagonal(col, z).asDiagonal();
}

CMatrix transfer_eval(const Colligation& col, cd z, double r) {
  const CVector zd = rho_diagonal(col, z);
  return col.D + col.C * resolvent_solve(col, zd, r, r * zd.asDiagonal() * col.B);
}

double resolvent_condition(const Colligation& col, cd z, double r) {
  const CVector zd = rho_diagonal(col, z);
  const Eigen::Index d = col.state_dim();
  const RVector s = singular_values(CMatrix::Identity(d, d) - r * zd.asDiagonal() * col.A);
  return s(0) / s(s.size() - 1);
}

CMatrix h_r_eval(const Colligation& col, cd z, double r) {
  const CVector zd = rho_diagonal(col, z);
  // C (I - r Z A)^{-1} = ((I - r Z A)^{-*} C^*)^*
  const Eigen::Index d = col.state_dim();
  const CMatrix m = CMatrix::Identity(d, d) - r * zd.asDiagonal() * col.A;
  Eigen::PartialPivLU<CMatrix> lu(m.adjoint());
  if (!(lu.rcond() > 1e-14)) fail(ErrorKind::singularity, "I - r rho(E(z)) A is numerically singular");
  return lu.solve(col.C.adjoint()).adjoint();
}

CircleQuadrature spectral_contour(const CMatrix& T, const AnnulusParams& params, int max_index) {
  const auto [lo, hi] = spectral_radii(T);
  const double q = params.q();
  CircleQuadrature quad;
  quad.radius_pos = (1.0 + hi) / 2.0;
  quad.radius_neg = (q + lo) / 2.0;
  const double need_pos = std::log(1e-15) / std::log(quad.radius_pos);
  const double need_neg = std::log(1e-15) / std::log(q / quad.radius_neg);
  const double nodes = std::max({4.0 * max_index, need_pos, need_neg, 64.0});
  quad.nodes = static_cast<int>(std::min(std::ceil(nodes), 16384.0));
  return quad;
}

std::vector<CMatrix> transfer_coefficients(const Colligation& col, int max_index, const CircleQuadrature& quad) {
  return laurent_coefficients([&](cd z) { return transfer_eval(col, z); }, max_index, quad);
}

CommutantReport commutant_residual(const Colligation& col, const CMatrix& T, const CMatrix& X,
                                   const LiftingData& lifting, const AnnulusParams& params) {
  const int trunc = lifting.trunc;
  // entries of M_W on |n|, |k| <= N involve coefficients up to index 2N
  const int half = 2 * trunc;
  if (trunc < 1) fail(ErrorKind::truncation, "lifting truncation must be positive");
  if (col.io_dim() != lifting.h()) fail(ErrorKind::dimension, "transfer function and lifting dimensions differ");
  const auto coeffs = transfer_coefficients(col, half, spectral_contour(T, params, half));
  const auto [lo, hi] = spectral_radii(T);
  CommutantReport report;
  for (int j = half - 1; j <= half; ++j) {
    report.tail = std::max(report.tail, coeffs[static_cast<std::size_t>(half + j)].norm() * std::pow(hi, j));
    report.tail = std::max(report.tail, coeffs[static_cast<std::size_t>(half - j)].norm() * std::pow(lo, -j));
  }
  if (report.tail > 1e-8) {
    std::ostringstream os;
    os << "transfer-function Laurent tail " << report.tail << " exceeds 1e-8 at cutoff " << half;
    fail(ErrorKind::truncation, os.str());
  }
  const CMatrix mw = multiplication_matrix(coeffs, half, trunc, params.q());
  const CMatrix vstar = lifting.V.adjoint();
  report.residual = spectral_norm(X * vstar - vstar * mw);
  return report;
}

CMatrix h_r_matrix(const Colligation& col, double r, int trunc, const CircleQuadrature& quad) {
  if (!(r > 0.0 && r < 1.0)) fail(ErrorKind::domain, "h_r_matrix needs 0 < r < 1");
  const auto coeffs = laurent_coefficients([&](cd z) { return h_r_eval(col, z, r); }, trunc, quad);
  const Eigen::Index h = col.io_dim();
  const Eigen::Index d = col.state_dim();
  const double q = col.phi->params().q();
  CMatrix out(d, (2 * trunc + 1) * h);
  for (int j = -trunc; j <= trunc; ++j)
    out.middleCols(block_index(j, trunc, h, 0), h) =
        coeffs[static_cast<std::size_t>(j + trunc)].adjoint() * std::exp(0.5 * log_basis_weight(q, j));
  return out;
}

double estimate_kappa(const Colligation& col, double r, const std::vector<cd>& points, const AnnulusParams& params) {
  const Eigen::Index h = col.io_dim();
  const auto n = static_cast<Eigen::Index>(points.size());
  const CMatrix k = gram_matrix(params, points);
  CMatrix G(n * h, col.state_dim());
  for (Eigen::Index i = 0; i < n; ++i) G.middleRows(i * h, h) = h_r_eval(col, points[static_cast<std::size_t>(i)], r);
  const CMatrix big = kron_identity(k, h);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(big);
  const double top = es.eigenvalues().maxCoeff();
  RVector root(big.rows());
  for (Eigen::Index i = 0; i < root.size(); ++i)
    root(i) = es.eigenvalues()(i) > 1e-13 * top ? 1.0 / std::sqrt(es.eigenvalues()(i)) : 0.0;
  const CMatrix half = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
  const double s = spectral_norm(half * G);
  return s * s;
}

AtomicDecomposition extract_decomposition(const Colligation& col, const LiftingData& lifting, double r,
                                          const CMatrix& T, const AnnulusParams& params) {
  const CMatrix hstar = h_r_matrix(col, r, lifting.trunc, spectral_contour(T, params, lifting.trunc));
  const CMatrix g = hstar * lifting.V;
  AtomicDecomposition dec;
  Eigen::Index offset = 0;
  for (const auto& block : col.blocks) {
    const CMatrix gm = g.middleRows(offset, block.multiplicity);
    dec.gammas.push_back(block.gamma);
    dec.atoms.push_back(hermitian_part(gm.adjoint() * gm));
    offset += block.multiplicity;
  }
  return dec;
}

double key_mu_residual(const CMatrix& T, const CMatrix& X, const AtomicDecomposition& dec,
                       const AnnulusParams& params, std::shared_ptr<const AtomFunction> phi) {
  const CMatrix I = CMatrix::Identity(T.rows(), T.cols());
  const CMatrix target = inv_k_hereditary(T, I - X * X.adjoint(), params);
  return spectral_norm(target - dec.total() + riemann_sum(T, dec, Weighting::mu, params, std::move(phi)));
}

CMatrix random_unitary(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  CMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = cd(normal(rng), normal(rng));
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const cd d = r(i, i);
    if (std::abs(d) > 0.0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

Colligation random_colligation(const std::vector<cd>& gammas, Eigen::Index multiplicity, Eigen::Index io_dim,
                               std::uint64_t seed, std::shared_ptr<const AtomFunction> phi) {
  if (!phi) fail(ErrorKind::construction, "random colligation needs an atom function");
  if (multiplicity < 1 || io_dim < 1) fail(ErrorKind::dimension, "multiplicity and io dimension must be positive");
  Colligation col;
  col.phi = std::move(phi);
  for (cd g : gammas) col.blocks.push_back({g, multiplicity});
  const Eigen::Index d = multiplicity * static_cast<Eigen::Index>(gammas.size());
  const CMatrix u = random_unitary(d + io_dim, seed);
  col.A = u.topLeftCorner(d, d);
  col.B = u.topRightCorner(d, io_dim);
  col.C = u.bottomLeftCorner(io_dim, d);
  col.D = u.bottomRightCorner(io_dim, io_dim);
  return col;
}

}  // namespace annulus
