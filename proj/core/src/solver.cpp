#include "annulus/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "annulus/errors.hpp"
#include "annulus/parallel.hpp"

namespace annulus {

std::string_view to_string(FeasibilityStatus status) noexcept {
  switch (status) {
    case FeasibilityStatus::feasible:
      return "feasible";
    case FeasibilityStatus::infeasible:
      return "infeasible";
    case FeasibilityStatus::stalled:
      return "stalled";
  }
  return "unknown";
}

namespace {

// Orthonormal basis of Hermitian n x n matrices under Re tr(A^* B).
class HermitianBasis {
 public:
  explicit HermitianBasis(Eigen::Index n) : n_(n) {}

  Eigen::Index size() const { return n_ * n_; }

  RVector vec(const CMatrix& h) const {
    RVector v(size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n_; ++i) v(k++) = h(i, i).real();
    const double r2 = std::sqrt(2.0);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index j = i + 1; j < n_; ++j) {
        // coordinates of the Hermitian part of h
        const cd s = (h(i, j) + std::conj(h(j, i))) / 2.0;
        v(k++) = r2 * s.real();
        v(k++) = -r2 * s.imag();
      }
    return v;
  }

  CMatrix mat(const RVector& v) const {
    CMatrix h = CMatrix::Zero(n_, n_);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n_; ++i) h(i, i) = v(k++);
    const double r2 = std::sqrt(2.0);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index j = i + 1; j < n_; ++j) {
        const double re = v(k++) / r2;
        const double im = -v(k++) / r2;
        h(i, j) = cd(re, im);
        h(j, i) = cd(re, -im);
      }
    return h;
  }

  CMatrix element(Eigen::Index k) const {
    RVector e = RVector::Zero(size());
    e(k) = 1.0;
    return mat(e);
  }

 private:
  Eigen::Index n_;
};

CMatrix psd_projection(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  const RVector clipped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
}

// Largest t in (0, 1] with a + t d PSD, scaled by the usual 0.95 factor.
double max_step(const CMatrix& a, const CMatrix& d) {
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) return 0.0;
  const auto lower = llt.matrixL();
  const CMatrix left = lower.solve(d);
  const CMatrix scaled = lower.solve(left.adjoint()).adjoint();
  const double e = min_eigenvalue(scaled);
  if (e >= 0.0) return 1.0;
  return std::min(1.0, -0.95 / e);
}

struct VectorSystem {
  HermitianBasis basis;
  std::vector<RMatrix> blocks;
  RVector target;
  RMatrix gram_pinv;
};

VectorSystem vectorize(const AtomicSystem& system) {
  VectorSystem vs{HermitianBasis(system.dim()), {}, {}, {}};
  const Eigen::Index p = vs.basis.size();
  std::vector<CMatrix> elements(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) elements[static_cast<std::size_t>(k)] = vs.basis.element(k);
  vs.blocks.resize(system.atoms());
  parallel_for(system.atoms(), [&](std::size_t m) {
    RMatrix a(p, p);
    for (Eigen::Index k = 0; k < p; ++k) a.col(k) = vs.basis.vec(system.apply_atom(m, elements[static_cast<std::size_t>(k)]));
    vs.blocks[m] = std::move(a);
  });
  vs.target = vs.basis.vec(system.target);
  RMatrix gram = RMatrix::Zero(p, p);
  for (const auto& a : vs.blocks) gram += a * a.transpose();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
  const double top = std::max(es.eigenvalues().maxCoeff(), 1e-300);
  RVector inv(p);
  for (Eigen::Index i = 0; i < p; ++i) inv(i) = es.eigenvalues()(i) > 1e-13 * top ? 1.0 / es.eigenvalues()(i) : 0.0;
  vs.gram_pinv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  return vs;
}

RVector apply_vec(const VectorSystem& vs, const std::vector<CMatrix>& atoms) {
  RVector out = RVector::Zero(vs.basis.size());
  for (std::size_t m = 0; m < atoms.size(); ++m) out += vs.blocks[m] * vs.basis.vec(atoms[m]);
  return out;
}

struct Candidate {
  std::vector<CMatrix> atoms;
  double residual = std::numeric_limits<double>::infinity();
};

std::optional<CMatrix> try_certificate(const AtomicSystem& system, const CMatrix& h, double* violation) {
  const double v = certificate_violation(system, h);
  if (violation) *violation = v;
  if (!(v <= 1e-8)) return std::nullopt;
  const double s = (h.adjoint() * system.target).trace().real();
  return CMatrix(h / s);
}

// Primal-dual interior-point refinement (HKM direction) of
//   min sum tr(X_m)  s.t.  sum_m A_m vec(X_m) = b,  X_m PSD.
struct InteriorResult {
  Candidate best;
  int iterations = 0;
  std::optional<CMatrix> certificate;
  double certificate_violation = std::numeric_limits<double>::infinity();
};

InteriorResult interior_point(const AtomicSystem& system, const VectorSystem& vs, const SolverOptions& options) {
  const std::size_t count = system.atoms();
  const Eigen::Index n = system.dim();
  const Eigen::Index p = vs.basis.size();
  const double bscale = std::max(1.0, vs.target.norm());
  const CMatrix I = CMatrix::Identity(n, n);
  std::vector<CMatrix> X(count, I), Z(count, I), Zinv(count), Rd(count);
  RVector y = RVector::Zero(p);
  std::vector<CMatrix> elements(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) elements[static_cast<std::size_t>(k)] = vs.basis.element(k);

  InteriorResult out;
  for (int it = 0; it < options.interior_max_iter; ++it) {
    out.iterations = it + 1;
    const RVector rp = vs.target - apply_vec(vs, X);
    const double rel = rp.norm() / bscale;
    if (rel < out.best.residual) out.best = Candidate{X, rel};
    if (rel < options.tol * 1e-2) break;
    const double dual = vs.target.dot(y);
    if (dual > 1e6 * bscale) {
      double viol = 0.0;
      auto cert = try_certificate(system, vs.basis.mat(y), &viol);
      out.certificate_violation = std::min(out.certificate_violation, viol);
      if (cert) {
        out.certificate = cert;
        break;
      }
    }
    double mu = 0.0;
    bool ok = true;
    for (std::size_t m = 0; m < count; ++m) {
      Rd[m] = I - Z[m] - vs.basis.mat(vs.blocks[m].transpose() * y);
      mu += (X[m] * Z[m]).trace().real();
      Eigen::LLT<CMatrix> llt(Z[m]);
      if (llt.info() != Eigen::Success) ok = false;
      Zinv[m] = llt.solve(I);
    }
    if (!ok) break;
    mu /= static_cast<double>(count * static_cast<std::size_t>(n));

    RMatrix M = RMatrix::Zero(p, p);
    std::vector<RMatrix> partial(count);
    parallel_for(count, [&](std::size_t m) {
      RMatrix K(p, p);
      for (Eigen::Index k = 0; k < p; ++k) K.col(k) = vs.basis.vec(X[m] * elements[static_cast<std::size_t>(k)] * Zinv[m]);
      partial[m] = vs.blocks[m] * K * vs.blocks[m].transpose();
    });
    for (const auto& part : partial) M += part;
    M = (M + M.transpose()) / 2.0;
    // M is PSD but loses conditioning as mu -> 0; solve through its
    // eigendecomposition with tiny eigenvalues dropped.
    Eigen::SelfAdjointEigenSolver<RMatrix> schur(M);
    const double schur_top = std::max(schur.eigenvalues().maxCoeff(), 1e-300);
    RVector schur_inv(p);
    for (Eigen::Index i = 0; i < p; ++i)
      schur_inv(i) = schur.eigenvalues()(i) > 1e-15 * schur_top ? 1.0 / schur.eigenvalues()(i) : 0.0;
    auto solve_schur = [&](const RVector& r) -> RVector {
      return schur.eigenvectors() * (schur_inv.asDiagonal() * (schur.eigenvectors().transpose() * r));
    };

    auto direction = [&](double sigma, std::vector<CMatrix>& dX, RVector& dy, std::vector<CMatrix>& dZ) {
      RVector rhs = rp;
      for (std::size_t m = 0; m < count; ++m) {
        const CMatrix G = sigma * mu * Zinv[m] - X[m] - X[m] * Rd[m] * Zinv[m];
        rhs -= vs.blocks[m] * vs.basis.vec(G);
      }
      dy = solve_schur(rhs);
      dX.resize(count);
      dZ.resize(count);
      for (std::size_t m = 0; m < count; ++m) {
        dZ[m] = Rd[m] - vs.basis.mat(vs.blocks[m].transpose() * dy);
        dX[m] = hermitian_part(sigma * mu * Zinv[m] - X[m] - X[m] * dZ[m] * Zinv[m]);
      }
    };
    auto steps = [&](const std::vector<CMatrix>& dX, const std::vector<CMatrix>& dZ) {
      double ap = 1.0, ad = 1.0;
      for (std::size_t m = 0; m < count; ++m) {
        ap = std::min(ap, max_step(X[m], dX[m]));
        ad = std::min(ad, max_step(Z[m], dZ[m]));
      }
      return std::pair{ap, ad};
    };

    std::vector<CMatrix> dX, dZ;
    RVector dy;
    direction(0.0, dX, dy, dZ);
    auto [ap, ad] = steps(dX, dZ);
    double mu_aff = 0.0;
    for (std::size_t m = 0; m < count; ++m) mu_aff += ((X[m] + ap * dX[m]) * (Z[m] + ad * dZ[m])).trace().real();
    mu_aff /= static_cast<double>(count * static_cast<std::size_t>(n));
    const double sigma = std::pow(std::clamp(mu_aff / std::max(mu, 1e-300), 0.0, 1.0), 3.0);
    direction(sigma, dX, dy, dZ);
    std::tie(ap, ad) = steps(dX, dZ);
    if (ap <= 0.0 && ad <= 0.0) break;
    for (std::size_t m = 0; m < count; ++m) {
      X[m] = hermitian_part(X[m] + ap * dX[m]);
      Z[m] = hermitian_part(Z[m] + ad * dZ[m]);
    }
    y += ad * dy;
  }
  const RVector rp = vs.target - apply_vec(vs, X);
  if (rp.norm() / bscale < out.best.residual) out.best = Candidate{X, rp.norm() / bscale};
  return out;
}

}  // namespace

double certificate_violation(const AtomicSystem& system, const CMatrix& H) {
  const double s = (H.adjoint() * system.target).trace().real();
  if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
  const CMatrix h = hermitian_part(H) / s;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < system.atoms(); ++m) worst = std::max(worst, max_eigenvalue(system.adjoint_atom(m, h)));
  return worst;
}

SolveResult solve_atoms(const AtomicSystem& system, const SolverOptions& options) {
  if (system.atoms() == 0) fail(ErrorKind::domain, "system has no atoms");
  if (!(options.tol > 0.0)) fail(ErrorKind::domain, "solver tolerance must be positive");
  const std::size_t count = system.atoms();
  const Eigen::Index n = system.dim();
  const VectorSystem vs = vectorize(system);
  const double bscale = std::max(1.0, vs.target.norm());

  SolveResult result;
  result.decomposition.gammas = system.gammas;
  auto& report = result.report;
  report.atoms = count;
  report.attempted_sizes.push_back(count);

  // Seeded start: small random PSD atoms.
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  std::vector<CMatrix> z(count), corr(count, CMatrix::Zero(n, n));
  const double start_scale = 1e-3 * bscale / static_cast<double>(count * static_cast<std::size_t>(n));
  for (auto& a : z) {
    CMatrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = cd(normal(rng), normal(rng));
    a = start_scale * g * g.adjoint();
  }

  Candidate best{z, system.residual(z)};
  double checkpoint = best.residual;
  double best_violation = std::numeric_limits<double>::infinity();
  const int window = 100;
  for (int it = 1; it <= options.max_iter; ++it) {
    report.iterations = it;
    // affine projection
    const RVector gap = vs.target - apply_vec(vs, z);
    const RVector u = vs.gram_pinv * gap;
    std::vector<CMatrix> yv(count);
    for (std::size_t m = 0; m < count; ++m) yv[m] = z[m] + vs.basis.mat(vs.blocks[m].transpose() * u);
    // cone projection with Dykstra correction
    for (std::size_t m = 0; m < count; ++m) {
      const CMatrix shifted = yv[m] + corr[m];
      z[m] = psd_projection(shifted);
      corr[m] = shifted - z[m];
    }
    if (it % window != 0) continue;
    const double res = (vs.target - apply_vec(vs, z)).norm() / bscale;
    if (res < best.residual) best = Candidate{z, res};
    if (res < options.tol) break;
    // infeasibility: dual vector from the gap between the affine set and the cone
    double viol = 0.0;
    auto cert = try_certificate(system, vs.basis.mat(vs.gram_pinv * (vs.target - apply_vec(vs, z))), &viol);
    best_violation = std::min(best_violation, viol);
    if (cert) {
      report.status = FeasibilityStatus::infeasible;
      report.certificate = cert;
      report.certificate_violation = viol;
      report.residual = best.residual;
      result.decomposition.atoms = best.atoms;
      return result;
    }
    // plateau: hand over to the interior-point refinement
    if (options.interior_point && it >= 10 * window && res > 0.5 * checkpoint) break;
    if (it % (10 * window) == 0) checkpoint = res;
  }

  if (best.residual >= options.tol && options.interior_point) {
    InteriorResult ipm = interior_point(system, vs, options);
    report.interior_iterations = ipm.iterations;
    if (ipm.best.residual < best.residual) best = ipm.best;
    if (ipm.certificate && best.residual >= options.tol) {
      report.status = FeasibilityStatus::infeasible;
      report.certificate = ipm.certificate;
      report.certificate_violation = ipm.certificate_violation;
      report.residual = best.residual;
      result.decomposition.atoms = best.atoms;
      return result;
    }
    best_violation = std::min(best_violation, ipm.certificate_violation);
  }

  for (auto& a : best.atoms) a = hermitian_part(a);
  best.residual = system.residual(best.atoms);
  report.residual = best.residual;
  report.status = best.residual < options.tol ? FeasibilityStatus::feasible : FeasibilityStatus::stalled;
  if (report.status == FeasibilityStatus::stalled) report.certificate_violation = best_violation;
  result.decomposition.atoms = std::move(best.atoms);
  return result;
}

SolveResult solve_adaptive(const std::function<AtomicSystem(int)>& builder, int initial_atoms,
                           const SolverOptions& options) {
  if (initial_atoms < 1) fail(ErrorKind::domain, "initial atom count must be positive");
  std::vector<std::size_t> sizes;
  int atoms = initial_atoms;
  while (true) {
    SolveResult result = solve_atoms(builder(atoms), options);
    sizes.push_back(static_cast<std::size_t>(atoms));
    result.report.attempted_sizes = sizes;
    if (result.report.status != FeasibilityStatus::stalled || 2 * atoms > options.max_atoms) return result;
    atoms *= 2;
  }
}

}  // namespace annulus
