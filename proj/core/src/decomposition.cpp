#include "annulus/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "annulus/errors.hpp"
#include "annulus/parallel.hpp"

namespace annulus {

namespace {

std::shared_ptr<const AtomFunction> ensure_phi(std::shared_ptr<const AtomFunction> phi, const AnnulusParams& params) {
  if (phi && phi->params().q() == params.q()) return phi;
  return build_phi(params);
}

// Gauss-Legendre nodes and weights on [-1, 1], 16 points.
constexpr double kGaussX[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
                               0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr double kGaussW[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
                               0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

double arc_integral(const std::function<double(double)>& f, double a, double b) {
  const double mid = (a + b) / 2.0;
  const double half = (b - a) / 2.0;
  double acc = 0.0;
  for (int k = 0; k < 8; ++k) acc += kGaussW[k] * (f(mid - half * kGaussX[k]) + f(mid + half * kGaussX[k]));
  return acc * half;
}

}  // namespace

CMatrix AtomicDecomposition::total() const {
  if (atoms.empty()) return CMatrix();
  CMatrix out = CMatrix::Zero(atoms.front().rows(), atoms.front().cols());
  for (const auto& a : atoms) out += a;
  return out;
}

std::vector<cd> sample_test_set(int count) {
  if (count < 1) fail(ErrorKind::domain, "test set needs at least one atom");
  std::vector<cd> out(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) out[static_cast<std::size_t>(m)] = std::polar(1.0, 2.0 * kPi * m / count);
  out[0] = 1.0;
  return out;
}

CMatrix AtomicSystem::apply_atom(std::size_t m, const CMatrix& g) const {
  const CMatrix& s = maps[m];
  if (form == Form::congruence) return g - s * g * s.adjoint();
  return s.cwiseProduct(g);
}

CMatrix AtomicSystem::adjoint_atom(std::size_t m, const CMatrix& h) const {
  const CMatrix& s = maps[m];
  if (form == Form::congruence) return h - s.adjoint() * h * s;
  return s.conjugate().cwiseProduct(h);
}

CMatrix AtomicSystem::apply(const std::vector<CMatrix>& atoms_in) const {
  if (atoms_in.size() != maps.size()) fail(ErrorKind::dimension, "atom count does not match the system");
  CMatrix out = CMatrix::Zero(dim(), dim());
  for (std::size_t m = 0; m < maps.size(); ++m) out += apply_atom(m, atoms_in[m]);
  return out;
}

double AtomicSystem::residual(const std::vector<CMatrix>& atoms_in) const {
  return (apply(atoms_in) - target).norm() / std::max(1.0, target.norm());
}

std::vector<CMatrix> test_operators(const OperatorCalculus& calculus, const std::vector<cd>& gammas) {
  std::vector<CMatrix> out(gammas.size());
  parallel_for(gammas.size(), [&](std::size_t m) {
    out[m] = calculus.test_function(TestFunction(gammas[m], calculus.atom_ptr()));
  });
  return out;
}

AtomicSystem assemble_system(const CMatrix& T, const CMatrix& X, const std::vector<cd>& gammas,
                             const AnnulusParams& params, std::shared_ptr<const AtomFunction> phi) {
  if (T.rows() != X.rows() || T.cols() != X.cols()) fail(ErrorKind::dimension, "T and X sizes differ");
  phi = ensure_phi(std::move(phi), params);
  AtomicSystem sys;
  sys.form = AtomicSystem::Form::congruence;
  sys.gammas = gammas;
  const CMatrix I = CMatrix::Identity(T.rows(), T.cols());
  sys.target = hermitian_part(inv_k_hereditary(T, I - X * X.adjoint(), params));
  sys.maps = test_operators(OperatorCalculus(T, phi), gammas);
  return sys;
}

AtomicSystem pick_scalar_system(const std::vector<cd>& nodes, const std::vector<cd>& targets,
                                const std::vector<cd>& gammas, const AnnulusParams& params,
                                std::shared_ptr<const AtomFunction> phi) {
  if (nodes.size() != targets.size()) fail(ErrorKind::dimension, "node and target counts differ");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!params.in_open(nodes[i])) fail(ErrorKind::domain, "Pick node outside the open annulus");
    for (std::size_t j = 0; j < i; ++j)
      if (nodes[i] == nodes[j]) fail(ErrorKind::domain, "Pick nodes must be distinct");
  }
  phi = ensure_phi(std::move(phi), params);
  const auto n = static_cast<Eigen::Index>(nodes.size());
  AtomicSystem sys;
  sys.form = AtomicSystem::Form::hadamard;
  sys.gammas = gammas;
  CVector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = targets[static_cast<std::size_t>(i)];
  const CMatrix ones = CMatrix::Ones(n, n);
  sys.target = ones - w * w.adjoint();
  sys.maps.resize(gammas.size());
  for (std::size_t m = 0; m < gammas.size(); ++m) {
    const TestFunction tf(gammas[m], phi);
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = tf(nodes[static_cast<std::size_t>(i)]);
    sys.maps[m] = ones - v * v.adjoint();
  }
  return sys;
}

std::vector<CMatrix> lambda_atoms(const CMatrix& T, const AtomicDecomposition& dec, const AnnulusParams& params) {
  std::vector<CMatrix> out(dec.atoms.size());
  parallel_for(out.size(), [&](std::size_t m) { out[m] = hermitian_part(hereditary_k(T, dec.atoms[m], params)); });
  return out;
}

CMatrix riemann_sum(const std::vector<CMatrix>& operators, const std::vector<CMatrix>& weights) {
  if (operators.size() != weights.size()) fail(ErrorKind::dimension, "operator and weight counts differ");
  if (operators.empty()) return CMatrix();
  CMatrix out = CMatrix::Zero(operators.front().rows(), operators.front().rows());
  for (std::size_t m = 0; m < operators.size(); ++m) out += operators[m] * weights[m] * operators[m].adjoint();
  return out;
}

CMatrix riemann_sum(const CMatrix& T, const AtomicDecomposition& dec, Weighting which, const AnnulusParams& params,
                    std::shared_ptr<const AtomFunction> phi) {
  phi = ensure_phi(std::move(phi), params);
  const auto ops = test_operators(OperatorCalculus(T, phi), dec.gammas);
  if (which == Weighting::mu) return riemann_sum(ops, dec.atoms);
  return riemann_sum(ops, lambda_atoms(T, dec, params));
}

SchurReport check_schur_domination(const std::vector<CMatrix>& lambdas, const std::vector<CMatrix>& multipliers,
                                   double tol) {
  SchurReport report;
  for (std::size_t m = 0; m < lambdas.size(); ++m) {
    const double scale = std::max(spectral_norm(lambdas[m]), 1e-300);
    for (std::size_t s = 0; s < multipliers.size(); ++s) {
      const CMatrix& tp = multipliers[s];
      const double ev = min_eigenvalue(lambdas[m] - tp * lambdas[m] * tp.adjoint());
      ++report.checks;
      report.worst_relative = std::min(report.worst_relative, ev / scale);
      if (ev < -tol * scale) report.violations.push_back({m, s, ev});
    }
  }
  return report;
}

SchurReport check_schur_domination(const CMatrix& T, const AtomicDecomposition& dec,
                                   const std::vector<LaurentPolynomial>& samples, const AnnulusParams& params,
                                   std::shared_ptr<const AtomFunction> phi, double tol) {
  phi = ensure_phi(std::move(phi), params);
  OperatorCalculus calculus(T, phi);
  std::vector<CMatrix> ops;
  ops.reserve(samples.size());
  for (const auto& f : samples) {
    const int extent = std::max(std::abs(f.min_power), std::abs(f.max_power()));
    const auto coeffs = LaurentCoeffs::from_plain(f, params.q(), std::max(extent, 1));
    const double norm = spectral_norm(multiplication_matrix(coeffs, std::max(64, 2 * extent)));
    if (norm > 1.0 + 1e-8) {
      std::ostringstream os;
      os << "sampled multiplier has truncated norm " << norm << " above 1";
      fail(ErrorKind::domain, os.str());
    }
    ops.push_back(calculus.evaluate(f));
  }
  return check_schur_domination(lambda_atoms(T, dec, params), ops, tol);
}

Eigen::Index FiniteL2Model::total_dim() const {
  Eigen::Index s = 0;
  for (auto d : block_dims) s += d;
  return s;
}

Eigen::Index FiniteL2Model::lambda_dim() const {
  Eigen::Index s = 0;
  for (const auto& g : lambda_factors) s += g.rows();
  return s;
}

namespace {

// Full-row-rank F with F^* F = A (A Hermitian PSD up to tolerance).
CMatrix psd_factor(const CMatrix& a, const char* what, std::size_t index) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
  const RVector& ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  if (ev(0) < -1e-10 * std::max(top, 1e-300) && ev(0) < -1e-14) {
    std::ostringstream os;
    os << what << " " << index << " has eigenvalue " << ev(0);
    fail(ErrorKind::factorization, os.str());
  }
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i)
    if (ev(i) > 1e-12 * top && ev(i) > 0.0) kept.push_back(i);
  CMatrix f(static_cast<Eigen::Index>(kept.size()), a.cols());
  for (std::size_t r = 0; r < kept.size(); ++r)
    f.row(static_cast<Eigen::Index>(r)) = std::sqrt(ev(kept[r])) * es.eigenvectors().col(kept[r]).adjoint();
  return f;
}

}  // namespace

FiniteL2Model build_l2_model(const CMatrix& T, const AtomicDecomposition& dec, const AnnulusParams& params) {
  FiniteL2Model model;
  model.lambda_atoms = lambda_atoms(T, dec, params);
  for (std::size_t m = 0; m < dec.atoms.size(); ++m) {
    model.factors.push_back(psd_factor(dec.atoms[m], "atom", m));
    model.block_dims.push_back(model.factors.back().rows());
    model.lambda_factors.push_back(psd_factor(model.lambda_atoms[m], "lambda atom", m));
  }
  return model;
}

ModelOperators build_model_operators(const CMatrix& T, const AtomicDecomposition& dec, const FiniteL2Model& model,
                                     const AnnulusParams& params, std::shared_ptr<const AtomFunction> phi) {
  phi = ensure_phi(std::move(phi), params);
  ModelOperators ops;
  ops.operators = test_operators(OperatorCalculus(T, phi), dec.gammas);
  const Eigen::Index n = T.rows();
  const Eigen::Index lam = model.lambda_dim();
  const Eigen::Index mu = model.total_dim();
  ops.Y = CMatrix::Zero(lam, n);
  ops.iota = CMatrix::Zero(lam, n);
  ops.Phi_star = CMatrix::Zero(mu, lam);
  Eigen::Index row_l = 0;
  Eigen::Index row_m = 0;
  for (std::size_t m = 0; m < dec.gammas.size(); ++m) {
    const CMatrix& g = model.lambda_factors[m];
    const CMatrix& f = model.factors[m];
    ops.Y.middleRows(row_l, g.rows()) = g * ops.operators[m].adjoint();
    ops.iota.middleRows(row_l, g.rows()) = g;
    if (g.rows() > 0 && f.rows() > 0)
      ops.Phi_star.block(row_m, row_l, f.rows(), g.rows()) =
          f * g.completeOrthogonalDecomposition().pseudoInverse();
    row_l += g.rows();
    row_m += f.rows();
  }
  return ops;
}

double lurking_residual(const CMatrix& R, const CMatrix& X, const ModelOperators& ops) {
  const CMatrix RR = R.adjoint() * R;
  const CMatrix PY = ops.Phi_star * ops.Y;
  const CMatrix Pi = ops.Phi_star * ops.iota;
  return spectral_norm(RR + PY.adjoint() * PY - X * RR * X.adjoint() - Pi.adjoint() * Pi);
}

RefinementReport refinement_convergence(const std::function<double(double)>& density, const CMatrix& T,
                                        const std::vector<int>& depths, const AnnulusParams& params,
                                        std::shared_ptr<const AtomFunction> phi, double floor) {
  phi = ensure_phi(std::move(phi), params);
  OperatorCalculus calculus(T, phi);
  auto op_at = [&](double theta) { return calculus.test_function(TestFunction(std::polar(1.0, theta), phi)); };
  const Eigen::Index n = T.rows();

  constexpr int kOracle = 4096;
  std::vector<CMatrix> oracle_terms(kOracle);
  parallel_for(kOracle, [&](std::size_t k) {
    const double theta = 2.0 * kPi * static_cast<double>(k) / kOracle;
    const double w = density(theta);
    if (w == 0.0) {
      oracle_terms[k] = CMatrix::Zero(n, n);
      return;
    }
    const CMatrix s = op_at(theta);
    oracle_terms[k] = (w / kOracle) * s * s.adjoint();
  });
  CMatrix oracle = CMatrix::Zero(n, n);
  for (const auto& t : oracle_terms) oracle += t;

  RefinementReport report;
  report.depths = depths;
  std::vector<CMatrix> sums;
  for (int depth : depths) {
    if (depth < 0 || depth > 20) fail(ErrorKind::domain, "refinement depth outside [0, 20]");
    const int arcs = 1 << depth;
    const double width = 2.0 * kPi / arcs;
    std::vector<CMatrix> terms(static_cast<std::size_t>(arcs));
    parallel_for(terms.size(), [&](std::size_t j) {
      const double a = width * static_cast<double>(j);
      const double mass = arc_integral(density, a, a + width) / (2.0 * kPi);
      if (mass == 0.0) {
        terms[j] = CMatrix::Zero(n, n);
        return;
      }
      const CMatrix s = op_at(a + width / 2.0);
      terms[j] = mass * s * s.adjoint();
    });
    CMatrix sum = CMatrix::Zero(n, n);
    for (const auto& t : terms) sum += t;
    report.oracle_errors.push_back(spectral_norm(sum - oracle));
    if (!sums.empty()) report.differences.push_back(spectral_norm(sum - sums.back()));
    sums.push_back(std::move(sum));
  }
  report.final_error = report.oracle_errors.empty() ? 0.0 : report.oracle_errors.back();
  report.monotone = true;
  for (std::size_t i = 1; i < report.differences.size(); ++i)
    if (report.differences[i] > report.differences[i - 1] && report.differences[i] > floor) report.monotone = false;
  return report;
}

}  // namespace annulus
