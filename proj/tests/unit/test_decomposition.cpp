#include <gtest/gtest.h>

#include <random>

#include "annulus/errors.hpp"
#include "fixtures.hpp"

namespace annulus {
namespace {

using fixtures::params;
using fixtures::phi;

struct Solved {
  PickModel model;
  AtomicDecomposition dec;
};

Solved solve_fixture(const std::vector<cd>& nodes, const std::vector<cd>& targets, int atoms = 32) {
  Solved s{pick_model(nodes, targets, params()), {}};
  const SolveResult r = solve_atoms(assemble_system(s.model.pair.T, s.model.pair.X, sample_test_set(atoms), params(), phi()));
  EXPECT_EQ(r.report.status, FeasibilityStatus::feasible);
  s.dec = r.decomposition;
  return s;
}

TEST(SampleTestSet, EquispacedUnimodular) {
  EXPECT_EQ(sample_test_set(1), std::vector<cd>{cd(1.0)});
  const auto four = sample_test_set(4);
  const std::vector<cd> expected{1.0, cd(0.0, 1.0), -1.0, cd(0.0, -1.0)};
  for (int i = 0; i < 4; ++i) EXPECT_LT(std::abs(four[static_cast<std::size_t>(i)] - expected[static_cast<std::size_t>(i)]), 1e-15);
  for (cd g : sample_test_set(37)) EXPECT_NEAR(std::abs(g), 1.0, 1e-15);
}

TEST(AssembleSystem, TargetsForSpecialPairs) {
  const PickModel m = pick_model(fixtures::standard_nodes(), fixtures::psi_targets(), params());
  const CMatrix& t = m.pair.T;
  const CMatrix id = CMatrix::Identity(4, 4);
  const AtomicSystem same = assemble_system(t, t, sample_test_set(4), params(), phi());
  EXPECT_LT(spectral_norm(same.target - inv_k_hereditary(t, id - t * t.adjoint(), params())), 1e-12);
  const AtomicSystem zero = assemble_system(t, CMatrix::Zero(4, 4), sample_test_set(4), params(), phi());
  const CMatrix r = defect_factor(t, params());
  EXPECT_LT(spectral_norm(zero.target - r.adjoint() * r), 1e-10);
  EXPECT_GE(min_eigenvalue(zero.target), -1e-12);
}

TEST(AssembleSystem, HermitianPreservingAndLinear) {
  const PickModel m = pick_model(fixtures::standard_nodes(), fixtures::psi_targets(), params());
  const AtomicSystem sys = assemble_system(m.pair.T, m.pair.X, sample_test_set(6), params(), phi());
  std::mt19937_64 rng(21);
  std::vector<CMatrix> atoms;
  for (int i = 0; i < 6; ++i) {
    const CMatrix a = fixtures::random_matrix(rng, 4, 4);
    atoms.push_back(a * a.adjoint());
  }
  const CMatrix image = sys.apply(atoms);
  EXPECT_LT(spectral_norm(image - image.adjoint()), 1e-13 * spectral_norm(image));
  std::vector<CMatrix> scaled;
  for (const auto& a : atoms) scaled.push_back(2.5 * a);
  EXPECT_LT(spectral_norm(sys.apply(scaled) - 2.5 * image), 1e-12 * spectral_norm(image));
}

TEST(AssembleSystem, FormulationsAgreeOnFeasibility) {
  const auto& nodes = fixtures::standard_nodes();
  const auto gammas = sample_test_set(16);
  for (const auto& targets : {fixtures::transfer_targets(fixtures::random_transfer()), std::vector<cd>{0.3, 0.3, 1.2, 0.3}}) {
    const PickModel m = pick_model(nodes, targets, params());
    const SolveResult congruence = solve_atoms(assemble_system(m.pair.T, m.pair.X, gammas, params(), phi()));
    const SolveResult scalar = solve_atoms(pick_scalar_system(nodes, targets, gammas, params(), phi()));
    EXPECT_EQ(congruence.report.status, scalar.report.status);
  }
}

TEST(RiemannSum, SingleAtomAndOverloads) {
  const PickModel m = pick_model(fixtures::standard_nodes(), fixtures::psi_targets(), params());
  const cd gamma = std::polar(1.0, 0.9);
  const AtomicDecomposition dec{{gamma}, {CMatrix::Identity(4, 4)}};
  const CMatrix tpsi = OperatorCalculus(m.pair.T, phi()).test_function(make_test_function(gamma, phi()));
  EXPECT_LT(spectral_norm(riemann_sum(m.pair.T, dec, Weighting::mu, params(), phi()) - tpsi * tpsi.adjoint()), 1e-12);
  EXPECT_LT(spectral_norm(riemann_sum({tpsi}, {CMatrix::Identity(4, 4)}) - tpsi * tpsi.adjoint()), 1e-12);
}

TEST(RiemannSum, HereditaryIdentityAndDomination) {
  const Solved s = solve_fixture(fixtures::standard_nodes(), fixtures::transfer_targets(fixtures::random_transfer()));
  const CMatrix& t = s.model.pair.T;
  const CMatrix mu_sum = riemann_sum(t, s.dec, Weighting::mu, params(), phi());
  const CMatrix lambda_sum = riemann_sum(t, s.dec, Weighting::lambda, params(), phi());
  EXPECT_LT(spectral_norm(hereditary_k(t, mu_sum, params()) - lambda_sum), 1e-8);
  CMatrix lambda_total = CMatrix::Zero(4, 4);
  for (const CMatrix& l : lambda_atoms(t, s.dec, params())) lambda_total += l;
  EXPECT_GE(min_eigenvalue(lambda_total - lambda_sum), -1e-8);
  EXPECT_GE(min_eigenvalue(mu_sum), -1e-12);
}

TEST(LambdaAtoms, DominateHalfTheMuAtoms) {
  const Solved s = solve_fixture(fixtures::standard_nodes(), std::vector<cd>(4, cd(0.3)));
  const auto lambdas = lambda_atoms(s.model.pair.T, s.dec, params());
  // the zeta_0 term alone contributes Gamma_m / 2 and every other term is PSD
  for (std::size_t m = 0; m < lambdas.size(); ++m) {
    EXPECT_GE(min_eigenvalue(lambdas[m] - 0.5 * s.dec.atoms[m]), -1e-8) << m;
    EXPECT_LT(spectral_norm(inv_k_hereditary(s.model.pair.T, lambdas[m], params()) - s.dec.atoms[m]), 1e-8) << m;
  }
}

TEST(SchurDomination, SolverOutputsPassSampledMultipliers) {
  const Solved s = solve_fixture(fixtures::standard_nodes(), fixtures::transfer_targets(fixtures::random_transfer()));
  const double q = params().q();
  std::vector<LaurentPolynomial> samples{LaurentPolynomial::monomial(0, 0.0), LaurentPolynomial::monomial(0, cd(0.6, 0.8)),
                                         LaurentPolynomial::monomial(1), LaurentPolynomial{-1, {0.5 * q, 0.0, 0.5}},
                                         phi()->laurent()};
  const SchurReport report = check_schur_domination(s.model.pair.T, s.dec, samples, params(), phi());
  EXPECT_TRUE(report.passed()) << report.worst_relative;
  // test functions themselves as multipliers
  const OperatorCalculus calc(s.model.pair.T, phi());
  const auto ops = test_operators(calc, sample_test_set(8));
  EXPECT_TRUE(check_schur_domination(lambda_atoms(s.model.pair.T, s.dec, params()), ops).passed());
}

TEST(SchurDomination, RejectsNonContractiveSample) {
  const Solved s = solve_fixture(fixtures::standard_nodes(), std::vector<cd>(4, cd(0.3)));
  try {
    check_schur_domination(s.model.pair.T, s.dec, {LaurentPolynomial::monomial(0, 1.5)}, params(), phi());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(ModelOperators, GramIdentitiesAndLurkingEquality) {
  const Solved s = solve_fixture(fixtures::standard_nodes(), fixtures::transfer_targets(fixtures::random_transfer()));
  const CMatrix& t = s.model.pair.T;
  const FiniteL2Model model = build_l2_model(t, s.dec, params());
  const ModelOperators ops = build_model_operators(t, s.dec, model, params(), phi());
  EXPECT_LT(spectral_norm(ops.Y.adjoint() * ops.Y - riemann_sum(t, s.dec, Weighting::lambda, params(), phi())), 1e-10);
  const CMatrix phi_iota = ops.Phi_star * ops.iota;
  EXPECT_LT(spectral_norm(phi_iota.adjoint() * phi_iota - s.dec.total()), 1e-10);
  const CMatrix r = defect_factor(t, params());
  EXPECT_LT(lurking_residual(r, s.model.pair.X, ops), 1e-8);
  // |Y m| <= |iota m| in the Lambda model
  std::mt19937_64 rng(27);
  for (int i = 0; i < 20; ++i) {
    const CVector m = fixtures::random_matrix(rng, 4, 1);
    EXPECT_LE((ops.Y * m).norm(), (ops.iota * m).norm() * (1.0 + 1e-10));
  }
}

TEST(ModelOperators, PhiStarNormBoundedByZerothKernelTerm) {
  // Lambda_m dominates Gamma_m / 2 (the zeta_0 term), so |Phi^*| <= sqrt 2
  const Solved s = solve_fixture(fixtures::standard_nodes(), std::vector<cd>(4, cd(0.3)));
  const FiniteL2Model model = build_l2_model(s.model.pair.T, s.dec, params());
  const ModelOperators ops = build_model_operators(s.model.pair.T, s.dec, model, params(), phi());
  const double bound = std::sqrt(2.0) * (1.0 + 1e-8);
  EXPECT_LE(spectral_norm(ops.Phi_star), bound);
  std::mt19937_64 rng(29);
  for (int i = 0; i < 50; ++i) {
    const CVector f = fixtures::random_matrix(rng, ops.Phi_star.cols(), 1);
    EXPECT_LE((ops.Phi_star * f).norm(), f.norm() * bound);
  }
  EXPECT_EQ(model.total_dim(), ops.Phi_star.rows());
  RecordProperty("phi_star_norm", std::to_string(spectral_norm(ops.Phi_star)));
}

TEST(ModelOperators, UnitDominationFailsForNonNormalT) {
  // k(T,T^*)(G) - G acts as the Schur product with [k(z_i,z_j) - 1] in kernel
  // coordinates, and that matrix is indefinite on the standard nodes
  const CMatrix shifted = gram_matrix(params(), fixtures::standard_nodes()) - CMatrix::Ones(4, 4);
  EXPECT_LT(min_eigenvalue(shifted), -1.0);
  EXPECT_GT(min_eigenvalue(gram_matrix(params(), fixtures::standard_nodes()) - 0.5 * CMatrix::Ones(4, 4)), 0.0);
  for (cd z : fixtures::standard_nodes()) EXPECT_GT(kernel_value(params(), z, z).real(), 1.0);
}

TEST(ModelOperators, FactorizationErrorOnIndefiniteAtom) {
  const PickModel m = pick_model(fixtures::standard_nodes(), fixtures::psi_targets(), params());
  CMatrix bad = CMatrix::Identity(4, 4);
  bad(3, 3) = -1.0;
  const AtomicDecomposition dec{{1.0}, {bad}};
  try {
    build_l2_model(m.pair.T, dec, params());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::factorization);
  }
}

TEST(Refinement, ConstantAndCosineDensitiesConverge) {
  const PickModel m = pick_model(fixtures::standard_nodes(), fixtures::psi_targets(), params());
  const std::vector<int> depths{4, 5, 6, 7, 8, 9, 10};
  const RefinementReport flat = refinement_convergence([](double) { return 1.0; }, m.pair.T, depths, params(), phi());
  EXPECT_TRUE(flat.monotone);
  const RefinementReport wave =
      refinement_convergence([](double theta) { return 1.0 + std::cos(theta); }, m.pair.T, depths, params(), phi());
  EXPECT_TRUE(wave.monotone);
  EXPECT_LT(wave.final_error, 1e-6);
  const RefinementReport none = refinement_convergence([](double) { return 0.0; }, m.pair.T, depths, params(), phi());
  EXPECT_EQ(none.final_error, 0.0);
}

}  // namespace
}  // namespace annulus
