#include <gtest/gtest.h>

#include <random>

#include "annulus/errors.hpp"
#include "fixtures.hpp"

namespace annulus {
namespace {

using fixtures::params;
using fixtures::phi;

constexpr double kTargetTol = 1e-5;
constexpr double kContractionSlack = 1e-8;

struct Realized {
  std::string name;
  PickModel model;
  CMatrix R;
  AtomicDecomposition dec;
  Colligation col;
};

Realized realize(const fixtures::Feasible& f, int pad_dim = 1) {
  PickModel m = pick_model(f.nodes, f.targets, params());
  const SolveResult s =
      solve_atoms(assemble_system(m.pair.T, m.pair.X, sample_test_set(32), params(), phi()));
  EXPECT_EQ(s.report.status, FeasibilityStatus::feasible) << f.name;
  CMatrix R = defect_factor(m.pair.T, params());
  Colligation col = build_colligation(m.pair.T, m.pair.X, R, s.decomposition, pad_dim, params(), phi());
  return {f.name, std::move(m), std::move(R), s.decomposition, std::move(col)};
}

const std::vector<Realized>& realized_fixtures() {
  static const std::vector<Realized> all = [] {
    std::vector<Realized> out;
    for (const auto& f : fixtures::feasible_fixtures()) out.push_back(realize(f));
    return out;
  }();
  return all;
}

Colligation single_atom(cd gamma) {
  Colligation col;
  col.A = CMatrix::Zero(1, 1);
  col.B = CMatrix::Ones(1, 1);
  col.C = CMatrix::Ones(1, 1);
  col.D = CMatrix::Zero(1, 1);
  col.blocks = {{gamma, 1}};
  col.phi = phi();
  return col;
}

std::vector<cd> interior_points(int radial, int angular) {
  std::vector<cd> out;
  const double q = params().q();
  for (int i = 1; i <= radial; ++i)
    for (int j = 0; j < angular; ++j)
      out.push_back(std::polar(q + (1.0 - q) * i / (radial + 1.0), 2.0 * kPi * j / angular));
  return out;
}

TEST(Colligation, UnitaryOnEveryFixture) {
  for (const auto& r : realized_fixtures()) EXPECT_LT(unitarity_defect(r.col), 1e-10) << r.name;
}

TEST(Colligation, SystemEquationsHold) {
  for (const auto& r : realized_fixtures()) {
    const auto spans = lurking_spans(r.model.pair.T, r.model.pair.X, r.R, r.dec, 1, params(), phi());
    const auto [state, output] = system_residuals(r.col, spans);
    // P is nearly rank deficient for targets drawn from one test function,
    // which amplifies the lurking gap; only the well-conditioned fixtures are held to 1e-8
    if (r.name == "psi_sampled") {
      RecordProperty("psi_sampled_system_residual", std::to_string(std::max(state, output)));
      EXPECT_LT(std::max(state, output), 1e-5);
    } else {
      EXPECT_LT(state, 1e-8) << r.name;
      EXPECT_LT(output, 1e-8) << r.name;
    }
  }
}

TEST(Colligation, SpansAreIsometric) {
  std::mt19937_64 rng(31);
  for (const auto& r : realized_fixtures()) {
    const auto spans = lurking_spans(r.model.pair.T, r.model.pair.X, r.R, r.dec, 1, params(), phi());
    for (int i = 0; i < 50; ++i) {
      const CVector m = fixtures::random_matrix(rng, spans.P.cols(), 1);
      const double p = (spans.P * m).norm();
      EXPECT_NEAR(p, (spans.Q * m).norm(), 1e-8 * std::max(1.0, p)) << r.name;
    }
  }
}

TEST(Colligation, PadDimensions) {
  const auto& r = realized_fixtures()[1];
  const auto spans = lurking_spans(r.model.pair.T, r.model.pair.X, r.R, r.dec, 1, params(), phi());
  EXPECT_EQ(minimal_pad_dim(spans), 1);
  try {
    build_colligation(r.model.pair.T, r.model.pair.X, r.R, r.dec, 0, params(), phi());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
  // a larger pad is another completion: same values at the nodes, possibly different elsewhere
  const Realized wide = realize({"wide", r.model.nodes, r.model.targets}, 2);
  EXPECT_EQ(wide.col.pad_dim, 2);
  EXPECT_LT(unitarity_defect(wide.col), 1e-10);
  for (std::size_t j = 0; j < r.model.nodes.size(); ++j)
    EXPECT_LT(std::abs(transfer_eval(wide.col, r.model.nodes[j])(0, 0) - r.model.targets[j]), kTargetTol);
  const cd probe(0.7, -0.2);
  RecordProperty("completion_difference_off_nodes",
                 std::to_string(std::abs(transfer_eval(wide.col, probe)(0, 0) - transfer_eval(r.col, probe)(0, 0))));
}

TEST(Rho, BoundaryAndZeroValues) {
  const Colligation col = fixtures::random_transfer();
  const CMatrix rho_zero = rho_of_E(col, std::sqrt(params().q()));
  EXPECT_LT(rho_zero.norm(), 1e-12);
  const CMatrix rho_one = rho_of_E(col, 1.0);
  EXPECT_LT((rho_one - CMatrix::Identity(col.state_dim(), col.state_dim())).norm(), 1e-10);
  for (cd z : interior_points(5, 12)) EXPECT_LT(rho_diagonal(col, z).cwiseAbs().maxCoeff(), 1.0);
  try {
    rho_of_E(col, 1.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Transfer, ValueAtCenterIsD) {
  const Colligation col = fixtures::random_transfer();
  EXPECT_LT((transfer_eval(col, std::sqrt(params().q())) - col.D).norm(), 1e-12);
}

TEST(Transfer, SingleAtomGivesTestFunction) {
  for (cd gamma : sample_test_set(5)) {
    const Colligation col = single_atom(gamma);
    const TestFunction tf = make_test_function(gamma, phi());
    for (cd z : interior_points(3, 7)) EXPECT_LT(std::abs(transfer_eval(col, z)(0, 0) - tf(z)), 1e-12);
  }
}

TEST(Transfer, RandomColligationsAreContractive) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Colligation col = random_colligation(sample_test_set(6), 2, 2, seed, phi());
    EXPECT_LT(unitarity_defect(col), 1e-12);
    for (cd z : interior_points(10, 20)) EXPECT_LE(spectral_norm(transfer_eval(col, z)), 1.0 + kContractionSlack);
  }
}

TEST(Transfer, FactorizationIdentity) {
  const Colligation col = random_colligation(sample_test_set(6), 1, 2, 5, phi());
  const auto points = interior_points(3, 5);
  for (cd z : points)
    for (cd w : {points[2], points[7], points[13]}) {
      const CMatrix wz = transfer_eval(col, z);
      const CMatrix ww = transfer_eval(col, w);
      const CMatrix hz = h_r_eval(col, z, 1.0);
      const CMatrix hw = h_r_eval(col, w, 1.0);
      const CVector rz = rho_diagonal(col, z);
      const CVector rw = rho_diagonal(col, w);
      const CVector middle = (CVector::Ones(rz.size()) - rz.cwiseProduct(rw.conjugate())).eval();
      const CMatrix lhs = CMatrix::Identity(wz.rows(), wz.rows()) - wz * ww.adjoint();
      EXPECT_LT((lhs - hz * middle.asDiagonal() * hw.adjoint()).norm(), 1e-10);
    }
}

TEST(Transfer, NeumannSeriesMatchesResolvent) {
  const Colligation col = fixtures::random_transfer();
  const cd z(0.3, 0.6);
  const double r = 0.7;
  const CMatrix step = r * rho_of_E(col, z) * col.A;
  CMatrix power = CMatrix::Identity(col.state_dim(), col.state_dim());
  CMatrix sum = CMatrix::Zero(col.state_dim(), col.state_dim());
  for (int k = 0; k < 400; ++k) {
    sum += power;
    power = power * step;
  }
  const CMatrix series = col.D + col.C * sum * r * rho_of_E(col, z) * col.B;
  EXPECT_LT((series - transfer_eval(col, z, r)).norm(), 1e-12);
}

TEST(Transfer, SmallRadiusLimit) {
  const Colligation col = fixtures::random_transfer();
  EXPECT_LT((h_r_eval(col, cd(0.4, 0.4), 1e-9) - col.C).norm(), 1e-8);
  try {
    h_r_matrix(col, 1.0, 8, spectral_contour(CMatrix::Identity(1, 1) * 0.5, params(), 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(Transfer, KappaDominatesOnPoints) {
  const Colligation col = fixtures::random_transfer();
  const auto points = interior_points(3, 6);
  for (double r : {0.5, 0.9}) {
    const double kappa = estimate_kappa(col, r, points, params());
    ASSERT_TRUE(std::isfinite(kappa));
    EXPECT_GE(kappa, 0.0);
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    const Eigen::Index h = col.io_dim();
    CMatrix block(n * h, n * h);
    for (Eigen::Index i = 0; i < n; ++i) {
      const CMatrix hi = h_r_eval(col, points[static_cast<std::size_t>(i)], r);
      for (Eigen::Index j = 0; j < n; ++j) {
        const CMatrix hj = h_r_eval(col, points[static_cast<std::size_t>(j)], r);
        block.block(i * h, j * h, h, h) =
            kappa * kernel_value(params(), points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]) *
                CMatrix::Identity(h, h) -
            hi * hj.adjoint();
      }
    }
    EXPECT_GE(min_eigenvalue(block), -1e-8 * std::max(1.0, kappa));
  }
}

TEST(RoundTrip, InterpolatesAndCommutes) {
  for (const auto& r : realized_fixtures()) {
    for (std::size_t j = 0; j < r.model.nodes.size(); ++j)
      EXPECT_LT(std::abs(transfer_eval(r.col, r.model.nodes[j])(0, 0) - r.model.targets[j]), kTargetTol) << r.name;
    double sup = 0.0;
    for (cd z : interior_points(10, 20)) sup = std::max(sup, spectral_norm(transfer_eval(r.col, z)));
    EXPECT_LE(sup, 1.0 + kContractionSlack) << r.name;
    const LiftingData lifting = build_lifting(r.model.pair.T, r.R, 40, params());
    const CommutantReport rep = commutant_residual(r.col, r.model.pair.T, r.model.pair.X, lifting, params());
    EXPECT_LT(rep.residual, 1e-5) << r.name;
  }
}

TEST(RoundTrip, WrongUnitaryBreaksCommutant) {
  const auto& r = realized_fixtures()[1];
  const Colligation wrong = r.col.with_unitary(random_unitary(r.col.unitary().rows(), 99));
  const LiftingData lifting = build_lifting(r.model.pair.T, r.R, 40, params());
  EXPECT_GT(commutant_residual(wrong, r.model.pair.T, r.model.pair.X, lifting, params()).residual, 1e-2);
}

TEST(RoundTrip, ZeroTargets) {
  const Realized r = realize({"zero", fixtures::standard_nodes(), std::vector<cd>(4, cd(0.0))});
  for (cd z : r.model.nodes) EXPECT_LT(std::abs(transfer_eval(r.col, z)(0, 0)), kTargetTol);
}

TEST(Converse, ExtractedAtomsApproachKeyIdentity) {
  const Colligation col = fixtures::random_transfer();
  const PickModel m = pick_model(fixtures::standard_nodes(), fixtures::transfer_targets(col), params());
  const CMatrix R = defect_factor(m.pair.T, params());
  const LiftingData lifting =
      build_lifting(m.pair.T, R, std::max(80, lifting_truncation(m.pair.T, R, params())), params());
  double previous = std::numeric_limits<double>::infinity();
  for (double r : {0.9, 0.99, 0.999}) {
    const AtomicDecomposition dec = extract_decomposition(col, lifting, r, m.pair.T, params());
    EXPECT_EQ(dec.size(), col.blocks.size());
    for (const CMatrix& atom : dec.atoms) EXPECT_GE(min_eigenvalue(atom), -1e-8);
    const double residual = key_mu_residual(m.pair.T, m.pair.X, dec, params(), phi());
    EXPECT_LT(residual, previous) << r;
    previous = residual;
  }
}

TEST(RandomUnitary, SeededAndUnitary) {
  const CMatrix a = random_unitary(6, 3);
  EXPECT_LT((a.adjoint() * a - CMatrix::Identity(6, 6)).norm(), 1e-13);
  EXPECT_EQ((a - random_unitary(6, 3)).norm(), 0.0);
  EXPECT_GT((a - random_unitary(6, 4)).norm(), 1e-3);
}

}  // namespace
}  // namespace annulus
