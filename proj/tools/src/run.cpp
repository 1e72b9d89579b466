#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>

#include "annulus/decomposition.hpp"
#include "annulus/hereditary.hpp"
#include "annulus/kernel.hpp"
#include "annulus/parallel.hpp"
#include "annulus/realization.hpp"
#include "annulus/solver.hpp"
#include "annulus/test_functions.hpp"
#include "annulus_cli/harness.hpp"

namespace annulus::cli {

namespace {

using nlohmann::json;

constexpr double kInterpolationTol = 1e-5;
constexpr double kCommutantTol = 1e-5;
constexpr double kContractionSlack = 1e-8;
constexpr double kKeyMuTol = 1e-4;

const std::vector<cd> kDefaultNodes{{0.5, 0.0}, {0.4, 0.3}, {-0.6, 0.1}, {0.1, -0.45}};

json complex_json(cd z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

class Runner {
 public:
  Runner(RunReport& report, const RunOptions& options) : report_(report), options_(options) {}

  /// Runs body as a named stage; library errors become an error stage.
  bool stage(const std::string& name, const std::function<void(StageResult&)>& body) {
    StageResult result;
    result.name = name;
    if (options_.verbose) std::cerr << "[annulus-interp] stage " << name << " ..." << std::endl;
    const auto start = std::chrono::steady_clock::now();
    try {
      body(result);
    } catch (const Error& e) {
      result.status = "error";
      result.message = e.what();
      result.metrics["error_kind"] = std::string(to_string(e.kind()));
      result.exit_code = exit_code_for(e.kind());
    } catch (const std::exception& e) {
      result.status = "error";
      result.message = e.what();
      result.exit_code = exit_other;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report_.timings[name] = seconds;
    if (options_.verbose)
      std::cerr << "[annulus-interp] stage " << name << " -> " << result.status << " (" << seconds << " s)"
                << (result.message.empty() ? "" : ": " + result.message) << std::endl;
    const bool ok = result.status == "pass";
    report_.stages.push_back(std::move(result));
    return ok;
  }

  RunReport& report() { return report_; }

 private:
  RunReport& report_;
  const RunOptions& options_;
};

void check(StageResult& result, bool ok) {
  if (!ok && result.status == "pass") {
    result.status = "fail";
    result.exit_code = exit_verification;
  }
}

std::vector<cd> interior_grid(const AnnulusParams& params, int radial, int angular) {
  std::vector<cd> points;
  const double q = params.q();
  for (int i = 0; i < radial; ++i) {
    const double r = q + (1.0 - q) * (i + 0.5) / radial;
    for (int j = 0; j < angular; ++j) points.push_back(std::polar(r, 2.0 * kPi * (j + 0.25 * (i % 2)) / angular));
  }
  return points;
}

// Pick model, decomposition and colligation shared by the pick-based tasks.
struct PickState {
  AnnulusParams params;
  std::shared_ptr<const AtomFunction> phi;
  PickModel model;
  SolveResult solution;
  CMatrix R;
  std::optional<Colligation> colligation;
};

void run_kernel_check(Runner& runner, const ProblemConfig& config) {
  const AnnulusParams params(config.q);
  const double q = params.q();
  runner.stage("reciprocal_identity", [&](StageResult& r) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> radius(q + 0.05 * (1.0 - q), 1.0 - 0.05 * (1.0 - q));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const cd z = std::polar(radius(rng), angle(rng));
      const cd w = std::polar(radius(rng), angle(rng));
      worst = std::max(worst, std::abs(kernel_value(params, z, w) * kernel_value(params, z, -w) * params.c_prime() - 1.0));
    }
    r.metrics = {{"pairs", 100}, {"c_prime", params.c_prime()}, {"max_error", worst}};
    check(r, worst < 1e-8);
  });
  runner.stage("boundary_zero", [&](StageResult& r) {
    const double zero = std::abs(kernel(params, 1.0, -1.0, 1.0, KernelMethod::theta).value);
    double agreement = 0.0;
    for (cd z : interior_grid(params, 20, 20)) {
      const cd w = std::conj(z);
      const cd s = kernel(params, z, w).value;
      const cd t = kernel(params, z, w, 1.0, KernelMethod::theta).value;
      agreement = std::max(agreement, std::abs(s - t) / std::max(1.0, std::abs(s)));
    }
    r.metrics = {{"k_one_minus_one", zero}, {"series_theta_max_diff", agreement}};
    check(r, zero < 1e-10 && agreement < 1e-10);
  });
  runner.stage("orthonormality", [&](StageResult& r) {
    double worst = 0.0;
    for (int a = -10; a <= 10; ++a)
      for (int b = -10; b <= 10; ++b) {
        const cd ip = boundary_inner_product(params, LaurentPolynomial::monomial(a), LaurentPolynomial::monomial(b));
        const double scale = std::exp(0.5 * (log_basis_weight(q, a) + log_basis_weight(q, b)));
        worst = std::max(worst, std::abs(ip / scale - (a == b ? 1.0 : 0.0)));
      }
    r.metrics = {{"max_index", 10}, {"max_entry_error", worst}};
    check(r, worst < 1e-8);
  });
  runner.stage("kernel_grid", [&](StageResult& r) {
    const std::vector<cd>& points = config.nodes.empty() ? kDefaultNodes : config.nodes;
    CsvGrid grid{"kernel_grid", {"z_re", "z_im", "w_re", "w_im", "k_re", "k_im", "tail_bound"}, {}};
    for (cd z : points)
      for (cd w : points) {
        const KernelValue k = kernel(params, z, w);
        grid.rows.push_back({z.real(), z.imag(), w.real(), w.imag(), k.value.real(), k.value.imag(), k.tail_bound});
      }
    r.metrics = {{"points", points.size()}, {"csv", "kernel_grid.csv"}};
    runner.report().grids.push_back(std::move(grid));
  });
}

void run_testfn_report(Runner& runner, const ProblemConfig& config) {
  const AnnulusParams params(config.q);
  auto phi = build_phi(params);
  const auto gammas = sample_test_set(16);
  runner.stage("test_functions", [&](StageResult& r) {
    CsvGrid grid{"test_functions",
                 {"gamma_re", "gamma_im", "boundary_dev", "zero_error", "psi_one_error", "zero_count", "decay_rho",
                  "reconstruction_error"},
                 {}};
    const double sq = params.sqrt_q();
    double worst_dev = 0.0, worst_zero = 0.0, worst_one = 0.0, worst_count = 0.0, worst_rho = 0.0, worst_recon = 0.0;
    for (cd gamma : gammas) {
      const TestFunction tf = make_test_function(gamma, phi);
      double dev = 0.0;
      for (int i = 0; i < 1000; ++i) {
        const cd u = std::polar(1.0, 2.0 * kPi * i / 1000.0);
        dev = std::max({dev, std::abs(std::abs(tf(u)) - 1.0), std::abs(std::abs(tf(params.q() * u)) - 1.0)});
      }
      const ZeroReport zeros = locate_zeros(tf);
      const double zero_err = std::max(std::abs(zeros.first - sq), std::abs(zeros.second - sq * gamma));
      const double one_err = std::abs(tf(1.0) - 1.0);
      const double count = argument_principle_count(tf);
      const LaurentCoeffs coeffs = laurent_coeffs(tf, 48);
      const DecayFit fit = decay_estimate(coeffs);
      double recon = 0.0;
      for (int i = 0; i < 64; ++i) {
        const cd z = std::polar(sq, 2.0 * kPi * i / 64.0);
        recon = std::max(recon, std::abs(coeffs.evaluate(params, z) - tf(z)));
      }
      grid.rows.push_back({gamma.real(), gamma.imag(), dev, zero_err, one_err, count, fit.rho, recon});
      worst_dev = std::max(worst_dev, dev);
      worst_zero = std::max(worst_zero, zero_err);
      worst_one = std::max(worst_one, one_err);
      worst_count = std::max(worst_count, std::abs(count - 2.0));
      worst_rho = std::max(worst_rho, fit.rho);
      worst_recon = std::max(worst_recon, recon);
    }
    r.metrics = {{"gammas", gammas.size()},       {"max_boundary_dev", worst_dev}, {"max_zero_error", worst_zero},
                 {"max_psi_one_error", worst_one}, {"max_count_error", worst_count}, {"max_decay_rho", worst_rho},
                 {"max_reconstruction_error", worst_recon}, {"csv", "test_functions.csv"}};
    check(r, worst_dev < 1e-6 && worst_zero < 1e-8 && worst_one < 1e-10 && worst_count < 1e-6 && worst_rho < 1.0 &&
                 worst_recon < 1e-8);
    runner.report().grids.push_back(std::move(grid));
  });
}

bool run_pick(Runner& runner, const ProblemConfig& config, PickState& state) {
  bool have_model = runner.stage("pick_model", [&](StageResult& r) {
    state.model = pick_model(config.nodes, config.targets, state.params);
    const RVector s = singular_values(state.model.gram);
    r.metrics = {{"nodes", config.nodes.size()}, {"gram_condition", s(0) / s(s.size() - 1)}};
  });
  if (!have_model) return false;
  return runner.stage("feasibility", [&](StageResult& r) {
    SolverOptions options;
    options.tol = config.tol;
    options.seed = config.seed;
    const CMatrix& T = state.model.pair.T;
    const CMatrix& X = state.model.pair.X;
    state.solution = solve_adaptive(
        [&](int n) { return assemble_system(T, X, sample_test_set(n), state.params, state.phi); }, config.num_atoms,
        options);
    const FeasibilityReport& rep = state.solution.report;
    json traces = json::array();
    for (const CMatrix& atom : state.solution.decomposition.atoms) traces.push_back(atom.trace().real());
    r.metrics = {{"solver_status", std::string(to_string(rep.status))},
                 {"residual", rep.residual},
                 {"iterations", rep.iterations},
                 {"interior_iterations", rep.interior_iterations},
                 {"final_atoms", rep.atoms},
                 {"attempted_sizes", rep.attempted_sizes},
                 {"atom_traces", traces}};
    if (rep.certificate) {
      r.metrics["certificate_violation"] = rep.certificate_violation;
      json cert = json::array();
      for (Eigen::Index i = 0; i < rep.certificate->rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < rep.certificate->cols(); ++j) row.push_back(complex_json((*rep.certificate)(i, j)));
        cert.push_back(row);
      }
      r.metrics["certificate"] = cert;
    }
    if (rep.status == FeasibilityStatus::infeasible) {
      r.status = "infeasible";
      r.exit_code = exit_infeasible;
    } else if (rep.status == FeasibilityStatus::stalled) {
      r.status = "stalled";
      r.exit_code = exit_stalled;
    }
  });
}

bool run_realize(Runner& runner, const ProblemConfig& config, PickState& state) {
  if (!run_pick(runner, config, state)) return false;
  const bool built = runner.stage("colligation", [&](StageResult& r) {
    const CMatrix& T = state.model.pair.T;
    const CMatrix& X = state.model.pair.X;
    state.R = defect_factor(T, state.params);
    const auto& dec = state.solution.decomposition;
    const auto ops = build_model_operators(T, dec, build_l2_model(T, dec, state.params), state.params, state.phi);
    const double lurking = lurking_residual(state.R, X, ops);
    state.colligation = build_colligation(T, X, state.R, dec, 1, state.params, state.phi);
    const auto [first, second] =
        system_residuals(*state.colligation, lurking_spans(T, X, state.R, dec, 1, state.params, state.phi));
    const double defect = unitarity_defect(*state.colligation);
    r.metrics = {{"lurking_residual", lurking},       {"unitarity_defect", defect},
                 {"system_residual_state", first},    {"system_residual_output", second},
                 {"state_dim", state.colligation->state_dim()}, {"pad_dim", state.colligation->pad_dim}};
    check(r, defect < 1e-10);
  });
  if (!built) return false;
  return runner.stage("interpolation", [&](StageResult& r) {
    const Colligation& col = *state.colligation;
    double worst = 0.0;
    json values = json::array();
    for (std::size_t j = 0; j < config.nodes.size(); ++j) {
      const cd w = transfer_eval(col, config.nodes[j])(0, 0);
      values.push_back(complex_json(w));
      worst = std::max(worst, std::abs(w - config.targets[j]));
    }
    const std::vector<cd> grid_points = interior_grid(state.params, 10, 20);
    std::vector<double> sigma(grid_points.size()), cond(grid_points.size());
    parallel_for(grid_points.size(), [&](std::size_t i) {
      sigma[i] = spectral_norm(transfer_eval(col, grid_points[i]));
      cond[i] = resolvent_condition(col, grid_points[i]);
    });
    CsvGrid grid{"singular_values", {"z_re", "z_im", "sigma_max", "resolvent_condition"}, {}};
    for (std::size_t i = 0; i < grid_points.size(); ++i)
      grid.rows.push_back({grid_points[i].real(), grid_points[i].imag(), sigma[i], cond[i]});
    const double sup = *std::max_element(sigma.begin(), sigma.end());
    r.metrics = {{"max_target_error", worst},
                 {"values", values},
                 {"grid_points", grid_points.size()},
                 {"sup_sigma_max", sup},
                 {"max_resolvent_condition", *std::max_element(cond.begin(), cond.end())},
                 {"csv", "singular_values.csv"}};
    check(r, worst < kInterpolationTol && sup <= 1.0 + kContractionSlack);
    runner.report().grids.push_back(std::move(grid));
  });
}

void run_roundtrip(Runner& runner, const ProblemConfig& config, PickState& state) {
  if (!run_realize(runner, config, state)) return;
  runner.stage("commutant", [&](StageResult& r) {
    const CMatrix& T = state.model.pair.T;
    const LiftingData lifting = build_lifting(T, state.R, config.truncation, state.params);
    const double isometry = spectral_norm(lifting.V.adjoint() * lifting.V - CMatrix::Identity(T.rows(), T.cols()));
    const CommutantReport rep = commutant_residual(*state.colligation, T, state.model.pair.X, lifting, state.params);
    r.metrics = {{"truncation", config.truncation},
                 {"lifting_isometry_defect", isometry},
                 {"commutant_residual", rep.residual},
                 {"laurent_tail", rep.tail}};
    check(r, rep.residual < kCommutantTol);
  });
}

void run_converse(Runner& runner, const ProblemConfig& config) {
  const AnnulusParams params(config.q);
  auto phi = build_phi(params);
  const std::vector<cd>& nodes = config.nodes.empty() ? kDefaultNodes : config.nodes;
  std::optional<Colligation> col;
  std::optional<PickModel> model;
  std::optional<LiftingData> lifting;
  const bool ready = runner.stage("random_colligation", [&](StageResult& r) {
    col = random_colligation(sample_test_set(8), 1, 1, config.seed, phi);
    std::vector<cd> targets;
    json values = json::array();
    for (cd z : nodes) {
      targets.push_back(transfer_eval(*col, z)(0, 0));
      values.push_back(complex_json(targets.back()));
    }
    model = pick_model(nodes, targets, params);
    const CMatrix R = defect_factor(model->pair.T, params);
    const int trunc = std::max(config.truncation, lifting_truncation(model->pair.T, R, params));
    lifting = build_lifting(model->pair.T, R, trunc, params);
    r.metrics = {{"atoms", col->blocks.size()},
                 {"unitarity_defect", unitarity_defect(*col)},
                 {"targets", values},
                 {"truncation", trunc}};
  });
  if (!ready) return;
  runner.stage("key_mu_sweep", [&](StageResult& r) {
    const CMatrix& T = model->pair.T;
    const CMatrix& X = model->pair.X;
    const std::vector<LaurentPolynomial> multipliers{
        LaurentPolynomial::monomial(1), LaurentPolynomial{-1, {params.q()}},
        LaurentPolynomial{-1, {0.5 * params.q(), 0.0, 0.5}}, phi->laurent()};
    json sweep = json::array();
    std::vector<double> residuals;
    bool psd = true;
    bool dominated = true;
    CsvGrid grid{"key_mu_sweep", {"r", "key_mu_residual", "min_relative_eigenvalue", "schur_worst_relative"}, {}};
    for (double radius : {0.9, 0.99, 0.999}) {
      const AtomicDecomposition dec = extract_decomposition(*col, *lifting, radius, T, params);
      double min_rel = 0.0;
      for (const CMatrix& atom : dec.atoms) {
        const double scale = std::max(spectral_norm(atom), 1e-300);
        min_rel = std::min(min_rel, min_eigenvalue(atom) / scale);
      }
      const double residual = key_mu_residual(T, X, dec, params, phi);
      const SchurReport schur = check_schur_domination(T, dec, multipliers, params, phi, 1e-6);
      residuals.push_back(residual);
      psd = psd && min_rel >= -1e-8;
      dominated = dominated && schur.passed();
      sweep.push_back({{"r", radius},
                       {"key_mu_residual", residual},
                       {"min_relative_eigenvalue", min_rel},
                       {"schur_checks", schur.checks},
                       {"schur_worst_relative", schur.worst_relative}});
      grid.rows.push_back({radius, residual, min_rel, schur.worst_relative});
    }
    const bool monotone = std::is_sorted(residuals.rbegin(), residuals.rend()) &&
                          std::adjacent_find(residuals.begin(), residuals.end()) == residuals.end();
    r.metrics = {{"sweep", sweep},
                 {"monotone", monotone},
                 {"final_residual", residuals.back()},
                 {"atoms_psd", psd},
                 {"schur_dominated", dominated},
                 {"schur_condition", "sampled"},
                 {"csv", "key_mu_sweep.csv"}};
    check(r, monotone && psd && dominated && residuals.back() < kKeyMuTol);
    runner.report().grids.push_back(std::move(grid));
  });
}

}  // namespace

int RunReport::exit_code() const noexcept {
  for (const auto& s : stages)
    if (s.exit_code != exit_pass) return s.exit_code;
  return exit_pass;
}

std::string RunReport::status() const {
  for (const auto& s : stages)
    if (s.status != "pass") return s.status;
  return "pass";
}

nlohmann::json RunReport::to_json() const {
  json stage_list = json::array();
  for (const auto& s : stages) {
    json entry{{"name", s.name}, {"status", s.status}, {"exit_code", s.exit_code}, {"metrics", s.metrics}};
    if (!s.message.empty()) entry["message"] = s.message;
    stage_list.push_back(entry);
  }
  json grids_list = json::array();
  for (const auto& g : grids) grids_list.push_back({{"name", g.name}, {"file", g.name + ".csv"}, {"rows", g.rows.size()}});
  return json{{"task", std::string(cli::to_string(task))},
              {"status", status()},
              {"exit_code", exit_code()},
              {"config", cli::to_json(config)},
              {"stages", stage_list},
              {"grids", grids_list}};
}

RunReport run(const ProblemConfig& config, const RunOptions& options) {
  if (!config.task) fail(ErrorKind::validation, "no task given");
  validate(config);
  RunReport report;
  report.config = config;
  report.task = *config.task;
  Runner runner(report, options);
  switch (*config.task) {
    case Task::kernel_check: run_kernel_check(runner, config); break;
    case Task::testfn_report: run_testfn_report(runner, config); break;
    case Task::pick:
    case Task::realize:
    case Task::roundtrip: {
      PickState state{AnnulusParams(config.q), nullptr, {}, {}, {}, std::nullopt};
      state.phi = build_phi(state.params);
      if (*config.task == Task::pick)
        run_pick(runner, config, state);
      else if (*config.task == Task::realize)
        run_realize(runner, config, state);
      else
        run_roundtrip(runner, config, state);
      break;
    }
    case Task::converse: run_converse(runner, config); break;
  }
  return report;
}

}  // namespace annulus::cli
