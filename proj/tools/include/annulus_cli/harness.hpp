#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "annulus/errors.hpp"
#include "annulus/types.hpp"

namespace annulus::cli {

enum class Task { kernel_check, testfn_report, pick, realize, roundtrip, converse };

std::string_view to_string(Task task) noexcept;
/// Validation error for an unknown task name.
Task parse_task(std::string_view name);

struct ProblemConfig {
  double q = 0.25;
  std::optional<Task> task;
  std::vector<cd> nodes;
  std::vector<cd> targets;
  int num_atoms = 32;
  int truncation = 80;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::string output_path = "annulus-out";
};

/// Parse error with line/column for malformed JSON or a field of the wrong
/// type; validation error listing every violated invariant otherwise.
ProblemConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
ProblemConfig parse_config(const std::filesystem::path& path);

/// Throws a validation error naming each offending field, node or value.
void validate(const ProblemConfig& config);

nlohmann::json to_json(const ProblemConfig& config);

/// Process exit codes.
enum ExitCode : int {
  exit_pass = 0,
  exit_other = 1,
  exit_infeasible = 2,
  exit_stalled = 3,
  exit_validation = 4,
  exit_convergence = 5,
  exit_verification = 6,
};

/// Exit code for an error raised by the library.
int exit_code_for(ErrorKind kind) noexcept;

struct CsvGrid {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct StageResult {
  std::string name;
  /// pass | fail | infeasible | stalled | error
  std::string status = "pass";
  nlohmann::json metrics = nlohmann::json::object();
  std::string message;
  int exit_code = exit_pass;
};

struct RunReport {
  ProblemConfig config;
  Task task = Task::kernel_check;
  std::vector<StageResult> stages;
  std::vector<CsvGrid> grids;
  std::map<std::string, double> timings;

  /// First nonzero stage code, 0 when every stage passes.
  int exit_code() const noexcept;
  std::string status() const;
  /// Report document without timings, so reruns compare byte for byte.
  nlohmann::json to_json() const;
};

struct RunOptions {
  bool verbose = false;
};

/// Runs config.task; stage errors are caught and recorded with their stage name.
RunReport run(const ProblemConfig& config, const RunOptions& options = {});

/// Writes report.json, timings.json and one CSV per grid into `dir`; I/O error
/// if the directory cannot be created or a file cannot be written.
void emit_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace annulus::cli
