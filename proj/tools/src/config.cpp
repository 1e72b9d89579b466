#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "annulus/kernel.hpp"
#include "annulus_cli/harness.hpp"

namespace annulus::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownFields{"q",   "task", "nodes", "targets", "num_atoms", "truncation",
                                         "tol", "seed", "output_path"};

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

[[noreturn]] void field_error(const std::string& source, const std::string& field, const std::string& what) {
  fail(ErrorKind::parse, source + ": field '" + field + "': " + what);
}

double read_number(const json& value, const std::string& source, const std::string& field) {
  if (!value.is_number()) field_error(source, field, "expected a number, got " + std::string(value.type_name()));
  return value.get<double>();
}

long long read_integer(const json& value, const std::string& source, const std::string& field) {
  if (!value.is_number_integer()) field_error(source, field, "expected an integer, got " + std::string(value.type_name()));
  return value.get<long long>();
}

cd read_complex(const json& value, const std::string& source, const std::string& field) {
  if (value.is_number()) return {value.get<double>(), 0.0};
  if (value.is_array()) {
    if (value.size() != 2) field_error(source, field, "expected a [re, im] pair");
    return {read_number(value[0], source, field + "[0]"), read_number(value[1], source, field + "[1]")};
  }
  if (value.is_object()) {
    if (!value.contains("re")) field_error(source, field, "missing 're'");
    for (const auto& [key, _] : value.items())
      if (key != "re" && key != "im") field_error(source, field, "unknown key '" + key + "'");
    const double im = value.contains("im") ? read_number(value["im"], source, field + ".im") : 0.0;
    return {read_number(value["re"], source, field + ".re"), im};
  }
  field_error(source, field, "expected a complex number as {re, im}, got " + std::string(value.type_name()));
}

std::vector<cd> read_complex_list(const json& value, const std::string& source, const std::string& field) {
  if (!value.is_array()) field_error(source, field, "expected a list, got " + std::string(value.type_name()));
  std::vector<cd> out;
  for (std::size_t i = 0; i < value.size(); ++i)
    out.push_back(read_complex(value[i], source, field + "[" + std::to_string(i) + "]"));
  return out;
}

json complex_json(cd z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

std::string format_complex(cd z) {
  std::ostringstream os;
  os.precision(17);
  os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

bool needs_targets(Task task) { return task == Task::pick || task == Task::realize || task == Task::roundtrip; }

}  // namespace

std::string_view to_string(Task task) noexcept {
  switch (task) {
    case Task::kernel_check: return "kernel-check";
    case Task::testfn_report: return "testfn-report";
    case Task::pick: return "pick";
    case Task::realize: return "realize";
    case Task::roundtrip: return "roundtrip";
    case Task::converse: return "converse";
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::kernel_check, Task::testfn_report, Task::pick, Task::realize, Task::roundtrip, Task::converse})
    if (to_string(t) == name) return t;
  fail(ErrorKind::validation, "unknown task '" + std::string(name) +
                                  "' (expected kernel-check, testfn-report, pick, realize, roundtrip or converse)");
}

ProblemConfig parse_config_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_and_column(text, e.byte);
    std::ostringstream os;
    os << source << ":" << line << ":" << column << ": malformed JSON: " << e.what();
    fail(ErrorKind::parse, os.str());
  }
  if (!doc.is_object()) fail(ErrorKind::parse, source + ": top level must be a JSON object");

  ProblemConfig config;
  std::vector<std::string> unknown;
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownFields.count(key)) {
      unknown.push_back(key);
      continue;
    }
    if (key == "q") config.q = read_number(value, source, key);
    if (key == "task") {
      if (!value.is_string()) field_error(source, key, "expected a string");
      config.task = parse_task(value.get<std::string>());
    }
    if (key == "nodes") config.nodes = read_complex_list(value, source, key);
    if (key == "targets") config.targets = read_complex_list(value, source, key);
    if (key == "num_atoms") config.num_atoms = static_cast<int>(read_integer(value, source, key));
    if (key == "truncation") config.truncation = static_cast<int>(read_integer(value, source, key));
    if (key == "tol") config.tol = read_number(value, source, key);
    if (key == "seed") {
      const long long s = read_integer(value, source, key);
      if (s < 0) field_error(source, key, "must be non-negative");
      config.seed = static_cast<std::uint64_t>(s);
    }
    if (key == "output_path") {
      if (!value.is_string()) field_error(source, key, "expected a string");
      config.output_path = value.get<std::string>();
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "'" : ", '") + k + "'";
    fail(ErrorKind::parse, source + ": unknown field(s) " + list);
  }
  validate(config);
  return config;
}

ProblemConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

void validate(const ProblemConfig& config) {
  std::vector<std::string> problems;
  if (!(config.q > 0.0 && config.q < 1.0)) problems.push_back("q must lie in (0, 1)");
  if (config.num_atoms < 1) problems.push_back("num_atoms must be at least 1");
  if (config.truncation < 1) problems.push_back("truncation must be at least 1");
  if (!(config.tol > 0.0)) problems.push_back("tol must be positive");
  if (config.q > 0.0 && config.q < 1.0) {
    for (std::size_t i = 0; i < config.nodes.size(); ++i) {
      const cd z = config.nodes[i];
      const double r = std::abs(z);
      if (!(r > config.q && r < 1.0))
        problems.push_back("node " + std::to_string(i) + " (" + format_complex(z) + ") lies outside the annulus q < |z| < 1");
      for (std::size_t j = 0; j < i; ++j)
        if (config.nodes[j] == z)
          problems.push_back("nodes " + std::to_string(j) + " and " + std::to_string(i) + " duplicate " + format_complex(z));
    }
  }
  for (std::size_t i = 0; i < config.targets.size(); ++i)
    if (!std::isfinite(config.targets[i].real()) || !std::isfinite(config.targets[i].imag()))
      problems.push_back("target " + std::to_string(i) + " is not finite");
  if (config.task && needs_targets(*config.task)) {
    if (config.nodes.empty()) problems.push_back("task " + std::string(to_string(*config.task)) + " needs nodes");
    if (config.targets.size() != config.nodes.size())
      problems.push_back("targets has " + std::to_string(config.targets.size()) + " entries but nodes has " +
                         std::to_string(config.nodes.size()));
  }
  if (config.output_path.empty()) problems.push_back("output_path must not be empty");
  if (problems.empty()) return;
  std::string msg = "invalid configuration: ";
  for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
  fail(ErrorKind::validation, msg);
}

nlohmann::json to_json(const ProblemConfig& config) {
  json nodes = json::array();
  for (cd z : config.nodes) nodes.push_back(complex_json(z));
  json targets = json::array();
  for (cd w : config.targets) targets.push_back(complex_json(w));
  return json{{"q", config.q},
              {"task", config.task ? json(std::string(to_string(*config.task))) : json(nullptr)},
              {"nodes", nodes},
              {"targets", targets},
              {"num_atoms", config.num_atoms},
              {"truncation", config.truncation},
              {"tol", config.tol},
              {"seed", config.seed},
              {"output_path", config.output_path}};
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::domain: return exit_validation;
    case ErrorKind::io: return exit_other;
    default: return exit_convergence;
  }
}

}  // namespace annulus::cli
