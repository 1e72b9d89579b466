#include <iostream>

#include <CLI11.hpp>

#include "annulus_cli/harness.hpp"

int main(int argc, char** argv) {
  using namespace annulus;
  CLI::App app{"Interpolation on the annulus: kernels, test functions, Pick feasibility and realizations"};
  std::string task_name;
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  bool verbose = false;
  app.add_option("task", task_name, "kernel-check | testfn-report | pick | realize | roundtrip | converse")->required();
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--out", out_dir, "Output directory (overrides output_path)");
  app.add_option("--seed", seed, "Seed (overrides the config seed)")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", verbose, "Log stage progress to stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::exit_validation;
  }

  cli::ProblemConfig config;
  try {
    const cli::Task task = cli::parse_task(task_name);
    config = cli::parse_config(config_path);
    if (config.task && *config.task != task)
      fail(ErrorKind::validation, "config task '" + std::string(cli::to_string(*config.task)) +
                                      "' does not match command-line task '" + task_name + "'");
    config.task = task;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) config.output_path = out_dir;
    cli::validate(config);
  } catch (const Error& e) {
    std::cerr << "annulus-interp: " << e.what() << "\n";
    return cli::exit_code_for(e.kind());
  }

  try {
    const cli::RunReport report = cli::run(config, {verbose});
    cli::emit_report(report, config.output_path);
    std::cout << cli::to_string(report.task) << ": " << report.status() << " (exit " << report.exit_code() << ")\n";
    for (const auto& stage : report.stages)
      std::cout << "  " << stage.name << ": " << stage.status << (stage.message.empty() ? "" : " - " + stage.message)
                << "\n";
    return report.exit_code();
  } catch (const Error& e) {
    std::cerr << "annulus-interp: " << e.what() << "\n";
    return cli::exit_code_for(e.kind());
  }
}
