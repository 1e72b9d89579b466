#include <fstream>
#include <iomanip>

#include "annulus_cli/harness.hpp"

namespace annulus::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

std::string csv_text(const CsvGrid& grid) {
  std::ostringstream os;
  for (std::size_t i = 0; i < grid.header.size(); ++i) os << (i ? "," : "") << grid.header[i];
  os << "\n" << std::setprecision(17);
  for (const auto& row : grid.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

}  // namespace

void emit_report(const RunReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  nlohmann::json timings = nlohmann::json::object();
  for (const auto& [stage, seconds] : report.timings) timings[stage] = seconds;
  write_file(dir / "timings.json", timings.dump(2) + "\n");
  for (const auto& grid : report.grids) write_file(dir / (grid.name + ".csv"), csv_text(grid));
}

}  // namespace annulus::cli
