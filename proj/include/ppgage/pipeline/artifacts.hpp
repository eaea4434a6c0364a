#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace ppgage::pipeline {

inline constexpr std::string_view tool_version = "0.1.0";

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr std::string_view config = "config.json";
inline constexpr std::string_view cohort = "cohort.jsonl";
inline constexpr std::string_view split = "split.csv";
inline constexpr std::string_view checkpoint = "checkpoint.bin";
inline constexpr std::string_view metrics = "metrics.csv";
inline constexpr std::string_view predictions = "predictions.csv";
inline constexpr std::string_view evaluation = "evaluation.csv";
inline constexpr std::string_view cox_table = "cox_table.csv";
inline constexpr std::string_view logrank = "logrank.csv";
inline constexpr std::string_view hr_curve = "hr_curve.csv";
inline constexpr std::string_view serial_table = "serial_table.csv";
inline constexpr std::string_view or_table = "or_table.csv";
inline constexpr std::string_view saliency = "saliency.csv";
inline constexpr std::string_view peaks = "saliency_peaks.csv";
inline constexpr std::string_view summary = "summary.txt";
inline constexpr std::string_view manifest = "manifest.json";
}  // namespace artifact

/// Reals in every output file: 9 significant digits.
inline std::string num(double v) { return fmt::format("{:.9g}", v); }

/// Minimal CSV: header once, then rows of already formatted cells.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(std::vector<std::string> cells);
  std::string str() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws when absent
};

CsvTable read_csv(const std::filesystem::path& path);

/// Writes through a temporary file and rename, so a failed stage never leaves
/// a truncated artifact behind.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// Subject roles. Serial subjects are kept out of model development.
enum class Role { train, selection, holdout, serial };
std::string_view to_string(Role role);
Role parse_role(std::string_view text);

/// Per-stage record of produced files. Paths are relative to the run directory.
struct RunManifest {
  std::string tool_version{pipeline::tool_version};
  std::string config_hash;
  std::map<std::string, std::vector<std::string>> artifacts;  // stage -> files
  std::map<std::string, double> wall_seconds;                 // stage -> seconds

  static RunManifest load_or_empty(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;
};

}  // namespace ppgage::pipeline
