#include <chrono>
#include <fstream>

#include <fmt/ranges.h>

#include "internal.hpp"
#include "ppgage/error.hpp"
#include "ppgage/log.hpp"
#include "ppgage/pipeline/stages.hpp"

namespace ppgage::pipeline {

namespace fs = std::filesystem;
using detail::path_of;

std::vector<std::string> expected_artifacts(const ExperimentConfig&) {
  std::vector<std::string> names;
  for (auto n : {artifact::config, artifact::cohort, artifact::split, artifact::checkpoint, artifact::metrics,
                 artifact::predictions, artifact::evaluation, artifact::cox_table, artifact::logrank,
                 artifact::hr_curve, artifact::serial_table, artifact::or_table, artifact::saliency,
                 artifact::peaks, artifact::manifest})
    names.emplace_back(n);
  for (auto level : {"underestimation", "correct", "overestimation", "G1", "G2", "G3", "G4"})
    names.push_back(fmt::format("km_{}.csv", level));
  return names;
}

namespace {

void embed(std::string& out, const ExperimentConfig& config, std::string_view title, std::string_view file) {
  out += fmt::format("\n[{}] {}\n", title, file);
  const fs::path p = path_of(config, file);
  if (!fs::exists(p)) {
    out += "  (missing)\n";
    return;
  }
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) out += "  " + line + "\n";
}

}  // namespace

std::vector<std::string> run_report(const ExperimentConfig& config) {
  std::vector<std::string> missing;
  std::string out;
  out += "ppgage run report\n";
  out += fmt::format("tool_version: {}\n", tool_version);
  out += fmt::format("config_hash: {}\n", config_hash(config));
  out += fmt::format("seed: {}\n", config.seed);
  out += fmt::format("loss: {}\n", nn::to_string(config.train.loss));
  out += fmt::format("threshold: {}\n", to_string(config.analysis.threshold));
  out += fmt::format("epochs: {}\n", config.train.epochs);

  // Training curve: last row only; the full file is in the index.
  out += fmt::format("\n[training] {}\n", artifact::metrics);
  if (const fs::path p = path_of(config, artifact::metrics); fs::exists(p)) {
    const CsvTable t = read_csv(p);
    out += fmt::format("  epochs_logged: {}\n", t.rows.size());
    if (!t.rows.empty())
      for (std::size_t j = 0; j < t.header.size(); ++j)
        out += fmt::format("  final_{}: {}\n", t.header[j], t.rows.back()[j]);
  } else {
    out += "  (missing)\n";
  }
  embed(out, config, "evaluation", artifact::evaluation);
  embed(out, config, "cox", artifact::cox_table);
  embed(out, config, "logrank", artifact::logrank);
  embed(out, config, "serial", artifact::serial_table);
  embed(out, config, "odds_ratios", artifact::or_table);
  embed(out, config, "saliency_peaks", artifact::peaks);

  out += "\n[files]\n";
  for (const std::string& name : expected_artifacts(config)) {
    const fs::path p = path_of(config, name);
    if (fs::exists(p)) {
      // The manifest carries wall times, so its size is not stable.
      if (name == artifact::manifest)
        out += fmt::format("  {} present\n", name);
      else
        out += fmt::format("  {} {} bytes\n", name, fs::file_size(p));
    } else {
      out += fmt::format("  {} MISSING\n", name);
      missing.push_back(name);
    }
  }
  out += fmt::format("\n[missing] {}\n", missing.size());
  for (const auto& m : missing) out += "  " + m + "\n";

  fs::create_directories(config.out_dir);
  write_text(path_of(config, artifact::summary), out);
  if (!missing.empty()) log::warn("report lists {} missing artifacts", missing.size());
  return missing;
}

void run_all(const ExperimentConfig& config) {
  run_generate(config);
  run_train(config);
  run_evaluate(config);
  run_analyze(config);
  run_saliency(config);
  const auto missing = run_report(config);
  if (!missing.empty())
    throw Error(ErrorCode::missing_artifact, fmt::format("run finished with missing artifacts: {}", fmt::join(missing, ", ")));
}

}  // namespace ppgage::pipeline
