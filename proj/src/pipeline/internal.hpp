#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "ppgage/pipeline/artifacts.hpp"
#include "ppgage/pipeline/config.hpp"
#include "ppgage/synthetic_ppg.hpp"

namespace ppgage::pipeline::detail {

inline std::filesystem::path path_of(const ExperimentConfig& c, std::string_view name) {
  return c.out_dir / std::string(name);
}

std::vector<PpgRecord> load_cohort(const ExperimentConfig& config);
std::vector<Role> load_roles(const ExperimentConfig& config, std::span<const PpgRecord> records);

struct PredictionRow {
  std::uint64_t id = 0;
  int visit = 0;
  Role role = Role::train;
  double age = 0.0;
  double prediction = 0.0;
  double gap = 0.0;
  double event_time = 0.0;
  int event = 0;
};

std::vector<PredictionRow> load_predictions(const ExperimentConfig& config);

/// Writes config.json and records the stage's files and duration in the manifest.
void record_stage(const ExperimentConfig& config, const std::string& stage, std::vector<std::string> files,
                  std::chrono::steady_clock::time_point started);

}  // namespace ppgage::pipeline::detail
