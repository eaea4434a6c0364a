#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppgage/nn/net1d.hpp"
#include "ppgage/nn/train.hpp"
#include "ppgage/synthetic_ppg.hpp"

namespace ppgage::pipeline {

enum class ThresholdMode { years9, years15, sd };

ThresholdMode parse_threshold_mode(const std::string& text);  // "9", "15" or "sd"
std::string to_string(ThresholdMode mode);

struct AnalysisConfig {
  ThresholdMode threshold = ThresholdMode::years9;
  std::size_t spline_knots = 3;
  double curve_min = -20.0;  // gap grid for the spline HR curve, years
  double curve_max = 20.0;
  double curve_step = 1.0;
  // Binary endpoint for the logistic model: event within this many years,
  // strata at the wider ICU-style threshold.
  double logistic_horizon = 5.0;
  double logistic_threshold = 15.0;
  double saliency_sigma = 2.0;
  std::vector<double> saliency_ages{40.0, 55.0, 70.0};
  double saliency_window = 2.0;  // records within +-window years of a probe age
};

/// Everything a run needs. Stage seeds derive from `seed` and the stage name.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "ppgage_run";
  CohortSpec cohort;
  std::vector<double> split_ratios{8.0, 1.0, 1.0};
  nn::NetConfig net;
  nn::TrainConfig train;
  AnalysisConfig analysis;

  void validate() const;
};

/// Reads a JSON config. Every section and key is optional; unknown keys are
/// rejected so typos do not silently fall back to defaults.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const nlohmann::json& j);

/// Canonical JSON form with every field spelled out.
nlohmann::json to_json(const ExperimentConfig& config);

/// FNV-1a of the canonical JSON text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Per-stage seeds.
std::uint64_t stage_seed(const ExperimentConfig& config, std::string_view stage);

}  // namespace ppgage::pipeline
