#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppgage/nn/saliency.hpp"
#include "ppgage/nn/train.hpp"
#include "ppgage/pipeline/artifacts.hpp"
#include "ppgage/pipeline/config.hpp"
#include "ppgage/synthetic_ppg.hpp"

namespace ppgage::pipeline {

/// Role per record: serial subjects are held out of development, the rest are
/// split by subject with the configured ratios.
std::vector<Role> assign_roles(std::span<const PpgRecord> records, std::span<const double> ratios,
                               std::uint64_t seed);

/// Training tensors for the records with the given role.
nn::Dataset make_dataset(std::span<const PpgRecord> records, std::span<const Role> roles, Role role);

/// MAE over the lowest and highest `fraction` of labels (ceil(n * fraction)
/// rows each, ranked by label with ties in input order).
double tail_mae(std::span<const double> predictions, std::span<const double> labels, double fraction = 0.1);

struct SaliencyProbe {
  double age = 0.0;
  std::size_t n = 0;  // records within the age window
  std::vector<double> map;
  std::size_t argmax = 0;
  double systolic_index = 0.0;
  double diastolic_index = 0.0;
  double distance = 0.0;  // |argmax - nearest generator peak|, samples
};

/// Mean saliency over records whose calendar age lies within `window` years
/// of `age`. n == 0 leaves the map empty.
SaliencyProbe saliency_probe(const nn::Net1D& net, const nn::ModelParams& params,
                             std::span<const PpgRecord> records, const MorphologyModel& morphology, double age,
                             double window, double sigma);

// Stages. Each reads its inputs from config.out_dir, writes its artifacts
// there and records them in the run manifest.
void run_generate(const ExperimentConfig& config);
/// With resume, continues from the saved checkpoint up to config.train.epochs;
/// the metrics file ends byte-identical to an uninterrupted run.
void run_train(const ExperimentConfig& config, bool resume = false);
void run_evaluate(const ExperimentConfig& config);
void run_analyze(const ExperimentConfig& config);
void run_saliency(const ExperimentConfig& config);
/// Returns the names of missing artifacts (also listed in the report).
std::vector<std::string> run_report(const ExperimentConfig& config);
void run_all(const ExperimentConfig& config);

/// Every artifact a complete run produces, in report order.
std::vector<std::string> expected_artifacts(const ExperimentConfig& config);

}  // namespace ppgage::pipeline
