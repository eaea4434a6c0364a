#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ppgage/label_distribution.hpp"
#include "ppgage/nn/adam.hpp"
#include "ppgage/nn/net1d.hpp"

namespace ppgage::nn {

enum class LossKind { dist, mae };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  double lr = 0.003;
  double weight_decay = 1e-4;
  LossKind loss = LossKind::dist;
  double kde_bandwidth = 0.5;
  int label_min = 21;
  int label_max = 111;
  double sort_epsilon = 1.0;
  double distribution_weight = 1.0;
  std::uint64_t seed = 0;
};

/// Waveforms (n, 1, length) with one label per row.
struct Dataset {
  Tensor waveforms;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
  Dataset subset(std::span<const std::size_t> rows) const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_sample_mae = 0.0;
  double train_dist_mae = 0.0;
  double selection_mae = 0.0;
  double selection_pearson = 0.0;
};

struct TrainingState {
  ModelParams params;
  AdamState adam;
  std::size_t epochs_done = 0;
  ModelParams best;
  double best_selection_mae = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
};

/// Output scaling taken from the training labels: shift = mean, scale = sd.
NetConfig with_label_scaling(NetConfig config, std::span<const double> labels);

/// KDE label grid over the configured integer label range.
LabelGrid training_label_grid(const TrainConfig& config, std::span<const double> labels);

TrainingState init_training(const Net1D& net, const TrainConfig& config);

using EpochCallback = std::function<void(const EpochLog&, const TrainingState&)>;

/// Runs epochs epochs_done+1 .. until_epoch of minibatch Adam. Shuffling uses a
/// per-epoch stream, so resuming from a saved state reproduces an
/// uninterrupted run exactly. Throws Error(non_finite) on a non-finite loss.
std::vector<EpochLog> train_epochs(const Net1D& net, const TrainConfig& config, const Dataset& train,
                                   const Dataset& selection, const LabelGrid& grid, TrainingState& state,
                                   std::size_t until_epoch, const EpochCallback& on_epoch = {});

struct TrainResult {
  NetConfig net_config;
  TrainingState state;
  std::vector<EpochLog> log;
};

/// Full run from scratch; the network output scaling is fitted to `train`.
TrainResult train(const NetConfig& net_config, const TrainConfig& config, const Dataset& train,
                  const Dataset& selection, Backend backend = Backend::parallel);

/// Forward pass in chunks.
std::vector<double> predict(const Net1D& net, const ModelParams& params, const Tensor& waveforms,
                            std::size_t chunk = 512);

}  // namespace ppgage::nn
