#include "ppgage/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ppgage/dist_loss.hpp"
#include "ppgage/error.hpp"
#include "ppgage/log.hpp"
#include "ppgage/rng.hpp"
#include "ppgage/soft_sort.hpp"
#include "ppgage/survival/agreement.hpp"

namespace ppgage::nn {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "dist") return LossKind::dist;
  if (name == "mae") return LossKind::mae;
  throw InvalidInput("unknown loss '" + name + "' (expected dist or mae)");
}

std::string to_string(LossKind kind) { return kind == LossKind::dist ? "dist" : "mae"; }

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset d;
  d.waveforms = Tensor(rows.size(), waveforms.channels, waveforms.length);
  d.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < size(), "dataset row out of range");
    const auto src = waveforms.sample(rows[i]);
    std::copy(src.begin(), src.end(), d.waveforms.sample(i).begin());
    d.labels.push_back(labels[rows[i]]);
  }
  return d;
}

NetConfig with_label_scaling(NetConfig config, std::span<const double> labels) {
  require(!labels.empty(), "cannot fit output scaling without labels");
  const double n = static_cast<double>(labels.size());
  const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : labels) ss += (y - mean) * (y - mean);
  const double sd = std::sqrt(ss / n);
  config.output_shift = mean;
  config.output_scale = sd > 0.0 ? sd : 1.0;
  return config;
}

LabelGrid training_label_grid(const TrainConfig& config, std::span<const double> labels) {
  const auto grid = integer_grid(config.label_min, config.label_max);
  return estimate_label_density(labels, config.kde_bandwidth, grid);
}

TrainingState init_training(const Net1D& net, const TrainConfig& config) {
  TrainingState s;
  s.params = net.init_params(derive_seed(config.seed, "init"));
  s.adam = AdamState::for_size(s.params.values.size(), config.lr, config.weight_decay);
  s.best = s.params;
  return s;
}

std::vector<double> predict(const Net1D& net, const ModelParams& params, const Tensor& waveforms,
                            std::size_t chunk) {
  std::vector<double> out;
  out.reserve(waveforms.batch);
  for (std::size_t start = 0; start < waveforms.batch; start += chunk) {
    const std::size_t n = std::min(chunk, waveforms.batch - start);
    Tensor part(n, waveforms.channels, waveforms.length);
    std::copy_n(waveforms.data.begin() + static_cast<std::ptrdiff_t>(start * waveforms.sample_size()),
                n * waveforms.sample_size(), part.data.begin());
    const auto p = net.forward(params, part);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<EpochLog> train_epochs(const Net1D& net, const TrainConfig& config, const Dataset& train,
                                   const Dataset& selection, const LabelGrid& grid, TrainingState& state,
                                   std::size_t until_epoch, const EpochCallback& on_epoch) {
  require(train.size() >= 1, "training set is empty");
  require(selection.size() >= 1, "selection set is empty");
  require(config.batch_size >= 1, "batch size must be >= 1");
  net.check_params(state.params);
  for (const Dataset* d : {&train, &selection}) {
    for (double v : d->waveforms.data) require(std::isfinite(v), "waveforms must be finite");
    for (double v : d->labels) require(std::isfinite(v), "labels must be finite");
  }
  if (config.loss == LossKind::dist && config.batch_size < 64) {
    log::warn("batch size {} < 64: the quantized label distribution is crude", config.batch_size);
  }

  const DistLossOptions loss_options{config.sort_epsilon, config.distribution_weight};
  const std::size_t n = train.size();
  const std::size_t L = train.waveforms.length;
  std::vector<double> grads(net.parameter_count());
  std::vector<EpochLog> logs;

  for (std::size_t epoch = state.epochs_done + 1; epoch <= until_epoch; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(derive_seed(config.seed, "shuffle"), epoch));
    shuffle(order, rng);

    double loss_sum = 0.0, sample_sum = 0.0, dist_sum = 0.0;
    std::size_t step = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++step) {
      const std::size_t b = std::min(config.batch_size, n - start);
      Tensor x(b, 1, L);
      std::vector<double> y(b);
      for (std::size_t i = 0; i < b; ++i) {
        const auto src = train.waveforms.sample(order[start + i]);
        std::copy(src.begin(), src.end(), x.sample(i).begin());
        y[i] = train.labels[order[start + i]];
      }

      Net1D::Cache cache;
      const std::vector<double> pred = net.forward(state.params, x, cache);
      for (std::size_t i = 0; i < b; ++i) {
        if (!std::isfinite(pred[i])) {
          throw Error(ErrorCode::non_finite,
                      fmt::format("non-finite prediction at epoch {} step {} (batch row {})", epoch, step, i));
        }
      }
      LossBreakdown loss = config.loss == LossKind::dist ? dist_loss(pred, y, grid, loss_options)
                                                         : mae_loss(pred, y);
      if (config.loss == LossKind::mae) {
        // Logged only; does not enter the gradient.
        const auto pseudo = build_pseudo_labels(grid, allocate_frequencies(grid, b));
        const auto sorted = soft_sort(pred, config.sort_epsilon);
        double s = 0.0;
        for (std::size_t j = 0; j < b; ++j) s += std::abs(sorted.sorted_values[j] - pseudo.values[j]);
        loss.distributional_mae = s / static_cast<double>(b);
      }
      if (!std::isfinite(loss.total)) {
        throw Error(ErrorCode::non_finite, fmt::format("non-finite loss at epoch {} step {}", epoch, step));
      }
      const double w = static_cast<double>(b);
      loss_sum += loss.total * w;
      sample_sum += loss.sample_mae * w;
      dist_sum += loss.distributional_mae * w;

      std::fill(grads.begin(), grads.end(), 0.0);
      net.backward(state.params, cache, loss.grad, grads, nullptr);
      adam_step(state.adam, state.params.values, grads);
    }

    EpochLog row;
    row.epoch = epoch;
    const double nn = static_cast<double>(n);
    row.train_loss = loss_sum / nn;
    row.train_sample_mae = sample_sum / nn;
    row.train_dist_mae = dist_sum / nn;
    const std::vector<double> sel_pred = predict(net, state.params, selection.waveforms);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < sel_pred.size(); ++i) abs_sum += std::abs(sel_pred[i] - selection.labels[i]);
    row.selection_mae = abs_sum / static_cast<double>(sel_pred.size());
    row.selection_pearson = survival::pearson_or_nan(sel_pred, selection.labels);
    if (!std::isfinite(row.selection_mae)) {
      throw Error(ErrorCode::non_finite, fmt::format("non-finite selection MAE after epoch {}", epoch));
    }

    state.epochs_done = epoch;
    if (row.selection_mae < state.best_selection_mae) {
      state.best_selection_mae = row.selection_mae;
      state.best_epoch = epoch;
      state.best = state.params;
    }
    log::info("epoch {:>3}  loss {:.4f}  sample_mae {:.4f}  dist_mae {:.4f}  selection_mae {:.4f}", epoch,
              row.train_loss, row.train_sample_mae, row.train_dist_mae, row.selection_mae);
    logs.push_back(row);
    if (on_epoch) on_epoch(row, state);
  }
  return logs;
}

TrainResult train(const NetConfig& net_config, const TrainConfig& config, const Dataset& train_set,
                  const Dataset& selection, Backend backend) {
  TrainResult r;
  r.net_config = with_label_scaling(net_config, train_set.labels);
  const Net1D net(r.net_config, backend);
  const LabelGrid grid = training_label_grid(config, train_set.labels);
  r.state = init_training(net, config);
  r.log = train_epochs(net, config, train_set, selection, grid, r.state, config.epochs);
  return r;
}

}  // namespace ppgage::nn
