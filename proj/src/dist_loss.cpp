#include "ppgage/dist_loss.hpp"

#include <algorithm>
#include <cmath>

#include "ppgage/error.hpp"
#include "ppgage/rng.hpp"
#include "ppgage/soft_sort.hpp"

namespace ppgage {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_batch(std::span<const double> predictions, std::span<const double> labels) {
  require(!predictions.empty(), "loss needs a batch of at least one prediction");
  require(predictions.size() == labels.size(), "predictions and labels differ in length");
}

}  // namespace

LossBreakdown mae_loss(std::span<const double> predictions, std::span<const double> labels) {
  check_batch(predictions, labels);
  const double inv_b = 1.0 / static_cast<double>(predictions.size());
  LossBreakdown out;
  out.grad.resize(predictions.size());
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - labels[i];
    s += std::abs(r);
    out.grad[i] = sign(r) * inv_b;
  }
  out.sample_mae = s * inv_b;
  out.total = out.sample_mae;
  return out;
}

LossBreakdown dist_loss(std::span<const double> predictions, std::span<const double> labels,
                        const LabelGrid& grid, const DistLossOptions& options) {
  check_batch(predictions, labels);
  require(options.distribution_weight >= 0.0, "distribution weight must be non-negative");
  const std::size_t b = predictions.size();
  const double inv_b = 1.0 / static_cast<double>(b);

  LossBreakdown out = mae_loss(predictions, labels);

  const PseudoLabelSequence pseudo = build_pseudo_labels(grid, allocate_frequencies(grid, b));
  const SoftSortResult sorted = soft_sort(predictions, options.epsilon);

  std::vector<double> upstream(b);
  double s = 0.0;
  for (std::size_t j = 0; j < b; ++j) {
    const double r = sorted.sorted_values[j] - pseudo.values[j];
    s += std::abs(r);
    upstream[j] = options.distribution_weight * sign(r) * inv_b;
  }
  out.distributional_mae = s * inv_b;
  out.total = out.sample_mae + options.distribution_weight * out.distributional_mae;

  const std::vector<double> g = soft_sort_vjp(predictions, upstream, sorted);
  for (std::size_t i = 0; i < b; ++i) out.grad[i] += g[i];
  return out;
}

double dist_loss_grad_check(std::uint64_t seed, std::size_t batch, double epsilon) {
  Rng rng(derive_seed(seed, "dist_loss_grad_check"));
  const auto grid_labels = integer_grid(30, 90);
  std::vector<double> train_labels(400);
  for (double& y : train_labels) y = std::clamp(std::round(normal(rng, 60.0, 8.0)), 30.0, 90.0);
  const LabelGrid grid = estimate_label_density(train_labels, 0.5, grid_labels);
  const DistLossOptions opts{epsilon, 1.0};

  // Sorted gaps are either well below or well above 1/epsilon, so the soft
  // sort has both singleton and pooled blocks and no pooling decision sits
  // near its threshold. Fractional offsets keep residuals away from zero.
  std::vector<double> labels(batch);
  std::vector<double> pred(batch);
  double level = 40.25;
  for (std::size_t i = 0; i < batch; ++i) {
    labels[i] = std::round(uniform(rng, 40.0, 80.0));
    pred[i] = level;
    const double gap = bernoulli(rng, 0.5) ? 0.45 / epsilon : 1.6 / epsilon;
    level += gap + uniform(rng, 0.0, 0.1 / epsilon);
  }
  shuffle(pred, rng);

  const LossBreakdown base = dist_loss(pred, labels, grid, opts);
  const double h = 1e-6;
  double max_diff = 0.0;
  double max_fd = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<double> p = pred;
    p[i] = pred[i] + h;
    const double up = dist_loss(p, labels, grid, opts).total;
    p[i] = pred[i] - h;
    const double down = dist_loss(p, labels, grid, opts).total;
    const double fd = (up - down) / (2.0 * h);
    max_diff = std::max(max_diff, std::abs(fd - base.grad[i]));
    max_fd = std::max(max_fd, std::abs(fd));
  }
  return max_diff / std::max(max_fd, 1e-12);
}

}  // namespace ppgage
