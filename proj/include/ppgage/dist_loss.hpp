#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ppgage/label_distribution.hpp"

namespace ppgage {

struct LossBreakdown {
  double sample_mae = 0.0;
  double distributional_mae = 0.0;
  double total = 0.0;
  std::vector<double> grad;  // d total / d predictions
};

struct DistLossOptions {
  double epsilon = 1.0;              // soft sort regularization
  double distribution_weight = 1.0;  // weight on the distributional term
};

/// Sample-wise MAE plus the MAE between the pseudo-label sequence (from the
/// global label grid at this batch size) and the soft-sorted predictions.
LossBreakdown dist_loss(std::span<const double> predictions, std::span<const double> labels,
                        const LabelGrid& grid, const DistLossOptions& options = {});

/// Plain MAE with the same breakdown layout (distributional term zero).
LossBreakdown mae_loss(std::span<const double> predictions, std::span<const double> labels);

/// Analytic dist_loss gradient against central finite differences on a random
/// non-degenerate batch of size `batch`. Returns max|analytic - fd| / max|fd|.
double dist_loss_grad_check(std::uint64_t seed, std::size_t batch = 32, double epsilon = 0.5);

}  // namespace ppgage
