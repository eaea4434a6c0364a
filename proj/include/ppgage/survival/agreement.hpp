#pragma once

#include <span>

namespace ppgage::survival {

struct Agreement {
  double pearson = 0.0;
  double mae = 0.0;  // years
};

/// Pearson correlation and MAE between predictions and labels. Throws
/// Error(undefined_statistic) when either side has zero variance.
Agreement agreement_metrics(std::span<const double> predictions, std::span<const double> labels);

/// Pearson correlation, NaN instead of throwing on zero variance.
double pearson_or_nan(std::span<const double> a, std::span<const double> b);

}  // namespace ppgage::survival
