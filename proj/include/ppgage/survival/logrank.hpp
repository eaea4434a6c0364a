#pragma once

#include <span>

namespace ppgage::survival {

struct LogRankResult {
  double statistic = 0.0;  // chi-square, 1 df
  double p_value = 1.0;
  double observed_a = 0.0;
  double expected_a = 0.0;
  double variance = 0.0;
};

/// Two-group log-rank test with the hypergeometric variance.
/// Throws Error(undefined_statistic) when neither group has an event.
LogRankResult log_rank(std::span<const double> time_a, std::span<const int> event_a,
                       std::span<const double> time_b, std::span<const int> event_b);

}  // namespace ppgage::survival
