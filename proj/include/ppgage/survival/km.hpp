#pragma once

#include <span>
#include <vector>

namespace ppgage::survival {

/// Product-limit estimate, one step per distinct event time.
struct KmCurve {
  std::vector<double> time;
  std::vector<double> survival;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;
  std::vector<double> variance;  // Greenwood
  std::vector<double> ci_low;    // log-transformed 95% interval
  std::vector<double> ci_high;

  /// S(t) as a right-continuous step function; 1 before the first event.
  double survival_at(double t) const;
};

KmCurve km_estimate(std::span<const double> time, std::span<const int> event);

}  // namespace ppgage::survival
