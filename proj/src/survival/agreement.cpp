#include "ppgage/survival/agreement.hpp"

#include <cmath>
#include <limits>

#include "ppgage/error.hpp"

namespace ppgage::survival {

namespace {

struct Moments {
  double pearson;
  double mae;
  bool defined;
};

// Single pass with running means and co-moments.
Moments moments(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "prediction and label lengths differ");
  require(a.size() >= 2, "agreement metrics need at least two pairs");
  double mean_a = 0.0, mean_b = 0.0, m2a = 0.0, m2b = 0.0, cab = 0.0, abs_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    mean_a += da / k;
    mean_b += db / k;
    m2a += da * (a[i] - mean_a);
    m2b += db * (b[i] - mean_b);
    cab += da * (b[i] - mean_b);
    abs_sum += std::abs(a[i] - b[i]);
  }
  const double mae = abs_sum / static_cast<double>(a.size());
  if (!(m2a > 0.0) || !(m2b > 0.0)) return {std::numeric_limits<double>::quiet_NaN(), mae, false};
  return {cab / std::sqrt(m2a * m2b), mae, true};
}

}  // namespace

Agreement agreement_metrics(std::span<const double> predictions, std::span<const double> labels) {
  const Moments m = moments(predictions, labels);
  if (!m.defined) throw Error(ErrorCode::undefined_statistic, "Pearson correlation undefined: zero variance");
  return {m.pearson, m.mae};
}

double pearson_or_nan(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "prediction and label lengths differ");
  if (a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return moments(a, b).pearson;
}

}  // namespace ppgage::survival
