#include "ppgage/survival/km.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppgage/error.hpp"
#include "ppgage/survival/common.hpp"

namespace ppgage::survival {

double KmCurve::survival_at(double t) const {
  const auto it = std::upper_bound(time.begin(), time.end(), t);
  if (it == time.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - time.begin()) - 1];
}

KmCurve km_estimate(std::span<const double> time, std::span<const int> event) {
  require(!time.empty(), "Kaplan-Meier needs at least one record");
  require(time.size() == event.size(), "time and event lengths differ");
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  KmCurve c;
  double s = 1.0;
  double greenwood = 0.0;
  std::size_t at_risk = time.size();
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = time[order[i]];
    std::size_t d = 0, removed = 0;
    for (; i < order.size() && time[order[i]] == t; ++i, ++removed) d += event[order[i]] == 1 ? 1 : 0;
    if (d > 0) {
      const double n = static_cast<double>(at_risk);
      const double dd = static_cast<double>(d);
      s *= 1.0 - dd / n;
      if (at_risk > d) greenwood += dd / (n * (n - dd));
      c.time.push_back(t);
      c.survival.push_back(s);
      c.at_risk.push_back(at_risk);
      c.events.push_back(d);
      const double var = s > 0.0 ? s * s * greenwood : 0.0;
      c.variance.push_back(var);
      if (s > 0.0) {
        const double half = z975 * std::sqrt(greenwood);
        c.ci_low.push_back(s * std::exp(-half));
        c.ci_high.push_back(std::min(1.0, s * std::exp(half)));
      } else {
        c.ci_low.push_back(0.0);
        c.ci_high.push_back(0.0);
      }
    }
    at_risk -= removed;
  }
  return c;
}

}  // namespace ppgage::survival
