#include "ppgage/survival/logrank.hpp"

#include <algorithm>
#include <map>

#include "ppgage/error.hpp"
#include "ppgage/survival/common.hpp"

namespace ppgage::survival {

LogRankResult log_rank(std::span<const double> time_a, std::span<const int> event_a,
                       std::span<const double> time_b, std::span<const int> event_b) {
  require(!time_a.empty() && !time_b.empty(), "log-rank test needs two non-empty groups");
  require(time_a.size() == event_a.size() && time_b.size() == event_b.size(), "time and event lengths differ");

  // time -> (removed_a, removed_b, deaths_a, deaths_b)
  struct Tally {
    double removed_a = 0, removed_b = 0, deaths_a = 0, deaths_b = 0;
  };
  std::map<double, Tally> by_time;
  for (std::size_t i = 0; i < time_a.size(); ++i) {
    auto& t = by_time[time_a[i]];
    t.removed_a += 1;
    t.deaths_a += event_a[i] == 1 ? 1 : 0;
  }
  for (std::size_t i = 0; i < time_b.size(); ++i) {
    auto& t = by_time[time_b[i]];
    t.removed_b += 1;
    t.deaths_b += event_b[i] == 1 ? 1 : 0;
  }

  LogRankResult r;
  double n_a = static_cast<double>(time_a.size());
  double n_b = static_cast<double>(time_b.size());
  double total_deaths = 0.0;
  for (const auto& [t, tally] : by_time) {
    const double d = tally.deaths_a + tally.deaths_b;
    if (d > 0) {
      const double n = n_a + n_b;
      r.observed_a += tally.deaths_a;
      r.expected_a += d * n_a / n;
      if (n > 1) r.variance += n_a * n_b * d * (n - d) / (n * n * (n - 1.0));
      total_deaths += d;
    }
    n_a -= tally.removed_a;
    n_b -= tally.removed_b;
  }
  if (total_deaths == 0.0) throw Error(ErrorCode::undefined_statistic, "log-rank test: no events in either group");
  const double diff = r.observed_a - r.expected_a;
  if (r.variance > 0.0) {
    r.statistic = diff * diff / r.variance;
  } else if (diff != 0.0) {
    throw Error(ErrorCode::undefined_statistic, "log-rank test: zero variance");
  }
  r.p_value = chi2_1df_p(r.statistic);
  return r;
}

}  // namespace ppgage::survival
