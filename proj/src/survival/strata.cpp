#include "ppgage/survival/strata.hpp"

#include <cmath>

#include "ppgage/error.hpp"

namespace ppgage::survival {

std::string_view to_string(GapStratum s) {
  switch (s) {
    case GapStratum::underestimation: return "underestimation";
    case GapStratum::correct: return "correct";
    case GapStratum::overestimation: return "overestimation";
  }
  return "?";
}

std::string_view to_string(SerialGroup g) {
  switch (g) {
    case SerialGroup::G1: return "G1";
    case SerialGroup::G2: return "G2";
    case SerialGroup::G3: return "G3";
    case SerialGroup::G4: return "G4";
  }
  return "?";
}

GapStratum stratify_gap(double gap, double threshold) {
  require(threshold > 0.0 && std::isfinite(threshold), "stratification threshold must be positive");
  require(!std::isnan(gap), "gap is NaN");
  if (gap < -threshold) return GapStratum::underestimation;
  if (gap > threshold) return GapStratum::overestimation;
  return GapStratum::correct;
}

std::vector<GapStratum> stratify_gaps(std::span<const double> gaps, double threshold) {
  std::vector<GapStratum> out;
  out.reserve(gaps.size());
  for (double g : gaps) out.push_back(stratify_gap(g, threshold));
  return out;
}

SerialGroup serial_group(GapStratum first, GapStratum second) {
  const bool over1 = first == GapStratum::overestimation;
  const bool over2 = second == GapStratum::overestimation;
  if (over1 && over2) return SerialGroup::G1;
  if (!over1 && over2) return SerialGroup::G2;
  if (over1) return SerialGroup::G3;
  return SerialGroup::G4;
}

SerialGrouping serial_groups(std::span<const double> first_gaps, std::span<const double> second_gaps,
                             double threshold) {
  require(first_gaps.size() == second_gaps.size(), "serial gap lists differ in length");
  SerialGrouping out;
  out.groups.reserve(first_gaps.size());
  for (std::size_t i = 0; i < first_gaps.size(); ++i) {
    if (std::isnan(first_gaps[i]) || std::isnan(second_gaps[i])) {
      out.groups.emplace_back(std::nullopt);
      ++out.excluded;
      continue;
    }
    out.groups.emplace_back(
        serial_group(stratify_gap(first_gaps[i], threshold), stratify_gap(second_gaps[i], threshold)));
  }
  return out;
}

double gap_sd_threshold(std::span<const double> gaps) {
  require(gaps.size() >= 2, "need at least two gaps for a standard deviation");
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(gaps.size());
  double ss = 0.0;
  for (double g : gaps) ss += (g - mean) * (g - mean);
  const double sd = std::sqrt(ss / static_cast<double>(gaps.size() - 1));
  require(sd > 0.0, "gap standard deviation is zero");
  return sd;
}

}  // namespace ppgage::survival
