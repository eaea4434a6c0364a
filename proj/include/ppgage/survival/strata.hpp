#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ppgage::survival {

enum class GapStratum { underestimation, correct, overestimation };

std::string_view to_string(GapStratum s);

/// gap < -t: under; -t <= gap <= t: correct; gap > t: over.
GapStratum stratify_gap(double gap, double threshold);
std::vector<GapStratum> stratify_gaps(std::span<const double> gaps, double threshold);

enum class SerialGroup { G1, G2, G3, G4 };

std::string_view to_string(SerialGroup g);

/// G1 over/over, G2 not-over/over, G3 over/not-over, G4 not-over/not-over.
SerialGroup serial_group(GapStratum first, GapStratum second);

struct SerialGrouping {
  std::vector<std::optional<SerialGroup>> groups;  // nullopt where a visit is missing
  std::size_t excluded = 0;
};

/// NaN marks a missing visit; such subjects are excluded and counted.
SerialGrouping serial_groups(std::span<const double> first_gaps, std::span<const double> second_gaps,
                             double threshold);

/// Sample standard deviation of the gaps, the data-derived threshold.
double gap_sd_threshold(std::span<const double> gaps);

}  // namespace ppgage::survival
