#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ppgage {

/// Smoothed label distribution evaluated on a discrete label grid.
struct LabelGrid {
  std::vector<double> labels;  // strictly increasing, years
  std::vector<double> probs;   // sums to 1
  double bandwidth = 0.5;
  double range_min = 0.0;
  double range_max = 0.0;

  std::size_t size() const { return labels.size(); }
};

/// Integer-rounded frequency allocation of a batch over the label grid.
struct FrequencyAllocation {
  std::size_t batch_size = 0;
  std::vector<long> floors;
  long residual = 0;
  std::vector<int> aux;
  std::vector<long> adjusted;
};

struct PseudoLabelSequence {
  std::vector<double> values;  // non-decreasing, length batch_size
};

/// Integer grid lo, lo+1, ..., hi.
std::vector<double> integer_grid(int lo, int hi);

/// Gaussian KDE of `labels` evaluated on `grid` and normalized to a
/// probability mass function over the grid points. Labels are rounded to the
/// nearest integer year first.
LabelGrid estimate_label_density(std::span<const double> labels, double bandwidth,
                                 std::span<const double> grid);

/// Serial reference for estimate_label_density (same contract, no threading).
LabelGrid estimate_label_density_serial(std::span<const double> labels, double bandwidth,
                                        std::span<const double> grid);

/// Floors of batch_size * p_i with the residual split between the first
/// ceil(r/2) and last floor(r/2) grid positions.
FrequencyAllocation allocate_frequencies(const LabelGrid& grid, std::size_t batch_size);

/// Same as above from raw probabilities (used where no LabelGrid exists).
FrequencyAllocation allocate_frequencies(std::span<const double> probs, std::size_t batch_size);

/// Each grid label replicated by its adjusted frequency, ascending.
PseudoLabelSequence build_pseudo_labels(const LabelGrid& grid, const FrequencyAllocation& alloc);
PseudoLabelSequence build_pseudo_labels(std::span<const double> labels,
                                        std::span<const long> adjusted);

}  // namespace ppgage
