#include "ppgage/label_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "ppgage/error.hpp"

namespace ppgage {

namespace {

void check_grid(std::span<const double> grid) {
  require(!grid.empty(), "label grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(std::isfinite(grid[i]), "label grid contains a non-finite value");
    if (i > 0) require(grid[i] > grid[i - 1], "label grid must be strictly increasing");
  }
}

// Rounded label -> multiplicity. Ordered map keeps the summation order fixed.
std::map<double, double> rounded_counts(std::span<const double> labels) {
  require(!labels.empty(), "no labels given for density estimation");
  std::map<double, double> counts;
  for (double y : labels) {
    require(std::isfinite(y), "non-finite label");
    counts[std::round(y)] += 1.0;
  }
  return counts;
}

double kernel_sum(double x, const std::vector<std::pair<double, double>>& counts, double inv_two_var) {
  double s = 0.0;
  for (const auto& [y, c] : counts) {
    const double d = x - y;
    s += c * std::exp(-d * d * inv_two_var);
  }
  return s;
}

LabelGrid finish(std::span<const double> grid, std::vector<double> mass, double bandwidth) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvalidInput("label density vanishes on the grid; labels lie outside the label range");
  }
  for (double& m : mass) m /= total;
  LabelGrid out;
  out.labels.assign(grid.begin(), grid.end());
  out.probs = std::move(mass);
  out.bandwidth = bandwidth;
  out.range_min = grid.front();
  out.range_max = grid.back();
  return out;
}

template <bool Parallel>
LabelGrid estimate_impl(std::span<const double> labels, double bandwidth, std::span<const double> grid) {
  require(bandwidth > 0.0 && std::isfinite(bandwidth), "KDE bandwidth must be positive");
  check_grid(grid);
  const auto counted = rounded_counts(labels);
  const std::vector<std::pair<double, double>> counts(counted.begin(), counted.end());
  const double inv_two_var = 1.0 / (2.0 * bandwidth * bandwidth);

  std::vector<double> mass(grid.size());
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) mass[i] = kernel_sum(grid[i], counts, inv_two_var);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) mass[i] = kernel_sum(grid[i], counts, inv_two_var);
  }
  return finish(grid, std::move(mass), bandwidth);
}

}  // namespace

std::vector<double> integer_grid(int lo, int hi) {
  require(hi >= lo, "label range is empty");
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (int v = lo; v <= hi; ++v) g.push_back(v);
  return g;
}

LabelGrid estimate_label_density(std::span<const double> labels, double bandwidth,
                                 std::span<const double> grid) {
  return estimate_impl<true>(labels, bandwidth, grid);
}

LabelGrid estimate_label_density_serial(std::span<const double> labels, double bandwidth,
                                        std::span<const double> grid) {
  return estimate_impl<false>(labels, bandwidth, grid);
}

FrequencyAllocation allocate_frequencies(std::span<const double> probs, std::size_t batch_size) {
  require(batch_size >= 1, "batch size must be at least 1");
  require(!probs.empty(), "empty probability vector");
  const auto L = static_cast<long>(probs.size());
  const auto B = static_cast<long>(batch_size);

  FrequencyAllocation a;
  a.batch_size = batch_size;
  a.floors.resize(probs.size());
  long floor_sum = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    require(probs[i] >= 0.0 && std::isfinite(probs[i]), "probabilities must be finite and non-negative");
    a.floors[i] = static_cast<long>(std::floor(static_cast<double>(B) * probs[i]));
    floor_sum += a.floors[i];
  }
  a.residual = B - floor_sum;
  if (a.residual < 0 || a.residual > L) {
    throw InvalidInput("probabilities do not sum to one (residual " + std::to_string(a.residual) + ")");
  }

  // Positions are 1-based: i <= floor((r+1)/2) or i > L - floor(r/2).
  const long head = (a.residual + 1) / 2;
  const long tail = L - a.residual / 2;
  a.aux.resize(probs.size());
  a.adjusted.resize(probs.size());
  for (long i = 1; i <= L; ++i) {
    const int r_i = (i <= head || i > tail) ? 1 : 0;
    a.aux[i - 1] = r_i;
    a.adjusted[i - 1] = a.floors[i - 1] + r_i;
  }
  return a;
}

FrequencyAllocation allocate_frequencies(const LabelGrid& grid, std::size_t batch_size) {
  return allocate_frequencies(grid.probs, batch_size);
}

PseudoLabelSequence build_pseudo_labels(std::span<const double> labels, std::span<const long> adjusted) {
  require(labels.size() == adjusted.size(), "allocation does not match the label grid");
  PseudoLabelSequence s;
  long total = 0;
  for (long n : adjusted) {
    require(n >= 0, "negative adjusted frequency");
    total += n;
  }
  s.values.reserve(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < labels.size(); ++i) s.values.insert(s.values.end(), adjusted[i], labels[i]);
  return s;
}

PseudoLabelSequence build_pseudo_labels(const LabelGrid& grid, const FrequencyAllocation& alloc) {
  require(grid.size() == alloc.adjusted.size(), "allocation does not match the label grid");
  return build_pseudo_labels(grid.labels, alloc.adjusted);
}

}  // namespace ppgage
