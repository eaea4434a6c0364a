#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ppgage {

/// Contiguous run [begin, end) sharing one value in an isotonic solution.
struct Block {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct IsotonicResult {
  std::vector<double> solution;  // non-decreasing
  std::vector<Block> blocks;     // contiguous partition of [0, n)
};

/// L2 isotonic regression onto non-decreasing sequences (pool adjacent violators).
IsotonicResult isotonic_regression_l2(std::span<const double> v);

struct SoftSortResult {
  std::vector<double> sorted_values;      // ascending
  std::vector<std::size_t> argsort_perm;  // sorted position k holds input index argsort_perm[k]
  std::vector<Block> blocks;              // pooled runs over sorted positions
  double epsilon = 1.0;
};

/// L2-regularized ascending soft sort: projection of the scaled rank vector
/// onto the permutahedron of v. Recovers the hard sort as epsilon -> 0.
SoftSortResult soft_sort(std::span<const double> v, double epsilon);

/// Vector-Jacobian product of soft_sort at v. `upstream` is indexed by sorted
/// position; the result is indexed like v.
std::vector<double> soft_sort_vjp(std::span<const double> v, std::span<const double> upstream,
                                  const SoftSortResult& result);

}  // namespace ppgage
