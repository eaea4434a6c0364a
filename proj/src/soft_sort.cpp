#include "ppgage/soft_sort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppgage/error.hpp"

namespace ppgage {

IsotonicResult isotonic_regression_l2(std::span<const double> v) {
  require(!v.empty(), "isotonic regression of an empty vector");
  for (double x : v) require(std::isfinite(x), "isotonic regression input must be finite");

  // Stack of pooled blocks; each holds its sum and count.
  struct Pool {
    std::size_t begin;
    std::size_t end;
    double sum;
  };
  std::vector<Pool> stack;
  stack.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    stack.push_back({i, i + 1, v[i]});
    while (stack.size() > 1) {
      const Pool& top = stack.back();
      const Pool& prev = stack[stack.size() - 2];
      // prev.mean > top.mean, cross-multiplied to avoid two divisions
      if (prev.sum * static_cast<double>(top.end - top.begin) <=
          top.sum * static_cast<double>(prev.end - prev.begin)) {
        break;
      }
      Pool merged{prev.begin, top.end, prev.sum + top.sum};
      stack.pop_back();
      stack.back() = merged;
    }
  }

  IsotonicResult out;
  out.solution.resize(v.size());
  out.blocks.reserve(stack.size());
  for (const Pool& p : stack) {
    if (p.end - p.begin == 1) {
      out.solution[p.begin] = v[p.begin];
    } else {
      const double mean = p.sum / static_cast<double>(p.end - p.begin);
      std::fill(out.solution.begin() + p.begin, out.solution.begin() + p.end, mean);
    }
    out.blocks.push_back({p.begin, p.end});
  }
  return out;
}

SoftSortResult soft_sort(std::span<const double> v, double epsilon) {
  require(!v.empty(), "soft sort of an empty vector");
  require(epsilon > 0.0 && std::isfinite(epsilon), "soft sort epsilon must be positive");
  const std::size_t n = v.size();

  SoftSortResult r;
  r.epsilon = epsilon;
  r.argsort_perm.resize(n);
  std::iota(r.argsort_perm.begin(), r.argsort_perm.end(), std::size_t{0});
  std::stable_sort(r.argsort_perm.begin(), r.argsort_perm.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

  // With w_k = (k+1)/epsilon and a = sorted v: out = w - iso(w - a).
  std::vector<double> sorted(n);
  std::vector<double> shifted(n);
  for (std::size_t k = 0; k < n; ++k) {
    sorted[k] = v[r.argsort_perm[k]];
    shifted[k] = static_cast<double>(k + 1) / epsilon - sorted[k];
  }
  IsotonicResult iso = isotonic_regression_l2(shifted);

  // Inside a pooled block out_k = mean(a) + (w_k - mean(w)); written this way
  // singleton blocks return a_k exactly instead of w_k - (w_k - a_k).
  r.sorted_values.resize(n);
  for (const Block& b : iso.blocks) {
    if (b.size() == 1) {
      r.sorted_values[b.begin] = sorted[b.begin];
      continue;
    }
    double sum_a = 0.0;
    for (std::size_t k = b.begin; k < b.end; ++k) sum_a += sorted[k];
    const double len = static_cast<double>(b.size());
    const double mean_a = sum_a / len;
    const double mid = 0.5 * static_cast<double>(b.begin + b.end - 1);
    for (std::size_t k = b.begin; k < b.end; ++k) {
      r.sorted_values[k] = mean_a + (static_cast<double>(k) - mid) / epsilon;
    }
  }
  r.blocks = std::move(iso.blocks);
  return r;
}

std::vector<double> soft_sort_vjp(std::span<const double> v, std::span<const double> upstream,
                                  const SoftSortResult& result) {
  const std::size_t n = v.size();
  require(upstream.size() == n, "soft sort VJP: upstream length does not match input");
  require(result.argsort_perm.size() == n && result.sorted_values.size() == n,
          "soft sort VJP: result was not produced from this input");

  // d out / d a is the block-averaging matrix; d a / d v is the permutation.
  std::vector<double> grad(n, 0.0);
  for (const Block& b : result.blocks) {
    require(b.end <= n && b.begin < b.end, "soft sort VJP: malformed block");
    if (b.size() == 1) {
      grad[result.argsort_perm[b.begin]] = upstream[b.begin];
      continue;
    }
    double s = 0.0;
    for (std::size_t k = b.begin; k < b.end; ++k) s += upstream[k];
    const double mean = s / static_cast<double>(b.size());
    for (std::size_t k = b.begin; k < b.end; ++k) grad[result.argsort_perm[k]] = mean;
  }
  return grad;
}

}  // namespace ppgage
