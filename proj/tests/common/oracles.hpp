#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library except where noted.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

/// Best non-decreasing vector on the lattice lo, lo+step, ..., hi in the
/// squared-error sense, by dynamic programming over lattice values.
inline std::vector<double> isotonic_grid_search(const std::vector<double>& v, double lo, double hi, double step) {
  const auto G = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  const std::size_t n = v.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(G));
  std::vector<std::vector<std::size_t>> arg(n, std::vector<std::size_t>(G));
  auto value = [&](std::size_t j) { return lo + static_cast<double>(j) * step; };
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < G; ++j) {
      if (i > 0 && cost[i - 1][j] < best) {
        best = cost[i - 1][j];
        best_j = j;
      }
      const double d = value(j) - v[i];
      cost[i][j] = d * d + (i > 0 ? best : 0.0);
      arg[i][j] = best_j;
    }
  }
  std::vector<double> u(n);
  std::size_t j = static_cast<std::size_t>(std::min_element(cost[n - 1].begin(), cost[n - 1].end()) - cost[n - 1].begin());
  for (std::size_t i = n; i-- > 0;) {
    u[i] = value(j);
    j = arg[i][j];
  }
  return u;
}

/// Largest violation of the optimality conditions for x being the Euclidean
/// projection of z onto the permutahedron of v: membership via majorization
/// (ascending partial sums) and <z - x, y - x> <= 0 for every vertex y.
inline double permutahedron_projection_violation(const std::vector<double>& x, const std::vector<double>& z,
                                                 std::vector<double> v) {
  const std::size_t n = v.size();
  std::vector<double> xs = x;
  std::sort(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  double worst = 0.0, px = 0.0, pv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    px += xs[k];
    pv += v[k];
    worst = std::max(worst, k + 1 < n ? pv - px : std::abs(pv - px));
  }
  std::vector<double> y = v;
  do {
    double ip = 0.0;
    for (std::size_t i = 0; i < n; ++i) ip += (z[i] - x[i]) * (y[i] - x[i]);
    worst = std::max(worst, ip);
  } while (std::next_permutation(y.begin(), y.end()));
  return worst;
}

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              const std::vector<double>& x, double h) {
  std::vector<double> g(x.size());
  std::vector<double> p = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double down = f(p);
    p[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Normwise relative error max|a - b| / max|b|.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1e-300);
}

/// Cox partial log-likelihood for one covariate and no tied times, summed
/// over risk sets formed by direct comparison of times.
inline double cox_partial_loglik_1d(const std::vector<double>& time, const std::vector<int>& event,
                                    const std::vector<double>& x, double beta) {
  double ll = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (!event[i]) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < time.size(); ++j)
      if (time[j] >= time[i]) denom += std::exp(beta * x[j]);
    ll += beta * x[i] - std::log(denom);
  }
  return ll;
}

/// Argmax over beta in [lo, hi] on a uniform lattice.
inline double grid_argmax(const std::function<double(double)>& f, double lo, double hi, double step) {
  double best = -std::numeric_limits<double>::infinity(), arg = lo;
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  for (long k = 0; k <= n; ++k) {
    const double b = lo + static_cast<double>(k) * step;
    const double v = f(b);
    if (v > best) {
      best = v;
      arg = b;
    }
  }
  return arg;
}

/// Pearson correlation by the textbook two-pass formula.
inline double pearson_two_pass(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
