#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppgage/error.hpp"
#include "ppgage/rng.hpp"
#include "ppgage/soft_sort.hpp"
#include "oracles.hpp"

using namespace ppgage;

namespace {

std::vector<double> gapped_vector(Rng& rng, std::size_t n, double min_gap) {
  std::vector<double> v(n);
  double x = uniform(rng, -5, 5);
  for (double& e : v) {
    e = x;
    x += min_gap + uniform(rng, 0, 1);
  }
  shuffle(v, rng);
  return v;
}

// Same sort order and pooling under small coordinate perturbations, so the
// map is linear on a neighbourhood wider than the finite-difference step.
bool structure_stable(const std::vector<double>& v, double eps, double h) {
  const auto base = soft_sort(v, eps);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (double d : {-h, h}) {
      std::vector<double> p = v;
      p[i] += d;
      const auto r = soft_sort(p, eps);
      if (r.argsort_perm != base.argsort_perm || r.blocks.size() != base.blocks.size()) return false;
      for (std::size_t b = 0; b < r.blocks.size(); ++b)
        if (r.blocks[b].begin != base.blocks[b].begin || r.blocks[b].end != base.blocks[b].end) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("isotonic examples") {
  const auto a = isotonic_regression_l2(std::vector<double>{1, 2, 3});
  CHECK(a.solution == std::vector<double>{1, 2, 3});
  CHECK(a.blocks.size() == 3);
  const auto b = isotonic_regression_l2(std::vector<double>{3, 1});
  CHECK(b.solution == std::vector<double>{2, 2});
  REQUIRE(b.blocks.size() == 1);
  CHECK(b.blocks[0].begin == 0);
  CHECK(b.blocks[0].end == 2);
  CHECK_THROWS_AS(isotonic_regression_l2(std::vector<double>{}), InvalidInput);
  CHECK_THROWS_AS(isotonic_regression_l2(std::vector<double>{1, INFINITY}), InvalidInput);
}

TEST_CASE("isotonic solution equals block means and is monotone") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(1 + uniform_index(rng, 40));
    for (double& e : v) e = normal(rng, 0, 3);
    const auto r = isotonic_regression_l2(v);
    REQUIRE(std::is_sorted(r.solution.begin(), r.solution.end()));
    std::size_t expect = 0;
    for (const Block& b : r.blocks) {
      REQUIRE(b.begin == expect);
      expect = b.end;
      const double mean = std::accumulate(v.begin() + b.begin, v.begin() + b.end, 0.0) / b.size();
      for (std::size_t i = b.begin; i < b.end; ++i) REQUIRE(std::abs(r.solution[i] - mean) < 1e-12);
    }
    REQUIRE(expect == v.size());
  }
}

TEST_CASE("isotonic matches the monotone grid search on small instances") {
  const double grid[] = {-1, 0, 1, 2};
  for (std::size_t n = 1; n <= 4; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 4;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> v(n);
      std::size_t c = code;
      for (double& e : v) {
        e = grid[c % 4];
        c /= 4;
      }
      const auto pav = isotonic_regression_l2(v).solution;
      const auto ref = oracle::isotonic_grid_search(v, -1.0, 2.0, 1e-3);
      for (std::size_t i = 0; i < n; ++i) REQUIRE(std::abs(pav[i] - ref[i]) <= 2e-3);
    }
  }
}

TEST_CASE("soft sort examples") {
  const std::vector<double> sorted{-2, 0.5, 1, 7};
  CHECK(soft_sort(sorted, 1e-3).sorted_values == sorted);
  const auto r = soft_sort(std::vector<double>{5, 1, 3}, 1e-6);
  CHECK(std::abs(r.sorted_values[0] - 1) < 1e-4);
  CHECK(std::abs(r.sorted_values[1] - 3) < 1e-4);
  CHECK(std::abs(r.sorted_values[2] - 5) < 1e-4);
  CHECK(r.argsort_perm == std::vector<std::size_t>{1, 2, 0});
  CHECK_THROWS_AS(soft_sort(sorted, 0.0), InvalidInput);
  CHECK_THROWS_AS(soft_sort(sorted, -1.0), InvalidInput);
  CHECK_THROWS_AS(soft_sort(std::vector<double>{}, 1.0), InvalidInput);
}

TEST_CASE("soft sort is the projection of the scaled ranks onto the permutahedron") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + uniform_index(rng, 6));
    for (double& e : v) e = normal(rng, 0, 1);
    const double eps = std::exp(uniform(rng, -3, 2));
    const auto r = soft_sort(v, eps);
    std::vector<double> z(v.size());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = static_cast<double>(k + 1) / eps;
    REQUIRE(oracle::permutahedron_projection_violation(r.sorted_values, z, v) < 1e-9);
  }
}

TEST_CASE("soft sort properties") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, trial < 5 ? 10000 : 64);
    std::vector<double> v(n);
    for (double& e : v) e = normal(rng, 50, 15);
    const double eps = trial % 2 ? 1.0 : std::exp(uniform(rng, -8, 4));
    const auto r = soft_sort(v, eps);
    REQUIRE(std::is_sorted(r.sorted_values.begin(), r.sorted_values.end()));
    const double s_in = std::accumulate(v.begin(), v.end(), 0.0);
    const double s_out = std::accumulate(r.sorted_values.begin(), r.sorted_values.end(), 0.0);
    REQUIRE(std::abs(s_in - s_out) < 1e-9 * static_cast<double>(n) * std::max(1.0, std::abs(s_in) / n));

    std::vector<double> w = v;
    shuffle(w, rng);
    REQUIRE(soft_sort(w, eps).sorted_values == r.sorted_values);
  }
}

TEST_CASE("soft sort approaches the hard sort") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = gapped_vector(rng, 2 + uniform_index(rng, 30), 1e-2);
    std::vector<double> hard = v;
    std::sort(hard.begin(), hard.end());
    const auto r = soft_sort(v, 1e-6);
    for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(std::abs(r.sorted_values[i] - hard[i]) < 1e-4);
  }
}

TEST_CASE("soft sort vjp examples") {
  SUBCASE("identity permutation, singleton blocks") {
    const std::vector<double> v{1, 2, 3}, up{0.3, -1, 2};
    const auto r = soft_sort(v, 1e-3);
    CHECK(soft_sort_vjp(v, up, r) == up);
  }
  SUBCASE("one pooled pair routes the average") {
    const std::vector<double> v{3, 1}, up{0.25, 1.75};
    const auto r = soft_sort(v, 1.0);
    REQUIRE(r.blocks.size() == 1);
    const auto g = soft_sort_vjp(v, up, r);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(1.0));
  }
  SUBCASE("shape mismatch") {
    const std::vector<double> v{3, 1};
    const auto r = soft_sort(v, 1.0);
    CHECK_THROWS_AS(soft_sort_vjp(v, std::vector<double>{1}, r), InvalidInput);
  }
}

TEST_CASE("soft sort vjp matches finite differences") {
  Rng rng(1234);
  int checked = 0;
  while (checked < 100) {
    const auto v = gapped_vector(rng, 8, 0.1);
    const double eps = 0.5;
    const auto r = soft_sort(v, eps);
    std::vector<double> up(v.size());
    for (double& u : up) u = normal(rng, 0, 1);
    const auto f = [&](const std::vector<double>& x) {
      const auto s = soft_sort(x, eps).sorted_values;
      return std::inner_product(s.begin(), s.end(), up.begin(), 0.0);
    };
    if (!structure_stable(v, eps, 1e-4)) continue;
    const auto g = soft_sort_vjp(v, up, r);
    const auto fd = oracle::central_difference(f, v, 1e-5);
    REQUIRE(oracle::max_relative_error(g, fd) < 1e-5);
    ++checked;
  }
}
