#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ppgage/error.hpp"
#include "ppgage/rng.hpp"
#include "ppgage/survival/agreement.hpp"
#include "ppgage/survival/cox.hpp"
#include "ppgage/survival/km.hpp"
#include "ppgage/survival/logistic.hpp"
#include "ppgage/survival/logrank.hpp"
#include "ppgage/survival/rcs.hpp"
#include "ppgage/survival/strata.hpp"
#include "oracles.hpp"

using namespace ppgage;
using namespace ppgage::survival;

namespace {

SurvivalData make_data(std::vector<double> time, std::vector<int> event, const std::vector<std::vector<double>>& cols,
                       std::vector<std::string> names) {
  SurvivalData d;
  d.time = std::move(time);
  d.event = std::move(event);
  d.covariates.resize(static_cast<Eigen::Index>(d.time.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < d.time.size(); ++i)
      d.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
  d.names = std::move(names);
  return d;
}

// Exponential event times with log hazard beta . x, censored at `horizon`.
SurvivalData simulate(Rng& rng, std::size_t n, const std::vector<double>& beta, double horizon = 2.0) {
  std::vector<std::vector<double>> cols(beta.size(), std::vector<double>(n));
  std::vector<double> t(n);
  std::vector<int> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lp = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      cols[j][i] = j == 0 ? (bernoulli(rng, 0.5) ? 1.0 : 0.0) : normal(rng, 0, 1);
      lp += beta[j] * cols[j][i];
    }
    const double u = 1.0 - uniform01(rng);
    const double ti = -std::log(u) / (0.5 * std::exp(lp));
    t[i] = std::min(ti, horizon);
    e[i] = ti <= horizon;
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < beta.size(); ++j) names.push_back("x" + std::to_string(j));
  return make_data(t, e, cols, names);
}

}  // namespace

TEST_CASE("cox: binary covariate matches the grid-search maximizer") {
  Rng rng(1);
  int done = 0;
  while (done < 25) {
    std::vector<double> t(6), x(6);
    std::vector<int> e(6);
    for (std::size_t i = 0; i < 6; ++i) {
      t[i] = uniform(rng, 0.1, 10);
      x[i] = bernoulli(rng, 0.5) ? 1 : 0;
      e[i] = bernoulli(rng, 0.7);
    }
    auto ll = [&](double b) { return oracle::cox_partial_loglik_1d(t, e, x, b); };
    const double arg = oracle::grid_argmax(ll, -5, 5, 1e-4);
    if (std::abs(arg) > 4.9) continue;  // maximizer at infinity
    if (std::accumulate(e.begin(), e.end(), 0) == 0) continue;
    if (std::accumulate(x.begin(), x.end(), 0.0) == 0.0 || std::accumulate(x.begin(), x.end(), 0.0) == 6.0) continue;
    const CoxFit fit = cox_fit(make_data(t, e, {x}, {"x"}));
    REQUIRE(fit.converged);
    REQUIRE(std::abs(fit.coefficients[0] - arg) < 1e-3);
    ++done;
  }
}

TEST_CASE("cox: score vanishes at the optimum and likelihood improves on zero") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const SurvivalData d = simulate(rng, 300, {0.7, -0.4, 0.2});
    for (TieMethod ties : {TieMethod::efron, TieMethod::breslow}) {
      const CoxFit f = cox_fit(d, {ties});
      REQUIRE(f.converged);
      REQUIRE(f.score.cwiseAbs().maxCoeff() < 1e-6);
      REQUIRE(f.log_likelihood >= f.log_likelihood_null);
      const Eigen::MatrixXd asym = f.covariance - f.covariance.transpose();
      REQUIRE(asym.cwiseAbs().maxCoeff() < 1e-12);
      for (const WaldRow& r : f.rows) {
        REQUIRE(r.ratio > 0);
        REQUIRE(r.ci_low < r.ci_high);
      }
    }
  }
}

TEST_CASE("cox: Efron with tied times matches a known fit") {
  // Small tied dataset evaluated independently: the Efron log-likelihood at
  // beta is computed here term by term and maximized by grid search.
  const std::vector<double> t{1, 1, 2, 2, 2, 3, 4, 5};
  const std::vector<int> e{1, 1, 1, 0, 1, 1, 0, 1};
  const std::vector<double> x{1, 0, 1, 1, 0, 0, 1, 0};
  auto efron = [&](double b) {
    double ll = 0;
    for (double tt : {1.0, 2.0, 3.0, 4.0, 5.0}) {
      double risk = 0, tied = 0, sum_x = 0;
      int d = 0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= tt) risk += std::exp(b * x[i]);
        if (t[i] == tt && e[i]) {
          tied += std::exp(b * x[i]);
          sum_x += x[i];
          ++d;
        }
      }
      ll += b * sum_x;
      for (int l = 0; l < d; ++l) ll -= std::log(risk - static_cast<double>(l) / d * tied);
    }
    return ll;
  };
  const CoxFit f = cox_fit(make_data(t, e, {x}, {"x"}));
  CHECK(std::abs(f.coefficients[0] - oracle::grid_argmax(efron, -5, 5, 1e-4)) < 1e-3);
  CHECK(std::abs(f.log_likelihood - efron(f.coefficients[0])) < 1e-9);
}

TEST_CASE("cox: null covariate is rarely significant") {
  int quiet = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    SurvivalData d = simulate(rng, 500, {0.0});
    // permute the covariate so it is independent of outcome by construction
    std::vector<double> x(d.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = d.covariates(static_cast<Eigen::Index>(i), 0);
    shuffle(x, rng);
    for (std::size_t i = 0; i < x.size(); ++i) d.covariates(static_cast<Eigen::Index>(i), 0) = x[i];
    const CoxFit f = cox_fit(d);
    if (f.rows[0].p > 0.05) ++quiet;
  }
  CHECK(quiet >= 90);
}

TEST_CASE("cox: scale equivariance") {
  Rng rng(3);
  const SurvivalData d = simulate(rng, 400, {0.5, 0.3});
  const CoxFit f = cox_fit(d);
  for (double c : {0.01, 2.5, 100.0}) {
    SurvivalData s = d;
    s.covariates.col(1) *= c;
    const CoxFit g = cox_fit(s);
    CHECK(std::abs(g.coefficients[1] * c - f.coefficients[1]) < 1e-8);
    CHECK(std::abs(g.rows[1].z - f.rows[1].z) < 1e-8);
    CHECK(std::abs(g.rows[1].p - f.rows[1].p) < 1e-8);
  }
}

TEST_CASE("cox: duplicated records") {
  Rng rng(4);
  const SurvivalData d = simulate(rng, 200, {0.6, -0.3});
  SurvivalData dd = d;
  const auto n = static_cast<Eigen::Index>(d.size());
  dd.covariates.resize(2 * n, d.covariates.cols());
  dd.covariates << d.covariates, d.covariates;
  dd.time.insert(dd.time.end(), d.time.begin(), d.time.end());
  dd.event.insert(dd.event.end(), d.event.begin(), d.event.end());
  // Breslow's likelihood doubles exactly under duplication.
  const CoxFit b1 = cox_fit(d, {TieMethod::breslow}), b2 = cox_fit(dd, {TieMethod::breslow});
  CHECK((b1.coefficients - b2.coefficients).cwiseAbs().maxCoeff() < 1e-6);
  // Efron treats each duplicated event pair as a genuine tie, which moves the
  // estimate slightly; it stays close but is not invariant.
  const CoxFit e1 = cox_fit(d), e2 = cox_fit(dd);
  CHECK((e1.coefficients - e2.coefficients).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("cox: error paths") {
  const std::vector<double> t{1, 2, 3, 4};
  const std::vector<double> x{0, 1, 0, 1};
  try {
    cox_fit(make_data(t, {0, 0, 0, 0}, {x}, {"x"}));
    FAIL("expected no_events");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_events);
  }
  try {
    cox_fit(make_data(t, {1, 1, 0, 1}, {x, x}, {"a", "b"}));
    FAIL("expected collinear");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::collinear);
  }
  CHECK_THROWS_AS(cox_fit(make_data({1, -2}, {1, 1}, {{0, 1}}, {"x"})), InvalidInput);
}

TEST_CASE("km: examples") {
  SUBCASE("no events") {
    const auto c = km_estimate(std::vector<double>{1, 2, 3}, std::vector<int>{0, 0, 0});
    CHECK(c.time.empty());
    CHECK(c.survival_at(100) == 1.0);
  }
  SUBCASE("four events") {
    const auto c = km_estimate(std::vector<double>{1, 2, 3, 4}, std::vector<int>{1, 1, 1, 1});
    CHECK(c.survival == std::vector<double>{0.75, 0.5, 0.25, 0.0});
  }
  SUBCASE("mixed censoring hand table") {
    // t:  1e 2c 3e 3e 4c 5e 6e 6c 8e 9c
    const std::vector<double> t{6, 1, 3, 9, 2, 5, 3, 8, 4, 6};
    const std::vector<int> e{1, 1, 1, 0, 0, 1, 1, 1, 0, 0};
    const auto c = km_estimate(t, e);
    CHECK(c.time == std::vector<double>{1, 3, 5, 6, 8});
    CHECK(c.at_risk == std::vector<std::size_t>{10, 8, 5, 4, 2});
    CHECK(c.events == std::vector<std::size_t>{1, 2, 1, 1, 1});
    const double s[] = {9.0 / 10, 9.0 / 10 * 6 / 8, 9.0 / 10 * 6 / 8 * 4 / 5, 9.0 / 10 * 6 / 8 * 4 / 5 * 3 / 4,
                        9.0 / 10 * 6 / 8 * 4 / 5 * 3 / 4 * 1 / 2};
    const double gw[] = {1.0 / 90, 1.0 / 90 + 2.0 / 48, 1.0 / 90 + 2.0 / 48 + 1.0 / 20,
                         1.0 / 90 + 2.0 / 48 + 1.0 / 20 + 1.0 / 12, 1.0 / 90 + 2.0 / 48 + 1.0 / 20 + 1.0 / 12 + 1.0 / 2};
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::abs(c.survival[k] - s[k]) < 1e-15);
      CHECK(std::abs(c.variance[k] - s[k] * s[k] * gw[k]) < 1e-15);
      CHECK(std::abs(c.ci_low[k] - s[k] * std::exp(-z975 * std::sqrt(gw[k]))) < 1e-12);
    }
    CHECK(c.survival_at(0.5) == 1.0);
    CHECK(c.survival_at(3) == c.survival[1]);
    CHECK(c.survival_at(7.9) == c.survival[3]);
  }
}

TEST_CASE("km: properties") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 60);
    std::vector<double> t(n);
    std::vector<int> e(n);
    bool censored = bernoulli(rng, 0.5);
    std::size_t events = 0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = std::round(uniform(rng, 1, 20));
      e[i] = censored ? bernoulli(rng, 0.6) : 1;
      events += e[i];
    }
    const auto c = km_estimate(t, e);
    for (std::size_t k = 0; k < c.survival.size(); ++k) {
      REQUIRE(c.survival[k] >= 0.0);
      REQUIRE(c.survival[k] <= 1.0);
      if (k) {
        REQUIRE(c.survival[k] <= c.survival[k - 1]);
        REQUIRE(c.at_risk[k] < c.at_risk[k - 1]);
      }
    }
    if (!censored) REQUIRE(std::abs(c.survival.back() - static_cast<double>(n - events) / n) < 1e-12);
  }
}

TEST_CASE("log-rank: identical groups, symmetry and brute-force accumulation") {
  const std::vector<double> ta{2, 3, 3, 5, 7, 8, 11, 12}, tb{1, 2, 4, 4, 6, 9, 10, 13};
  const std::vector<int> ea{1, 1, 0, 1, 1, 0, 1, 1}, eb{1, 1, 1, 1, 0, 1, 1, 0};

  const auto same = log_rank(ta, ea, ta, ea);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  const auto ab = log_rank(ta, ea, tb, eb), ba = log_rank(tb, eb, ta, ea);
  CHECK(std::abs(ab.statistic - ba.statistic) < 1e-12);
  CHECK(ab.p_value > 0.0);
  CHECK(ab.p_value <= 1.0);

  // Walk over the pooled distinct event times by hand.
  double o = 0, ex = 0, v = 0;
  for (double t = 0.5; t < 14; t += 0.5) {
    double na = 0, nb = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
      na += ta[i] >= t;
      da += ta[i] == t && ea[i];
    }
    for (std::size_t i = 0; i < tb.size(); ++i) {
      nb += tb[i] >= t;
      db += tb[i] == t && eb[i];
    }
    const double d = da + db, n = na + nb;
    if (d == 0) continue;
    o += da;
    ex += d * na / n;
    if (n > 1) v += d * (na / n) * (nb / n) * (n - d) / (n - 1);
  }
  CHECK(std::abs(ab.observed_a - o) < 1e-10);
  CHECK(std::abs(ab.expected_a - ex) < 1e-10);
  CHECK(std::abs(ab.variance - v) < 1e-10);
  CHECK(std::abs(ab.statistic - (o - ex) * (o - ex) / v) < 1e-10);
  CHECK(std::abs(ab.p_value - std::erfc(std::sqrt(ab.statistic / 2))) < 1e-12);

  try {
    log_rank(ta, std::vector<int>(8, 0), tb, std::vector<int>(8, 0));
    FAIL("expected undefined_statistic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::undefined_statistic);
  }
}

TEST_CASE("rcs: knots and basis shape") {
  CHECK(rcs_knot_quantiles(3) == std::vector<double>{0.1, 0.5, 0.9});
  CHECK(rcs_knot_quantiles(5) == std::vector<double>{0.05, 0.275, 0.5, 0.725, 0.95});
  CHECK_THROWS_AS(rcs_knot_quantiles(2), InvalidInput);
  CHECK_THROWS_AS(rcs_knot_quantiles(8), InvalidInput);
  std::vector<double> x(101);
  std::iota(x.begin(), x.end(), 0.0);
  const auto k = rcs_knots(x, 3);
  CHECK(k == std::vector<double>{10, 50, 90});
  CHECK_THROWS_AS(rcs_knots(std::vector<double>{1, 1, 2, 2}, 3), InvalidInput);
  const Eigen::MatrixXd B = rcs_basis(x, k);
  CHECK(B.cols() == 2);
  CHECK(B.rows() == 101);
}

TEST_CASE("rcs: linear tails and smooth joins") {
  const std::vector<double> knots{-3, -1, 0.5, 2, 4};
  auto eval = [&](double v) {
    const std::vector<double> one{v};
    return Eigen::VectorXd(rcs_basis(one, knots).row(0).transpose());
  };
  // Second differences vanish outside the boundary knots.
  for (double a : {-10.0, -6.0, 5.0, 9.0}) {
    const double h = 0.5;
    const Eigen::VectorXd d2 = eval(a - h) - 2 * eval(a) + eval(a + h);
    CHECK(d2.cwiseAbs().maxCoeff() < 1e-10);
  }
  // Value, slope and curvature continuous across each knot.
  const double h = 1e-4;
  for (double t : knots) {
    const Eigen::VectorXd l0 = eval(t - h), r0 = eval(t + h), m = eval(t);
    CHECK((l0 - r0).cwiseAbs().maxCoeff() < 1e-3);
    const Eigen::VectorXd slope_l = (m - eval(t - 2 * h)) / (2 * h), slope_r = (eval(t + 2 * h) - m) / (2 * h);
    CHECK((slope_l - slope_r).cwiseAbs().maxCoeff() < 1e-3);
    const double H = 1e-3;
    const Eigen::VectorXd curv_l = (eval(t - 2 * H) - 2 * eval(t - H) + m) / (H * H);
    const Eigen::VectorXd curv_r = (m - 2 * eval(t + H) + eval(t + 2 * H)) / (H * H);
    CHECK((curv_l - curv_r).cwiseAbs().maxCoeff() < 1e-2);
  }
}

TEST_CASE("rcs: affine change of x spans the same column space") {
  Rng rng(6);
  std::vector<double> x(200);
  for (double& v : x) v = normal(rng, 0, 3);
  const auto k = rcs_knots(x, 4);
  std::vector<double> y(x.size()), ky(k.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.5 * x[i] - 7;
  for (std::size_t i = 0; i < k.size(); ++i) ky[i] = 2.5 * k[i] - 7;
  Eigen::MatrixXd A(x.size(), k.size()), Bm(x.size(), k.size());
  A << Eigen::VectorXd::Ones(static_cast<Eigen::Index>(x.size())), rcs_basis(x, k);
  Bm << Eigen::VectorXd::Ones(static_cast<Eigen::Index>(x.size())), rcs_basis(y, ky);
  const Eigen::MatrixXd coef = A.colPivHouseholderQr().solve(Bm);
  CHECK((A * coef - Bm).norm() / Bm.norm() < 1e-8);
}

TEST_CASE("hr curve: reference point and monotone recovery") {
  Rng rng(7);
  const std::size_t n = 3000;
  std::vector<double> gap(n), t(n);
  std::vector<int> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    gap[i] = normal(rng, 0, 6);
    const double ti = -std::log(1 - uniform01(rng)) / (0.1 * std::exp(0.08 * gap[i]));
    t[i] = std::min(ti, 5.0);
    e[i] = ti <= 5.0;
  }
  SurvivalData d = make_data(t, e, {}, {});
  std::vector<double> grid;
  for (int g = -10; g <= 10; ++g) grid.push_back(g);
  const HrCurve c = hr_curve(d, gap, 3, grid, 0.0);
  REQUIRE(c.points.size() == grid.size());
  CHECK(c.points[10].hr == 1.0);
  CHECK(c.points[10].ci_low == 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double truth = std::exp(0.08 * grid[i]);
    CHECK(c.points[i].ci_low <= truth);
    CHECK(c.points[i].ci_high >= truth);
    if (i) CHECK(c.points[i].hr > c.points[i - 1].hr);
  }
}

TEST_CASE("hr curve: flat generator covers 1") {
  int covered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(200 + seed);
    const std::size_t n = 800;
    std::vector<double> gap(n), t(n);
    std::vector<int> e(n);
    for (std::size_t i = 0; i < n; ++i) {
      gap[i] = normal(rng, 0, 6);
      const double ti = -std::log(1 - uniform01(rng)) / 0.2;
      t[i] = std::min(ti, 3.0);
      e[i] = ti <= 3.0;
    }
    std::vector<double> grid;
    for (int g = -10; g <= 10; g += 2) grid.push_back(g);
    const HrCurve c = hr_curve(make_data(t, e, {}, {}), gap, 3, grid, 0.0);
    bool all = true;
    for (const auto& p : c.points) all = all && p.ci_low <= 1.0 && p.ci_high >= 1.0;
    covered += all;
  }
  CHECK(covered >= 18);
}

TEST_CASE("logistic: 2x2 table odds ratio") {
  // a = exposed cases, b = exposed controls, c = unexposed cases, d = unexposed controls
  const int a = 30, b = 70, c = 12, d = 88;
  std::vector<int> y;
  std::vector<double> x;
  for (int i = 0; i < a; ++i) y.push_back(1), x.push_back(1);
  for (int i = 0; i < b; ++i) y.push_back(0), x.push_back(1);
  for (int i = 0; i < c; ++i) y.push_back(1), x.push_back(0);
  for (int i = 0; i < d; ++i) y.push_back(0), x.push_back(0);
  const Eigen::MatrixXd X = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const LogisticFit f = logistic_fit(y, X, {"exposed"});
  CHECK(f.converged);
  CHECK_FALSE(f.separation);
  CHECK(std::abs(f.row("exposed").ratio - (double(a) * d) / (double(b) * c)) < 1e-6);
  // Woolf standard error of the log odds ratio
  CHECK(std::abs(f.row("exposed").se - std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d)) < 1e-6);
}

TEST_CASE("logistic: intercept only reproduces the event fraction") {
  const std::vector<int> y{1, 0, 0, 1, 0, 0, 0, 1, 0, 0};
  const LogisticFit f = logistic_fit(y, Eigen::MatrixXd(10, 0), {});
  CHECK(std::abs(f.predict(std::vector<double>{}) - 0.3) < 1e-12);
}

TEST_CASE("logistic: independent covariate CI covers 1") {
  int covered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(300 + seed);
    std::vector<int> y(200);
    Eigen::MatrixXd X(200, 1);
    for (Eigen::Index i = 0; i < 200; ++i) {
      y[static_cast<std::size_t>(i)] = bernoulli(rng, 0.5);
      X(i, 0) = normal(rng, 0, 1);
    }
    const auto f = logistic_fit(y, X, {"x"});
    covered += f.row("x").ci_low <= 1.0 && f.row("x").ci_high >= 1.0;
  }
  CHECK(covered >= 90);
}

TEST_CASE("logistic: separation is flagged") {
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  Eigen::MatrixXd X(6, 1);
  X << 1, 2, 3, 4, 5, 6;
  const auto f = logistic_fit(y, X, {"x"});
  CHECK(f.separation);
  CHECK_THROWS_AS(logistic_fit(std::vector<int>{0, 0, 0}, Eigen::MatrixXd(3, 0), {}), InvalidInput);
}

TEST_CASE("gap strata") {
  CHECK(stratify_gap(-9.0, 9) == GapStratum::correct);
  CHECK(stratify_gap(9.0, 9) == GapStratum::correct);
  CHECK(stratify_gap(9.01, 9) == GapStratum::overestimation);
  CHECK(stratify_gap(-9.01, 9) == GapStratum::underestimation);
  CHECK(stratify_gap(-15.5, 15) == GapStratum::underestimation);
  CHECK_THROWS_AS(stratify_gap(1.0, 0.0), InvalidInput);
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    const double g = normal(rng, 0, 20), t = uniform(rng, 0.1, 30);
    const GapStratum s = stratify_gap(g, t);
    const int hits = (g < -t) + (g >= -t && g <= t) + (g > t);
    REQUIRE(hits == 1);
    REQUIRE((s == GapStratum::underestimation) == (g < -t));
    REQUIRE((s == GapStratum::overestimation) == (g > t));
  }
}

TEST_CASE("serial groups truth table") {
  using S = GapStratum;
  using G = SerialGroup;
  const S all[] = {S::underestimation, S::correct, S::overestimation};
  for (S a : all)
    for (S b : all) {
      const bool oa = a == S::overestimation, ob = b == S::overestimation;
      const G expect = oa && ob ? G::G1 : (!oa && ob ? G::G2 : (oa && !ob ? G::G3 : G::G4));
      CHECK(serial_group(a, b) == expect);
    }
  const std::vector<double> first{10, 0, 12, -20, NAN}, second{10, 12, 0, 0, 5};
  const auto sg = serial_groups(first, second, 9);
  CHECK(sg.excluded == 1);
  CHECK(sg.groups[0] == G::G1);
  CHECK(sg.groups[1] == G::G2);
  CHECK(sg.groups[2] == G::G3);
  CHECK(sg.groups[3] == G::G4);
  CHECK_FALSE(sg.groups[4].has_value());
}

TEST_CASE("sd threshold is the sample standard deviation") {
  const std::vector<double> g{-3, 1, 2, 8};
  const double mean = 2.0;
  double ss = 0;
  for (double v : g) ss += (v - mean) * (v - mean);
  CHECK(std::abs(gap_sd_threshold(g) - std::sqrt(ss / 3)) < 1e-12);
}

TEST_CASE("agreement metrics") {
  Rng rng(9);
  std::vector<double> a(100), b(100);
  for (std::size_t i = 0; i < 100; ++i) {
    a[i] = normal(rng, 60, 8);
    b[i] = a[i] + normal(rng, 0, 5);
  }
  const Agreement m = agreement_metrics(a, b);
  CHECK(std::abs(m.pearson - oracle::pearson_two_pass(a, b)) < 1e-12);
  double mae = 0;
  for (std::size_t i = 0; i < 100; ++i) mae += std::abs(a[i] - b[i]);
  CHECK(std::abs(m.mae - mae / 100) < 1e-12);

  const Agreement same = agreement_metrics(a, a);
  CHECK(std::abs(same.pearson - 1.0) < 1e-12);
  CHECK(same.mae == 0.0);
  std::vector<double> neg(a);
  for (double& v : neg) v = -v;
  CHECK(std::abs(agreement_metrics(neg, a).pearson + 1.0) < 1e-12);
  try {
    agreement_metrics(std::vector<double>(5, 1.0), std::vector<double>{1, 2, 3, 4, 5});
    FAIL("expected undefined_statistic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::undefined_statistic);
  }
}
