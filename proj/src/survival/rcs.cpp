#include "ppgage/survival/rcs.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ppgage/error.hpp"

namespace ppgage::survival {

std::vector<double> rcs_knot_quantiles(std::size_t n_knots) {
  switch (n_knots) {
    case 3: return {0.10, 0.50, 0.90};
    case 4: return {0.05, 0.35, 0.65, 0.95};
    case 5: return {0.05, 0.275, 0.50, 0.725, 0.95};
    case 6: return {0.05, 0.23, 0.41, 0.59, 0.77, 0.95};
    case 7: return {0.025, 0.1833, 0.3417, 0.50, 0.6583, 0.8167, 0.975};
    default: throw InvalidInput("restricted cubic splines support 3 to 7 knots");
  }
}

namespace {

// Linear interpolation between order statistics (R type 7).
double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double cube_pos(double x) { return x > 0.0 ? x * x * x : 0.0; }

}  // namespace

std::vector<double> rcs_knots(std::span<const double> x, std::size_t n_knots) {
  const auto qs = rcs_knot_quantiles(n_knots);
  std::vector<double> v(x.begin(), x.end());
  for (double xi : v) require(std::isfinite(xi), "spline input must be finite");
  const std::set<double> distinct(v.begin(), v.end());
  require(distinct.size() >= n_knots, "too few distinct values for the requested number of knots");
  std::sort(v.begin(), v.end());
  std::vector<double> knots;
  for (double q : qs) knots.push_back(quantile_sorted(v, q));
  for (std::size_t i = 1; i < knots.size(); ++i) {
    require(knots[i] > knots[i - 1], "spline knots are not distinct; use fewer knots");
  }
  return knots;
}

Eigen::MatrixXd rcs_basis(std::span<const double> x, std::span<const double> knots) {
  const std::size_t k = knots.size();
  require(k >= 3, "restricted cubic splines need at least 3 knots");
  for (std::size_t i = 1; i < k; ++i) require(knots[i] > knots[i - 1], "knots must be strictly increasing");
  const double t_last = knots[k - 1];
  const double t_prev = knots[k - 2];
  const double norm = (t_last - knots[0]) * (t_last - knots[0]);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(k - 1));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const auto r = static_cast<Eigen::Index>(i);
    out(r, 0) = xi;
    for (std::size_t j = 0; j + 2 < k; ++j) {
      const double tj = knots[j];
      const double v = cube_pos(xi - tj) - cube_pos(xi - t_prev) * (t_last - tj) / (t_last - t_prev) +
                       cube_pos(xi - t_last) * (t_prev - tj) / (t_last - t_prev);
      out(r, static_cast<Eigen::Index>(j + 1)) = v / norm;
    }
  }
  return out;
}

HrCurve hr_curve(const SurvivalData& data, std::span<const double> exposure, std::size_t n_knots,
                 std::span<const double> eval_at, double reference, const CoxOptions& options) {
  require(exposure.size() == data.size(), "exposure length does not match the survival data");
  HrCurve curve;
  curve.knots = rcs_knots(exposure, n_knots);
  const Eigen::MatrixXd basis = rcs_basis(exposure, curve.knots);
  const Eigen::Index m = basis.cols();

  SurvivalData design;
  design.time = data.time;
  design.event = data.event;
  design.covariates.resize(basis.rows(), m + data.covariates.cols());
  design.covariates.leftCols(m) = basis;
  design.covariates.rightCols(data.covariates.cols()) = data.covariates;
  for (Eigen::Index j = 0; j < m; ++j) design.names.push_back(j == 0 ? "spline.linear" : "spline.s" + std::to_string(j));
  design.names.insert(design.names.end(), data.names.begin(), data.names.end());

  curve.fit = cox_fit(design, options);
  const Eigen::VectorXd beta = curve.fit.coefficients.head(m);
  const Eigen::MatrixXd cov = curve.fit.covariance.topLeftCorner(m, m);
  const double ref_arr[1] = {reference};
  const Eigen::RowVectorXd ref = rcs_basis(ref_arr, curve.knots).row(0);
  const Eigen::MatrixXd at = rcs_basis(eval_at, curve.knots);

  for (Eigen::Index i = 0; i < at.rows(); ++i) {
    const Eigen::RowVectorXd diff = at.row(i) - ref;
    const double log_hr = diff.dot(beta);
    const double se = std::sqrt(std::max(0.0, (diff * cov * diff.transpose())(0, 0)));
    curve.points.push_back({eval_at[static_cast<std::size_t>(i)], std::exp(log_hr), std::exp(log_hr - z975 * se),
                            std::exp(log_hr + z975 * se)});
  }
  return curve;
}

}  // namespace ppgage::survival
