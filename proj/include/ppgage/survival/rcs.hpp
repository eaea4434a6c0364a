#pragma once

#include <span>
#include <vector>

#include "ppgage/survival/common.hpp"
#include "ppgage/survival/cox.hpp"

namespace ppgage::survival {

/// Knot quantiles for 3..7 knots (0.1/0.5/0.9 for three, Harrell's table otherwise).
std::vector<double> rcs_knot_quantiles(std::size_t n_knots);

/// Knots at the standard quantiles of x. Throws when x has fewer distinct
/// values than knots.
std::vector<double> rcs_knots(std::span<const double> x, std::size_t n_knots);

/// Restricted cubic spline design: column 0 is x, then k-2 nonlinear terms
/// scaled by (t_k - t_1)^2. Linear beyond the boundary knots.
Eigen::MatrixXd rcs_basis(std::span<const double> x, std::span<const double> knots);

struct HrCurvePoint {
  double x = 0.0;
  double hr = 1.0;
  double ci_low = 1.0;
  double ci_high = 1.0;
};

struct HrCurve {
  std::vector<double> knots;
  CoxFit fit;
  std::vector<HrCurvePoint> points;
};

/// Cox model on a spline of `exposure` (plus optional adjustment columns in
/// data.covariates). HR(x) = exp(f(x) - f(reference)) with delta-method CIs.
HrCurve hr_curve(const SurvivalData& data, std::span<const double> exposure, std::size_t n_knots,
                 std::span<const double> eval_at, double reference = 0.0, const CoxOptions& options = {});

}  // namespace ppgage::survival
