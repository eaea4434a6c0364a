#pragma once

#include <span>
#include <string>
#include <vector>

#include "ppgage/survival/common.hpp"

namespace ppgage::survival {

struct LogisticFit {
  std::vector<std::string> names;  // "(intercept)" first
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  std::vector<WaldRow> rows;  // OR = exp(coef)
  double log_likelihood = 0.0;
  bool converged = false;
  bool separation = false;  // diverging coefficients or fitted probabilities at 0/1
  int iterations = 0;

  const WaldRow& row(const std::string& name) const;
  /// Fitted probability for one covariate row (without the intercept column).
  double predict(std::span<const double> x) const;
};

/// Logistic regression by Newton-Raphson (IRLS). An intercept is added.
LogisticFit logistic_fit(std::span<const int> outcome, const Eigen::MatrixXd& covariates,
                         const std::vector<std::string>& names, int max_iterations = 50);

}  // namespace ppgage::survival
