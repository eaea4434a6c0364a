#pragma once

#include <vector>

#include "ppgage/survival/common.hpp"

namespace ppgage::survival {

enum class TieMethod { efron, breslow };

struct CoxFit {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  std::vector<WaldRow> rows;  // per covariate: HR = exp(coef), Wald CI and p
  std::size_t n = 0;
  std::size_t n_events = 0;
  double log_likelihood = 0.0;
  double log_likelihood_null = 0.0;  // at beta = 0
  Eigen::VectorXd score;             // at the returned coefficients
  bool converged = false;
  int iterations = 0;

  const WaldRow& row(const std::string& name) const;
};

struct CoxOptions {
  TieMethod ties = TieMethod::efron;
  int max_iterations = 50;
  double score_tolerance = 1e-8;
};

/// Log partial likelihood, score and information at beta.
struct CoxDerivatives {
  double log_likelihood = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;
};

CoxDerivatives cox_derivatives(const SurvivalData& data, const Eigen::VectorXd& beta, TieMethod ties);

/// Newton-Raphson maximization of the partial likelihood with step halving.
/// Throws Error(no_events) without events and Error(collinear) when the
/// information matrix is singular. Non-convergence is reported in the fit.
CoxFit cox_fit(const SurvivalData& data, const CoxOptions& options = {});

}  // namespace ppgage::survival
