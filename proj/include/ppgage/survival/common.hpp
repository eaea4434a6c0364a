#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ppgage::survival {

/// Right-censored observations with a covariate matrix (rows = subjects).
struct SurvivalData {
  std::vector<double> time;   // > 0
  std::vector<int> event;     // 0 or 1
  Eigen::MatrixXd covariates;  // n x p
  std::vector<std::string> names;

  std::size_t size() const { return time.size(); }
  void validate() const;
};

inline constexpr double z975 = 1.959963984540054;

/// Two-sided p-value of a standard normal statistic.
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

/// Upper tail of a chi-square with one degree of freedom.
inline double chi2_1df_p(double stat) { return std::erfc(std::sqrt(std::max(stat, 0.0) / 2.0)); }

/// Wald summary of one coefficient.
struct WaldRow {
  std::string name;
  double coef = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
  double ratio = 1.0;  // exp(coef): hazard or odds ratio
  double ci_low = 1.0;
  double ci_high = 1.0;
};

}  // namespace ppgage::survival
