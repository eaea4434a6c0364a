#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ppgage/survival/common.hpp"
#include "ppgage/survival/cox.hpp"

namespace ppgage::pipeline {

/// Adjustment covariates for Cox models 1-3 ("age" is calendar age).
const std::vector<std::string>& cox_adjustment(int model);
/// Adjustment covariates for logistic models 1-2.
const std::vector<std::string>& logistic_adjustment(int model);

/// Effect of one level of a categorical exposure against the reference level.
struct GroupEffect {
  std::string level;
  std::size_t n = 0;
  std::size_t events = 0;
  // "reference", "ok", "empty", "no_events", "no_reference", "collinear",
  // "not_converged" or "separation"
  std::string status;
  survival::WaldRow row;  // ratio 1, CI [1, 1] for the reference
};

/// Cox model on indicator columns for every non-reference level plus the
/// adjustment columns. Levels without subjects or events are dropped from the
/// fit and reported with their status.
std::vector<GroupEffect> group_hazard_ratios(std::span<const double> time, std::span<const int> event,
                                             std::span<const std::string> group,
                                             std::span<const std::string> levels, std::string_view reference,
                                             const Eigen::MatrixXd& adjust,
                                             const std::vector<std::string>& adjust_names,
                                             const survival::CoxOptions& options = {});

/// Logistic counterpart of group_hazard_ratios; `outcome` is 0/1.
std::vector<GroupEffect> group_odds_ratios(std::span<const int> outcome, std::span<const std::string> group,
                                           std::span<const std::string> levels, std::string_view reference,
                                           const Eigen::MatrixXd& adjust,
                                           const std::vector<std::string>& adjust_names);

}  // namespace ppgage::pipeline
