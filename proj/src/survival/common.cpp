#include "ppgage/survival/common.hpp"

#include "ppgage/error.hpp"

namespace ppgage::survival {

void SurvivalData::validate() const {
  require(!time.empty(), "survival data is empty");
  require(event.size() == time.size(), "time and event lengths differ");
  require(static_cast<std::size_t>(covariates.rows()) == time.size(), "covariate rows do not match records");
  require(names.size() == static_cast<std::size_t>(covariates.cols()), "covariate names do not match columns");
  for (std::size_t i = 0; i < time.size(); ++i) {
    require(std::isfinite(time[i]) && time[i] > 0.0, "survival times must be finite and positive");
    require(event[i] == 0 || event[i] == 1, "event indicator must be 0 or 1");
  }
  require(covariates.allFinite(), "covariates must be finite");
}

}  // namespace ppgage::survival
