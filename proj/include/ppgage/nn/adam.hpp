#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ppgage::nn {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double lr = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;  // classic L2: lambda * theta added to the gradient

  static AdamState for_size(std::size_t n, double lr, double weight_decay);
};

/// One Adam update. Parameters and both moments are rounded to binary32
/// afterwards so the state can be checkpointed exactly.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace ppgage::nn
