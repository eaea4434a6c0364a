#pragma once

#include <span>
#include <vector>

#include "ppgage/nn/net1d.hpp"

namespace ppgage::nn {

/// d prediction / d input for every sample of a (batch, 1, length) tensor.
/// Samples do not interact, so one backward pass serves the whole batch.
Tensor input_gradients(const Net1D& net, const ModelParams& p, const Tensor& batch);

/// Convolution with a normalized Gaussian truncated at 4 sigma; weights are
/// renormalized near the edges. sigma == 0 returns the input.
std::vector<double> gaussian_smooth(std::span<const double> x, double sigma);

/// |gradient|, smoothed, divided by its maximum. An all-zero map stays zero.
std::vector<double> saliency(const Net1D& net, const ModelParams& p, std::span<const double> waveform,
                             double sigma = 2.0);

/// Mean of the per-waveform saliency maps, rescaled to [0, 1].
std::vector<double> mean_saliency(const Net1D& net, const ModelParams& p, const Tensor& batch,
                                  double sigma = 2.0);

}  // namespace ppgage::nn
