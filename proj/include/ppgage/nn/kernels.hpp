#pragma once

#include <cstddef>
#include <span>

namespace ppgage::nn::kernels {

struct ConvShape {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_length = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_length() const { return (in_length + 2 * padding - kernel) / stride + 1; }
  std::size_t weight_size() const { return out_channels * in_channels * kernel; }
};

// Cross-correlation with zero padding. Weights are [out][in][kernel].
// Both namespaces produce bitwise-identical results: every output element is
// accumulated by the same routine in the same order; only the distribution of
// independent elements over threads differs.

namespace serial {
void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);
/// Overwrites dx with d loss / d x.
void conv1d_backward_input(const ConvShape& s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx);
/// Accumulates into dw and db.
void conv1d_backward_params(const ConvShape& s, std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db);
}  // namespace serial

namespace omp {
void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);
void conv1d_backward_input(const ConvShape& s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx);
void conv1d_backward_params(const ConvShape& s, std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db);
}  // namespace omp

/// Validates buffer sizes against the shape; throws InvalidInput on mismatch.
void check_conv_buffers(const ConvShape& s, std::size_t x_size, std::size_t w_size, std::size_t y_size);

}  // namespace ppgage::nn::kernels
