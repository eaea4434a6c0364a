#include "ppgage/nn/kernels.hpp"

#include <algorithm>
#include <string>

#include "ppgage/error.hpp"

namespace ppgage::nn::kernels {

namespace {

// Output positions t with 0 <= t*stride + k - pad < in_length.
struct TapRange {
  std::size_t first;
  std::size_t last;  // exclusive
};

TapRange tap_range(const ConvShape& s, std::size_t k) {
  const std::size_t out_len = s.out_length();
  std::size_t first = 0;
  if (s.padding > k) first = (s.padding - k + s.stride - 1) / s.stride;
  // t*stride <= in_length - 1 + pad - k
  const std::size_t upper = s.in_length + s.padding;
  if (upper <= k) return {0, 0};
  const std::size_t last = std::min(out_len, (upper - 1 - k) / s.stride + 1);
  return {first, std::max(first, last)};
}

void forward_one(const ConvShape& s, std::size_t b, std::size_t oc, const double* x, const double* w,
                 const double* bias, double* y) {
  const std::size_t out_len = s.out_length();
  double* yrow = y + (b * s.out_channels + oc) * out_len;
  const double b0 = bias ? bias[oc] : 0.0;
  for (std::size_t t = 0; t < out_len; ++t) yrow[t] = b0;
  for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
    const double* xrow = x + (b * s.in_channels + ic) * s.in_length;
    const double* wrow = w + (oc * s.in_channels + ic) * s.kernel;
    for (std::size_t k = 0; k < s.kernel; ++k) {
      const double wk = wrow[k];
      const TapRange r = tap_range(s, k);
      if (s.stride == 1) {
        for (std::size_t t = r.first; t < r.last; ++t) yrow[t] += wk * xrow[t + k - s.padding];
      } else {
        for (std::size_t t = r.first; t < r.last; ++t) yrow[t] += wk * xrow[t * s.stride + k - s.padding];
      }
    }
  }
}

void backward_input_one(const ConvShape& s, std::size_t b, std::size_t ic, const double* dy, const double* w,
                        double* dx) {
  const std::size_t out_len = s.out_length();
  double* dxrow = dx + (b * s.in_channels + ic) * s.in_length;
  std::fill(dxrow, dxrow + s.in_length, 0.0);
  for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
    const double* dyrow = dy + (b * s.out_channels + oc) * out_len;
    const double* wrow = w + (oc * s.in_channels + ic) * s.kernel;
    for (std::size_t k = 0; k < s.kernel; ++k) {
      const double wk = wrow[k];
      const TapRange r = tap_range(s, k);
      if (s.stride == 1) {
        for (std::size_t t = r.first; t < r.last; ++t) dxrow[t + k - s.padding] += wk * dyrow[t];
      } else {
        for (std::size_t t = r.first; t < r.last; ++t) dxrow[t * s.stride + k - s.padding] += wk * dyrow[t];
      }
    }
  }
}

void backward_params_one(const ConvShape& s, std::size_t oc, const double* x, const double* dy, double* dw,
                         double* db) {
  const std::size_t out_len = s.out_length();
  for (std::size_t b = 0; b < s.batch; ++b) {
    const double* dyrow = dy + (b * s.out_channels + oc) * out_len;
    if (db) {
      double acc = 0.0;
      for (std::size_t t = 0; t < out_len; ++t) acc += dyrow[t];
      db[oc] += acc;
    }
    for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
      const double* xrow = x + (b * s.in_channels + ic) * s.in_length;
      double* dwrow = dw + (oc * s.in_channels + ic) * s.kernel;
      for (std::size_t k = 0; k < s.kernel; ++k) {
        const TapRange r = tap_range(s, k);
        double acc = 0.0;
        if (s.stride == 1) {
          for (std::size_t t = r.first; t < r.last; ++t) acc += dyrow[t] * xrow[t + k - s.padding];
        } else {
          for (std::size_t t = r.first; t < r.last; ++t) acc += dyrow[t] * xrow[t * s.stride + k - s.padding];
        }
        dwrow[k] += acc;
      }
    }
  }
}

void check_shape(const ConvShape& s) {
  require(s.stride >= 1, "convolution stride must be >= 1");
  require(s.kernel >= 1, "convolution kernel must be >= 1");
  require(s.in_length + 2 * s.padding >= s.kernel, "convolution input shorter than kernel");
}

}  // namespace

void check_conv_buffers(const ConvShape& s, std::size_t x_size, std::size_t w_size, std::size_t y_size) {
  check_shape(s);
  require(x_size == s.batch * s.in_channels * s.in_length,
          "convolution input has " + std::to_string(x_size) + " values, shape expects " +
              std::to_string(s.batch * s.in_channels * s.in_length));
  require(w_size == s.weight_size(), "convolution weight size does not match channels and kernel");
  require(y_size == s.batch * s.out_channels * s.out_length(), "convolution output size mismatch");
}

namespace serial {

void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  check_conv_buffers(s, x.size(), w.size(), y.size());
  const double* bp = bias.empty() ? nullptr : bias.data();
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t oc = 0; oc < s.out_channels; ++oc) forward_one(s, b, oc, x.data(), w.data(), bp, y.data());
}

void conv1d_backward_input(const ConvShape& s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx) {
  check_conv_buffers(s, dx.size(), w.size(), dy.size());
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t ic = 0; ic < s.in_channels; ++ic) backward_input_one(s, b, ic, dy.data(), w.data(), dx.data());
}

void conv1d_backward_params(const ConvShape& s, std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db) {
  check_conv_buffers(s, x.size(), dw.size(), dy.size());
  double* dbp = db.empty() ? nullptr : db.data();
  for (std::size_t oc = 0; oc < s.out_channels; ++oc) backward_params_one(s, oc, x.data(), dy.data(), dw.data(), dbp);
}

}  // namespace serial

namespace omp {

void conv1d_forward(const ConvShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
  check_conv_buffers(s, x.size(), w.size(), y.size());
  const double* bp = bias.empty() ? nullptr : bias.data();
  const auto work = static_cast<std::ptrdiff_t>(s.batch * s.out_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < work; ++i) {
    const auto u = static_cast<std::size_t>(i);
    forward_one(s, u / s.out_channels, u % s.out_channels, x.data(), w.data(), bp, y.data());
  }
}

void conv1d_backward_input(const ConvShape& s, std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx) {
  check_conv_buffers(s, dx.size(), w.size(), dy.size());
  const auto work = static_cast<std::ptrdiff_t>(s.batch * s.in_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < work; ++i) {
    const auto u = static_cast<std::size_t>(i);
    backward_input_one(s, u / s.in_channels, u % s.in_channels, dy.data(), w.data(), dx.data());
  }
}

void conv1d_backward_params(const ConvShape& s, std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db) {
  check_conv_buffers(s, x.size(), dw.size(), dy.size());
  double* dbp = db.empty() ? nullptr : db.data();
  const auto work = static_cast<std::ptrdiff_t>(s.out_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oc = 0; oc < work; ++oc)
    backward_params_one(s, static_cast<std::size_t>(oc), x.data(), dy.data(), dw.data(), dbp);
}

}  // namespace omp

}  // namespace ppgage::nn::kernels
