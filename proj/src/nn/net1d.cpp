#include "ppgage/nn/net1d.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "ppgage/error.hpp"
#include "ppgage/nn/kernels.hpp"
#include "ppgage/rng.hpp"

namespace ppgage::nn {

// ---------------------------------------------------------------- config

void NetConfig::validate() const {
  require(input_length >= 1, "input length must be positive");
  require(kernel_size >= 1 && kernel_size % 2 == 1, "kernel size must be odd and positive");
  require(input_length >= kernel_size, "input length must be at least the kernel size");
  require(stem_channels >= 1, "stem needs at least one channel");
  require(se_reduction >= 1, "SE reduction must be >= 1");
  require(std::isfinite(output_shift) && std::isfinite(output_scale) && output_scale > 0.0,
          "output scaling must be finite with positive scale");
  std::size_t len = input_length;
  for (const StageConfig& s : stages) {
    require(s.blocks >= 1, "each stage needs at least one block");
    require(s.stride >= 1, "stage stride must be >= 1");
    require(s.channels >= 1 && s.channels % se_reduction == 0,
            "stage channels must be divisible by the SE reduction");
    len = (len - 1) / s.stride + 1;
  }
  require(len >= 1, "input collapses to zero length");
}

NetConfig NetConfig::desk() { return NetConfig{}; }

NetConfig NetConfig::tiny() {
  NetConfig c;
  c.input_length = 16;
  c.stem_channels = 4;
  c.stages = {{1, 4, 1}, {1, 4, 2}};
  c.se_reduction = 2;
  c.kernel_size = 3;
  c.head_hidden = 0;
  return c;
}

// ---------------------------------------------------------------- params

std::span<const double> ModelParams::view(std::size_t array) const {
  const ParamArray& a = arrays.at(array);
  return {values.data() + a.offset, a.size};
}

std::span<double> ModelParams::view(std::size_t array) {
  const ParamArray& a = arrays.at(array);
  return {values.data() + a.offset, a.size};
}

const ParamArray* ModelParams::find(std::string_view name) const {
  for (const ParamArray& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

std::size_t ParamLayout::add(std::string name, std::vector<std::size_t> shape, std::size_t fan_in) {
  std::size_t size = 1;
  for (std::size_t d : shape) size *= d;
  arrays_.push_back({std::move(name), std::move(shape), total_, size, fan_in});
  total_ += size;
  return arrays_.size() - 1;
}

ModelParams ParamLayout::zeros() const { return ModelParams{arrays_, std::vector<double>(total_, 0.0)}; }

void quantize_f32(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

ConvLayer add_conv(ParamLayout& layout, const std::string& name, std::size_t in, std::size_t out,
                   std::size_t kernel, std::size_t stride) {
  ConvLayer c{in, out, kernel, stride, kernel / 2, 0, 0};
  c.weight = layout.add(name + ".weight", {out, in, kernel}, in * kernel);
  c.bias = layout.add(name + ".bias", {out}, in * kernel);
  return c;
}

DenseLayer add_dense(ParamLayout& layout, const std::string& name, std::size_t in, std::size_t out) {
  DenseLayer d{in, out, 0, 0};
  d.weight = layout.add(name + ".weight", {out, in}, in);
  d.bias = layout.add(name + ".bias", {out}, in);
  return d;
}

SeLayer add_se(ParamLayout& layout, const std::string& name, std::size_t channels, std::size_t reduction) {
  require(reduction >= 1 && channels % reduction == 0, "SE channels must be divisible by the reduction");
  SeLayer s;
  s.channels = channels;
  s.hidden = channels / reduction;
  s.reduce = add_dense(layout, name + ".reduce", channels, s.hidden);
  s.expand = add_dense(layout, name + ".expand", s.hidden, channels);
  return s;
}

ResidualBlock add_residual_block(ParamLayout& layout, const std::string& name, std::size_t in,
                                 std::size_t out, std::size_t kernel, std::size_t stride,
                                 std::size_t reduction) {
  ResidualBlock b;
  b.conv1 = add_conv(layout, name + ".conv1", in, out, kernel, stride);
  b.conv2 = add_conv(layout, name + ".conv2", out, out, kernel, 1);
  b.se = add_se(layout, name + ".se", out, reduction);
  if (in != out || stride != 1) b.shortcut = add_conv(layout, name + ".shortcut", in, out, 1, stride);
  return b;
}

// ---------------------------------------------------------------- layers

namespace {

kernels::ConvShape conv_shape(const ConvLayer& l, const Tensor& x) {
  kernels::ConvShape s;
  s.batch = x.batch;
  s.in_channels = l.in_channels;
  s.in_length = x.length;
  s.out_channels = l.out_channels;
  s.kernel = l.kernel;
  s.stride = l.stride;
  s.padding = l.padding;
  return s;
}

void relu_inplace(Tensor& t) {
  for (double& v : t.data) v = v < 0.0 ? 0.0 : v;
}

// dy masked by out > 0
Tensor relu_backward(const Tensor& out, const Tensor& dy) {
  Tensor d(dy.batch, dy.channels, dy.length);
  for (std::size_t i = 0; i < dy.data.size(); ++i) d.data[i] = out.data[i] > 0.0 ? dy.data[i] : 0.0;
  return d;
}

double sigmoid_open(double a) {
  const double g = 1.0 / (1.0 + std::exp(-a));
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(g, lo, hi);
}

// in: batch x d.in, out: batch x d.out
void dense_forward(const DenseLayer& d, const ModelParams& p, std::span<const double> in, std::size_t batch,
                   std::span<double> out) {
  const auto w = p.view(d.weight);
  const auto b = p.view(d.bias);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < d.out; ++o) {
      double acc = b[o];
      for (std::size_t i = 0; i < d.in; ++i) acc += w[o * d.in + i] * in[n * d.in + i];
      out[n * d.out + o] = acc;
    }
  }
}

void dense_backward(const DenseLayer& d, const ModelParams& p, std::span<const double> in, std::size_t batch,
                    std::span<const double> dout, std::span<double> d_params, std::span<double> din) {
  const auto w = p.view(d.weight);
  double* dw = d_params.data() + p.arrays[d.weight].offset;
  double* db = d_params.data() + p.arrays[d.bias].offset;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < d.out; ++o) {
      const double g = dout[n * d.out + o];
      db[o] += g;
      for (std::size_t i = 0; i < d.in; ++i) dw[o * d.in + i] += g * in[n * d.in + i];
    }
  }
  if (din.empty()) return;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < d.out; ++o) acc += w[o * d.in + i] * dout[n * d.out + o];
      din[n * d.in + i] = acc;
    }
  }
}

}  // namespace

Tensor conv_forward(const ConvLayer& layer, const ModelParams& p, const Tensor& x, Backend backend) {
  require(x.channels == layer.in_channels, "convolution input has " + std::to_string(x.channels) +
                                               " channels, layer expects " + std::to_string(layer.in_channels));
  const auto s = conv_shape(layer, x);
  require(x.length + 2 * s.padding >= s.kernel, "convolution input shorter than kernel");
  Tensor y(x.batch, layer.out_channels, s.out_length());
  if (backend == Backend::parallel)
    kernels::omp::conv1d_forward(s, x.data, p.view(layer.weight), p.view(layer.bias), y.data);
  else
    kernels::serial::conv1d_forward(s, x.data, p.view(layer.weight), p.view(layer.bias), y.data);
  return y;
}

void conv_backward(const ConvLayer& layer, const ModelParams& p, const Tensor& x, const Tensor& dy,
                   std::span<double> d_params, Tensor* dx, Backend backend) {
  const auto s = conv_shape(layer, x);
  require(dy.batch == x.batch && dy.channels == layer.out_channels && dy.length == s.out_length(),
          "convolution output gradient has the wrong shape");
  const ParamArray& wa = p.arrays[layer.weight];
  const ParamArray& ba = p.arrays[layer.bias];
  std::span<double> dw(d_params.data() + wa.offset, wa.size);
  std::span<double> db(d_params.data() + ba.offset, ba.size);
  if (backend == Backend::parallel)
    kernels::omp::conv1d_backward_params(s, x.data, dy.data, dw, db);
  else
    kernels::serial::conv1d_backward_params(s, x.data, dy.data, dw, db);
  if (dx) {
    *dx = Tensor(x.batch, x.channels, x.length);
    if (backend == Backend::parallel)
      kernels::omp::conv1d_backward_input(s, dy.data, p.view(layer.weight), dx->data);
    else
      kernels::serial::conv1d_backward_input(s, dy.data, p.view(layer.weight), dx->data);
  }
}

Tensor se_forward(const SeLayer& layer, const ModelParams& p, const Tensor& x, SeCache& cache) {
  require(x.channels == layer.channels, "SE input channel count mismatch");
  const std::size_t B = x.batch, C = x.channels, H = layer.hidden, L = x.length;
  cache.pooled.assign(B * C, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < L; ++t) s += x.at(b, c, t);
      cache.pooled[b * C + c] = s / static_cast<double>(L);
    }
  cache.hidden_pre.assign(B * H, 0.0);
  dense_forward(layer.reduce, p, cache.pooled, B, cache.hidden_pre);
  std::vector<double> hidden(cache.hidden_pre);
  for (double& h : hidden) h = h < 0.0 ? 0.0 : h;
  cache.gate.assign(B * C, 0.0);
  dense_forward(layer.expand, p, hidden, B, cache.gate);
  for (double& g : cache.gate) g = sigmoid_open(g);

  Tensor y(B, C, L);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double g = cache.gate[b * C + c];
      for (std::size_t t = 0; t < L; ++t) y.at(b, c, t) = x.at(b, c, t) * g;
    }
  return y;
}

Tensor se_backward(const SeLayer& layer, const ModelParams& p, const Tensor& x, const SeCache& cache,
                   const Tensor& dy, std::span<double> d_params) {
  require(dy.same_shape(x), "SE output gradient has the wrong shape");
  const std::size_t B = x.batch, C = x.channels, H = layer.hidden, L = x.length;

  Tensor dx(B, C, L);
  std::vector<double> d_gate_pre(B * C);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double g = cache.gate[b * C + c];
      double dg = 0.0;
      for (std::size_t t = 0; t < L; ++t) {
        dg += dy.at(b, c, t) * x.at(b, c, t);
        dx.at(b, c, t) = dy.at(b, c, t) * g;
      }
      d_gate_pre[b * C + c] = dg * g * (1.0 - g);
    }

  std::vector<double> hidden(cache.hidden_pre);
  for (double& h : hidden) h = h < 0.0 ? 0.0 : h;
  std::vector<double> d_hidden(B * H);
  dense_backward(layer.expand, p, hidden, B, d_gate_pre, d_params, d_hidden);
  for (std::size_t i = 0; i < d_hidden.size(); ++i)
    if (!(cache.hidden_pre[i] > 0.0)) d_hidden[i] = 0.0;
  std::vector<double> d_pooled(B * C);
  dense_backward(layer.reduce, p, cache.pooled, B, d_hidden, d_params, d_pooled);

  const double inv_l = 1.0 / static_cast<double>(L);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double g = d_pooled[b * C + c] * inv_l;
      for (std::size_t t = 0; t < L; ++t) dx.at(b, c, t) += g;
    }
  return dx;
}

Tensor residual_forward(const ResidualBlock& block, const ModelParams& p, const Tensor& x, BlockCache& cache,
                        Backend backend) {
  cache.input = x;
  cache.act1 = conv_forward(block.conv1, p, x, backend);
  relu_inplace(cache.act1);
  cache.conv2_out = conv_forward(block.conv2, p, cache.act1, backend);
  Tensor out = se_forward(block.se, p, cache.conv2_out, cache.se);
  if (block.shortcut) {
    const Tensor sc = conv_forward(*block.shortcut, p, x, backend);
    require(sc.same_shape(out), "shortcut and branch shapes differ");
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += sc.data[i];
  } else {
    require(x.same_shape(out), "identity shortcut needs matching shapes");
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += x.data[i];
  }
  relu_inplace(out);
  cache.output = out;
  return out;
}

Tensor residual_backward(const ResidualBlock& block, const ModelParams& p, const BlockCache& cache,
                         const Tensor& dy, std::span<double> d_params, Backend backend) {
  require(dy.same_shape(cache.output), "residual block output gradient has the wrong shape");
  const Tensor d_sum = relu_backward(cache.output, dy);

  const Tensor d_conv2 = se_backward(block.se, p, cache.conv2_out, cache.se, d_sum, d_params);
  Tensor d_act1;
  conv_backward(block.conv2, p, cache.act1, d_conv2, d_params, &d_act1, backend);
  const Tensor d_pre1 = relu_backward(cache.act1, d_act1);
  Tensor dx;
  conv_backward(block.conv1, p, cache.input, d_pre1, d_params, &dx, backend);

  if (block.shortcut) {
    Tensor d_sc;
    conv_backward(*block.shortcut, p, cache.input, d_sum, d_params, &d_sc, backend);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += d_sc.data[i];
  } else {
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += d_sum.data[i];
  }
  return dx;
}

// ---------------------------------------------------------------- network

Net1D::Net1D(NetConfig config, Backend backend) : config_(std::move(config)), backend_(backend) {
  config_.validate();
  const std::size_t k = config_.kernel_size;
  stem_ = add_conv(layout_, "stem", 1, config_.stem_channels, k, 1);
  std::size_t channels = config_.stem_channels;
  for (std::size_t s = 0; s < config_.stages.size(); ++s) {
    const StageConfig& st = config_.stages[s];
    for (std::size_t b = 0; b < st.blocks; ++b) {
      const std::string name = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b + 1);
      blocks_.push_back(add_residual_block(layout_, name, channels, st.channels, k, b == 0 ? st.stride : 1,
                                           config_.se_reduction));
      channels = st.channels;
    }
  }
  if (config_.head_hidden > 0) {
    head_hidden_ = add_dense(layout_, "head.hidden", channels, config_.head_hidden);
    head_out_ = add_dense(layout_, "head.out", config_.head_hidden, 1);
  } else {
    head_out_ = add_dense(layout_, "head.out", channels, 1);
  }
}

ModelParams Net1D::init_params(std::uint64_t seed) const {
  ModelParams p = layout_.zeros();
  for (std::size_t i = 0; i < p.arrays.size(); ++i) {
    const ParamArray& a = p.arrays[i];
    if (a.shape.size() < 2) continue;  // biases stay zero
    // Layers feeding a ReLU get the He bound, the rest the variance-1/fan_in bound.
    const bool into_relu = a.name.find(".expand.") == std::string::npos && a.name.rfind("head.out", 0) != 0;
    const double bound = std::sqrt((into_relu ? 6.0 : 3.0) / static_cast<double>(a.fan_in));
    Rng rng(derive_seed(seed, a.name));
    for (double& v : p.view(i)) v = uniform(rng, -bound, bound);
  }
  quantize_f32(p.values);
  return p;
}

void Net1D::check_params(const ModelParams& p) const {
  require(p.values.size() == layout_.total() && p.arrays.size() == layout_.arrays().size(),
          "parameter buffer does not match the network layout");
}

std::vector<double> Net1D::forward(const ModelParams& p, const Tensor& batch) const {
  Cache cache;
  return forward(p, batch, cache);
}

std::vector<double> Net1D::forward(const ModelParams& p, const Tensor& batch, Cache& cache) const {
  check_params(p);
  require(batch.channels == 1, "network input must have one channel");
  require(batch.length == config_.input_length,
          "waveform length " + std::to_string(batch.length) + " does not match configured input length " +
              std::to_string(config_.input_length));
  const std::size_t B = batch.batch;
  cache.input = batch;
  cache.stem_out = conv_forward(stem_, p, batch, backend_);
  relu_inplace(cache.stem_out);

  cache.blocks.assign(blocks_.size(), BlockCache{});
  const Tensor* x = &cache.stem_out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    residual_forward(blocks_[i], p, *x, cache.blocks[i], backend_);
    x = &cache.blocks[i].output;
  }

  const std::size_t C = x->channels, L = x->length;
  cache.features.assign(B * C, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < L; ++t) s += x->at(b, c, t);
      cache.features[b * C + c] = s / static_cast<double>(L);
    }

  cache.raw.assign(B, 0.0);
  if (head_hidden_) {
    cache.hidden_pre.assign(B * head_hidden_->out, 0.0);
    dense_forward(*head_hidden_, p, cache.features, B, cache.hidden_pre);
    std::vector<double> h(cache.hidden_pre);
    for (double& v : h) v = v < 0.0 ? 0.0 : v;
    dense_forward(head_out_, p, h, B, cache.raw);
  } else {
    cache.hidden_pre.clear();
    dense_forward(head_out_, p, cache.features, B, cache.raw);
  }

  std::vector<double> pred(B);
  for (std::size_t b = 0; b < B; ++b) pred[b] = config_.output_shift + config_.output_scale * cache.raw[b];
#ifndef NDEBUG
  for (double v : pred) assert(std::isfinite(v));
#endif
  return pred;
}

void Net1D::backward(const ModelParams& p, const Cache& cache, std::span<const double> d_pred,
                     std::span<double> d_params, Tensor* d_input) const {
  check_params(p);
  const std::size_t B = cache.input.batch;
  require(d_pred.size() == B, "prediction gradient length does not match the batch");
  require(d_params.size() == layout_.total(), "gradient buffer does not match the network layout");

  std::vector<double> d_raw(B);
  for (std::size_t b = 0; b < B; ++b) d_raw[b] = d_pred[b] * config_.output_scale;

  const Tensor& last = blocks_.empty() ? cache.stem_out : cache.blocks.back().output;
  const std::size_t C = last.channels, L = last.length;
  std::vector<double> d_features(B * C);
  if (head_hidden_) {
    std::vector<double> h(cache.hidden_pre);
    for (double& v : h) v = v < 0.0 ? 0.0 : v;
    std::vector<double> d_h(B * head_hidden_->out);
    dense_backward(head_out_, p, h, B, d_raw, d_params, d_h);
    for (std::size_t i = 0; i < d_h.size(); ++i)
      if (!(cache.hidden_pre[i] > 0.0)) d_h[i] = 0.0;
    dense_backward(*head_hidden_, p, cache.features, B, d_h, d_params, d_features);
  } else {
    dense_backward(head_out_, p, cache.features, B, d_raw, d_params, d_features);
  }

  Tensor dy(B, C, L);
  const double inv_l = 1.0 / static_cast<double>(L);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < L; ++t) dy.at(b, c, t) = d_features[b * C + c] * inv_l;

  for (std::size_t i = blocks_.size(); i-- > 0;) {
    dy = residual_backward(blocks_[i], p, cache.blocks[i], dy, d_params, backend_);
  }
  const Tensor d_stem = relu_backward(cache.stem_out, dy);
  conv_backward(stem_, p, cache.input, d_stem, d_params, d_input, backend_);
}

}  // namespace ppgage::nn
