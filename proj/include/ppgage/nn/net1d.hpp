#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppgage/nn/tensor.hpp"

namespace ppgage::nn {

struct StageConfig {
  std::size_t blocks = 2;
  std::size_t channels = 16;
  std::size_t stride = 2;  // applied by the first block of the stage
};

/// Architecture of the residual squeeze-excitation 1D CNN.
struct NetConfig {
  std::size_t input_length = 100;
  std::size_t stem_channels = 16;
  std::vector<StageConfig> stages{{2, 16, 2}, {2, 32, 2}};
  std::size_t se_reduction = 4;
  std::size_t kernel_size = 7;
  std::size_t head_hidden = 0;  // 0: global pool feeds the output unit directly
  // Prediction in years = output_shift + output_scale * raw network output.
  double output_shift = 0.0;
  double output_scale = 1.0;

  void validate() const;

  /// stem conv(k=7, 16ch) -> 2 stages x 2 blocks (16, 32 ch, stride 2) -> GAP -> dense 32->1
  static NetConfig desk();
  /// Two single-block stages of 4 channels on length-16 inputs, for gradient checks.
  static NetConfig tiny();
};

struct ParamArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  std::size_t fan_in = 1;
};

/// Named arrays packed into one flat buffer; gradients use the same layout.
struct ModelParams {
  std::vector<ParamArray> arrays;
  std::vector<double> values;

  std::size_t parameter_count() const { return values.size(); }
  std::span<const double> view(std::size_t array) const;
  std::span<double> view(std::size_t array);
  const ParamArray* find(std::string_view name) const;
};

class ParamLayout {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape, std::size_t fan_in);
  const std::vector<ParamArray>& arrays() const { return arrays_; }
  std::size_t total() const { return total_; }
  ModelParams zeros() const;

 private:
  std::vector<ParamArray> arrays_;
  std::size_t total_ = 0;
};

enum class Backend { serial, parallel };

struct ConvLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t weight = 0;  // array index
  std::size_t bias = 0;
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight = 0;  // [out][in]
  std::size_t bias = 0;
};

struct SeLayer {
  std::size_t channels = 0;
  std::size_t hidden = 0;
  DenseLayer reduce;
  DenseLayer expand;
};

struct ResidualBlock {
  ConvLayer conv1;
  ConvLayer conv2;
  SeLayer se;
  std::optional<ConvLayer> shortcut;  // strided 1x1 projection when shapes change
};

ConvLayer add_conv(ParamLayout& layout, const std::string& name, std::size_t in, std::size_t out,
                   std::size_t kernel, std::size_t stride);
DenseLayer add_dense(ParamLayout& layout, const std::string& name, std::size_t in, std::size_t out);
SeLayer add_se(ParamLayout& layout, const std::string& name, std::size_t channels, std::size_t reduction);
ResidualBlock add_residual_block(ParamLayout& layout, const std::string& name, std::size_t in,
                                 std::size_t out, std::size_t kernel, std::size_t stride,
                                 std::size_t reduction);

Tensor conv_forward(const ConvLayer& layer, const ModelParams& p, const Tensor& x, Backend backend);
/// Accumulates weight/bias gradients into d_params; writes d x into dx when given.
void conv_backward(const ConvLayer& layer, const ModelParams& p, const Tensor& x, const Tensor& dy,
                   std::span<double> d_params, Tensor* dx, Backend backend);

struct SeCache {
  std::vector<double> pooled;      // batch x channels
  std::vector<double> hidden_pre;  // batch x hidden
  std::vector<double> gate;        // batch x channels, in (0, 1)
};

Tensor se_forward(const SeLayer& layer, const ModelParams& p, const Tensor& x, SeCache& cache);
Tensor se_backward(const SeLayer& layer, const ModelParams& p, const Tensor& x, const SeCache& cache,
                   const Tensor& dy, std::span<double> d_params);

struct BlockCache {
  Tensor input;
  Tensor act1;  // relu(conv1(x))
  Tensor conv2_out;
  SeCache se;
  Tensor output;  // relu(se + shortcut)
};

Tensor residual_forward(const ResidualBlock& block, const ModelParams& p, const Tensor& x, BlockCache& cache,
                        Backend backend);
Tensor residual_backward(const ResidualBlock& block, const ModelParams& p, const BlockCache& cache,
                         const Tensor& dy, std::span<double> d_params, Backend backend);

/// Round every value to the nearest binary32 number. Trained parameters and
/// optimizer moments live on this lattice so checkpoints are exact.
void quantize_f32(std::span<double> values);

class Net1D {
 public:
  struct Cache {
    Tensor input;
    Tensor stem_out;
    std::vector<BlockCache> blocks;
    std::vector<double> features;     // batch x channels after global pooling
    std::vector<double> hidden_pre;   // batch x head_hidden
    std::vector<double> raw;          // batch
  };

  explicit Net1D(NetConfig config, Backend backend = Backend::parallel);

  const NetConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::size_t parameter_count() const { return layout_.total(); }
  Backend backend() const { return backend_; }
  const ConvLayer& stem() const { return stem_; }
  const std::vector<ResidualBlock>& blocks() const { return blocks_; }

  /// Fan-in scaled uniform weights, zero biases, one RNG stream per array.
  ModelParams init_params(std::uint64_t seed) const;

  /// Predictions in years for a (batch, 1, input_length) tensor.
  std::vector<double> forward(const ModelParams& p, const Tensor& batch) const;
  std::vector<double> forward(const ModelParams& p, const Tensor& batch, Cache& cache) const;

  /// d_pred: d loss / d prediction (years). Accumulates into d_params (layout
  /// sized); writes d loss / d input into d_input when given.
  void backward(const ModelParams& p, const Cache& cache, std::span<const double> d_pred,
                std::span<double> d_params, Tensor* d_input) const;

  void check_params(const ModelParams& p) const;

 private:
  NetConfig config_;
  Backend backend_;
  ParamLayout layout_;
  ConvLayer stem_;
  std::vector<ResidualBlock> blocks_;
  std::optional<DenseLayer> head_hidden_;
  DenseLayer head_out_;
};

}  // namespace ppgage::nn
