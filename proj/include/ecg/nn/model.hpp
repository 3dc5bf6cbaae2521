#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecg/nn/layers.hpp"
#include "ecg/nn/tensor.hpp"

namespace ecg::nn {

struct ModelConfig {
  std::size_t n_residual_blocks = 16;
  std::size_t convs_per_block = 2;
  std::size_t kernel_len = 16;
  std::size_t base_filters = 64;
  std::size_t filter_increment_every = 4;
  std::size_t subsample_every = 2;
  double dropout_rate = 0.2;
  std::size_t n_classes = 2;

  /// Throws InvalidConfig.
  void validate() const;
  /// Output channels of block b: base_filters * (1 + b / filter_increment_every).
  std::size_t channels_at(std::size_t block) const;
  /// 2 for every subsample_every-th block, else 1.
  std::size_t stride_at(std::size_t block) const;
  std::size_t n_subsampling_blocks() const;
  /// Input samples per output segment.
  std::size_t segment_len() const;

  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> values;
  bool trainable = true;

  bool operator==(const ParamTensor&) const = default;
};

template <typename T>
class ParamSet {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape, std::vector<T> values, bool trainable = true);
  std::size_t size() const { return tensors_.size(); }
  ParamTensor<T>& operator[](std::size_t i) { return tensors_[i]; }
  const ParamTensor<T>& operator[](std::size_t i) const { return tensors_[i]; }
  std::vector<ParamTensor<T>>& tensors() { return tensors_; }
  const std::vector<ParamTensor<T>>& tensors() const { return tensors_; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t total_values() const;

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& t : tensors_) {
      out.add(t.name, t.shape, std::vector<U>(t.values.begin(), t.values.end()), t.trainable);
    }
    return out;
  }

  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<ParamTensor<T>> tensors_;
};

template <typename T>
using Gradients = std::vector<std::vector<T>>;

template <typename T>
Gradients<T> zero_gradients(const ParamSet<T>& params);

struct ForwardOptions {
  Mode mode = Mode::Eval;
  std::uint64_t dropout_seed = 0;
  bool update_running_stats = true;  // train mode only
};

template <typename T>
struct BlockTrace {
  Tensor3<T> input;
  std::vector<std::optional<BatchNormCache<T>>> bn;
  std::vector<Tensor3<T>> conv_in;  // pre-activated input of each conv
  std::vector<double> dropout_scale;
  std::vector<std::uint32_t> pool_argmax;
};

template <typename T>
struct ForwardTrace {
  Tensor3<T> input;
  BatchNormCache<T> stem_bn;
  Tensor3<T> stem_act;
  std::vector<BlockTrace<T>> blocks;
  BatchNormCache<T> head_bn;
  Tensor3<T> head_act;
};

/// Pre-activation residual 1-D CNN producing per-segment logits.
template <typename T>
class ResidualNet {
 public:
  /// He-normal convolution weights, BN gain 1 / offset 0, zero biases.
  ResidualNet(const ModelConfig& config, std::uint64_t init_seed);
  /// Adopts existing parameters; throws VersionMismatch when names or shapes
  /// disagree with the config.
  ResidualNet(const ModelConfig& config, ParamSet<T> params);

  const ModelConfig& config() const { return config_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  /// Logits (batch, segments, classes). Train mode with update_running_stats
  /// mutates BN running statistics.
  Tensor3<T> forward(const Tensor3<T>& x, const ForwardOptions& opts, ForwardTrace<T>* trace = nullptr);

  /// Eval-mode softmax probabilities (batch, segments, classes).
  Tensor3<T> predict(const Tensor3<T>& x) const;

  /// Mean ischemic-class probability over segments, one per batch item.
  std::vector<double> window_scores(const Tensor3<T>& x) const;

  /// Accumulates parameter gradients into `grads`; writes dL/dx when requested.
  void backward(const ForwardTrace<T>& trace, const Tensor3<T>& dlogits, Gradients<T>& grads,
                Tensor3<T>* dinput = nullptr) const;

  /// Single residual block, exposed for tests.
  Tensor3<T> block_forward(std::size_t block, const Tensor3<T>& x, const ForwardOptions& opts);

  template <typename U>
  ResidualNet<U> cast() const {
    return ResidualNet<U>(config_, params_.template cast<U>());
  }

 private:
  struct ConvIdx {
    std::size_t weight, bias, in, out, stride;
  };
  struct BnIdx {
    std::size_t gamma, beta, mean, var;
  };
  struct BlockLayout {
    std::size_t in_channels, out_channels, stride;
    std::vector<std::optional<BnIdx>> bn;
    std::vector<ConvIdx> conv;
  };

  void build_layout(bool allocate, std::uint64_t init_seed);
  ConvWeights<T> conv_weights(const ConvIdx& c) const;
  BatchNormParams<T> bn_params(const BnIdx& b) const;
  Tensor3<T> run(const Tensor3<T>& x, const ForwardOptions& opts, ForwardTrace<T>* trace, bool allow_update) const;
  Tensor3<T> run_block(std::size_t b, const Tensor3<T>& x, const ForwardOptions& opts, BlockTrace<T>* trace,
                       bool allow_update) const;

  ModelConfig config_;
  ParamSet<T> params_;
  ConvIdx stem_conv_{};
  BnIdx stem_bn_{};
  std::vector<BlockLayout> blocks_;
  BnIdx head_bn_{};
  std::size_t head_w_ = 0, head_b_ = 0;
};

/// Row-wise softmax over the class axis of (batch, segments, classes).
template <typename T>
Tensor3<T> softmax(const Tensor3<T>& logits);

}  // namespace ecg::nn
