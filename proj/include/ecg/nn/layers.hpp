#pragma once

// Layer kernels of the 1-D residual network. Every kernel is templated on
// the scalar type so the same code runs the float32 training path and the
// float64 gradient-check path.

#include <cstdint>
#include <span>
#include <vector>

#include "ecg/nn/tensor.hpp"

namespace ecg::nn {

/// "Same" padding geometry: out = ceil(in / stride), extra padding on the right.
struct ConvGeometry {
  std::size_t in_length;
  std::size_t out_length;
  std::size_t pad_left;
  std::size_t stride;
  std::size_t kernel;
};
ConvGeometry conv_geometry(std::size_t in_length, std::size_t kernel, std::size_t stride);

template <typename T>
struct ConvWeights {
  std::span<const T> weight;  // (out, in, kernel)
  std::span<const T> bias;    // (out)
  std::size_t out_channels;
  std::size_t in_channels;
  std::size_t kernel;
};

/// Cross-correlation with zero "same" padding.
template <typename T>
Tensor3<T> conv1d_forward(const Tensor3<T>& x, const ConvWeights<T>& w, std::size_t stride);

/// Accumulates into dweight/dbias; writes dx when non-null.
template <typename T>
void conv1d_backward(const Tensor3<T>& x, const ConvWeights<T>& w, std::size_t stride, const Tensor3<T>& dy,
                     Tensor3<T>* dx, std::span<T> dweight, std::span<T> dbias);

struct BatchNormOptions {
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double epsilon = 1e-5;
};

template <typename T>
struct BatchNormParams {
  std::span<const T> gamma;
  std::span<const T> beta;
  std::span<T> running_mean;  // updated in train mode when non-empty
  std::span<T> running_var;
};

template <typename T>
struct BatchNormCache {
  Tensor3<T> x_hat;
  std::vector<double> inv_std;
};

/// Train mode normalizes with batch statistics over (batch, length) and
/// updates running statistics; eval mode uses the running statistics only.
template <typename T>
Tensor3<T> batchnorm_forward(const Tensor3<T>& x, const BatchNormParams<T>& p, Mode mode, BatchNormCache<T>* cache,
                             bool update_running = true, const BatchNormOptions& opts = {});

template <typename T>
void batchnorm_backward(const Tensor3<T>& dy, const BatchNormCache<T>& cache, std::span<const T> gamma,
                        Tensor3<T>& dx, std::span<T> dgamma, std::span<T> dbeta);

template <typename T>
Tensor3<T> relu(const Tensor3<T>& x);

/// Inverted dropout: kept values scaled by 1/(1-p). The keep mask is a pure
/// function of (seed, tag, element index). Identity in eval mode or p == 0.
template <typename T>
Tensor3<T> dropout(const Tensor3<T>& x, double p, Mode mode, std::uint64_t seed, std::uint64_t tag);

bool dropout_keep(std::uint64_t seed, std::uint64_t tag, std::size_t index, double p);

/// ReLU followed by dropout in one pass; returns the dropout scale applied to kept values.
template <typename T>
double relu_dropout_inplace(Tensor3<T>& x, double p, Mode mode, std::uint64_t seed, std::uint64_t tag);

/// Backward of relu_dropout_inplace given its output: positive outputs were
/// kept and active, everything else carries no gradient.
template <typename T>
void relu_dropout_backward(const Tensor3<T>& out, Tensor3<T>& grad, double scale);

template <typename T>
struct MaxPoolResult {
  Tensor3<T> y;
  std::vector<std::uint32_t> argmax;  // source offset within each row
};

/// Non-overlapping max pooling; output length ceil(length / factor).
template <typename T>
MaxPoolResult<T> maxpool1d(const Tensor3<T>& x, std::size_t factor);

template <typename T>
Tensor3<T> maxpool1d_backward(const Tensor3<T>& dy, const std::vector<std::uint32_t>& argmax, std::size_t in_length);

/// Appends zero channels up to `channels`.
template <typename T>
Tensor3<T> pad_channels(const Tensor3<T>& x, std::size_t channels);

/// Per-time-step dense layer: logits (batch, length, classes) from x (batch, channels, length).
template <typename T>
Tensor3<T> linear_forward(const Tensor3<T>& x, std::span<const T> weight, std::span<const T> bias,
                          std::size_t classes);

template <typename T>
void linear_backward(const Tensor3<T>& x, std::span<const T> weight, std::size_t classes, const Tensor3<T>& dlogits,
                     Tensor3<T>& dx, std::span<T> dweight, std::span<T> dbias);

namespace testing_hooks {
/// Corrupts conv weight gradients (x1.01) while set; lets the verify suite prove it can fail.
void set_conv_backward_fault(bool enabled);
bool conv_backward_fault();
}  // namespace testing_hooks

}  // namespace ecg::nn
