#pragma once

#include <cstdint>
#include <span>

#include "ecg/nn/tensor.hpp"

namespace ecg::nn {

inline constexpr double kLogClamp = 1e-12;

template <typename T>
struct LossResult {
  double loss;
  Tensor3<T> dlogits;  // (softmax - onehot) / (batch * segments)
};

/// Mean segment-level cross-entropy; each window label is broadcast to all
/// of its segments. logits are (batch, segments, classes).
template <typename T>
LossResult<T> cross_entropy(const Tensor3<T>& logits, std::span<const std::uint8_t> labels);

/// Same loss evaluated on probabilities, log clamped at kLogClamp.
template <typename T>
double cross_entropy_probs(const Tensor3<T>& probs, std::span<const std::uint8_t> labels);

}  // namespace ecg::nn
