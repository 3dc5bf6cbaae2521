#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ecg/error.hpp"

namespace ecg::nn {

enum class Errc {
  ShapeMismatch,
  BatchTooSmall,
  NonFiniteGradient,
  EmptySplit,
  InvalidConfig,
  VersionMismatch,
  CorruptCheckpoint,
};
using NnError = Error<Errc>;

enum class Mode { Train, Eval };

/// Dense (batch, channels, length) tensor, row-major.
template <typename T>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t batch, std::size_t channels, std::size_t length, T fill = T{})
      : batch_(batch), channels_(channels), length_(length), data_(batch * channels * length, fill) {}

  std::size_t batch() const { return batch_; }
  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator()(std::size_t b, std::size_t c, std::size_t t) { return data_[(b * channels_ + c) * length_ + t]; }
  T operator()(std::size_t b, std::size_t c, std::size_t t) const { return data_[(b * channels_ + c) * length_ + t]; }

  std::span<T> row(std::size_t b, std::size_t c) { return {data_.data() + (b * channels_ + c) * length_, length_}; }
  std::span<const T> row(std::size_t b, std::size_t c) const {
    return {data_.data() + (b * channels_ + c) * length_, length_};
  }
  /// All channels of one batch item, (channels x length).
  std::span<T> item(std::size_t b) { return {data_.data() + b * channels_ * length_, channels_ * length_}; }
  std::span<const T> item(std::size_t b) const { return {data_.data() + b * channels_ * length_, channels_ * length_}; }

  bool same_shape(const Tensor3& o) const {
    return batch_ == o.batch_ && channels_ == o.channels_ && length_ == o.length_;
  }
  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t batch_ = 0;
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<T> data_;
};

}  // namespace ecg::nn
