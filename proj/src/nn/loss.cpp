#include "ecg/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ecg::nn {
namespace {

template <typename T>
void check_labels(const Tensor3<T>& t, std::span<const std::uint8_t> labels) {
  if (labels.size() != t.batch()) {
    throw NnError(Errc::ShapeMismatch, "loss: " + std::to_string(labels.size()) + " labels for batch of " +
                                           std::to_string(t.batch()));
  }
  for (auto l : labels) {
    if (l >= t.length()) throw NnError(Errc::ShapeMismatch, "loss: label " + std::to_string(l) + " out of range");
  }
  if (t.channels() == 0 || t.batch() == 0) throw NnError(Errc::ShapeMismatch, "loss: empty input");
}

}  // namespace

template <typename T>
LossResult<T> cross_entropy(const Tensor3<T>& logits, std::span<const std::uint8_t> labels) {
  check_labels(logits, labels);
  const std::size_t K = logits.length();
  const std::size_t segs = logits.channels();
  const double count = static_cast<double>(logits.batch() * segs);
  LossResult<T> r{0.0, Tensor3<T>(logits.batch(), segs, K)};
  std::vector<double> p(K);
  for (std::size_t b = 0; b < logits.batch(); ++b) {
    for (std::size_t t = 0; t < segs; ++t) {
      const T* z = logits.data() + (b * segs + t) * K;
      T* d = r.dlogits.data() + (b * segs + t) * K;
      const double m = *std::max_element(z, z + K);
      double sum = 0.0;
      for (std::size_t k = 0; k < K; ++k) sum += (p[k] = std::exp(static_cast<double>(z[k]) - m));
      for (std::size_t k = 0; k < K; ++k) p[k] /= sum;
      r.loss -= std::log(std::max(p[labels[b]], kLogClamp));
      for (std::size_t k = 0; k < K; ++k) d[k] = static_cast<T>((p[k] - (k == labels[b] ? 1.0 : 0.0)) / count);
    }
  }
  r.loss /= count;
  return r;
}

template <typename T>
double cross_entropy_probs(const Tensor3<T>& probs, std::span<const std::uint8_t> labels) {
  check_labels(probs, labels);
  double loss = 0.0;
  for (std::size_t b = 0; b < probs.batch(); ++b) {
    for (std::size_t t = 0; t < probs.channels(); ++t) {
      loss -= std::log(std::max(static_cast<double>(probs(b, t, labels[b])), kLogClamp));
    }
  }
  return loss / static_cast<double>(probs.batch() * probs.channels());
}

template LossResult<float> cross_entropy(const Tensor3<float>&, std::span<const std::uint8_t>);
template LossResult<double> cross_entropy(const Tensor3<double>&, std::span<const std::uint8_t>);
template double cross_entropy_probs(const Tensor3<float>&, std::span<const std::uint8_t>);
template double cross_entropy_probs(const Tensor3<double>&, std::span<const std::uint8_t>);

}  // namespace ecg::nn
