#include "ecg/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecg/rng.hpp"

namespace ecg::nn {

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw NnError(Errc::InvalidConfig, "model config: " + m); };
  if (n_residual_blocks == 0) fail("n_residual_blocks must be >= 1");
  if (convs_per_block == 0) fail("convs_per_block must be >= 1");
  if (kernel_len == 0) fail("kernel_len must be >= 1");
  if (base_filters == 0) fail("base_filters must be >= 1");
  if (filter_increment_every == 0) fail("filter_increment_every must be >= 1");
  if (subsample_every == 0) fail("subsample_every must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0, 1)");
  if (n_classes < 2) fail("n_classes must be >= 2");
  if (n_subsampling_blocks() >= 32) fail("too many subsampling blocks");
}

std::size_t ModelConfig::channels_at(std::size_t block) const {
  return base_filters * (1 + block / filter_increment_every);
}

std::size_t ModelConfig::stride_at(std::size_t block) const { return (block + 1) % subsample_every == 0 ? 2 : 1; }

std::size_t ModelConfig::n_subsampling_blocks() const { return n_residual_blocks / subsample_every; }

std::size_t ModelConfig::segment_len() const { return std::size_t{1} << n_subsampling_blocks(); }

template <typename T>
std::size_t ParamSet<T>::add(std::string name, std::vector<std::size_t> shape, std::vector<T> values, bool trainable) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (n != values.size()) {
    throw NnError(Errc::ShapeMismatch, "parameter " + name + " has " + std::to_string(values.size()) +
                                           " values for shape product " + std::to_string(n));
  }
  tensors_.push_back({std::move(name), std::move(shape), std::move(values), trainable});
  return tensors_.size() - 1;
}

template <typename T>
std::optional<std::size_t> ParamSet<T>::find(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return std::nullopt;
}

template <typename T>
std::size_t ParamSet<T>::total_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.values.size();
  return n;
}

template <typename T>
Gradients<T> zero_gradients(const ParamSet<T>& params) {
  Gradients<T> g;
  g.reserve(params.size());
  for (const auto& t : params.tensors()) g.emplace_back(t.values.size(), T{});
  return g;
}

template <typename T>
ResidualNet<T>::ResidualNet(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  build_layout(true, init_seed);
}

template <typename T>
ResidualNet<T>::ResidualNet(const ModelConfig& config, ParamSet<T> params) : config_(config), params_(std::move(params)) {
  config_.validate();
  build_layout(false, 0);
}

// Registers (or, when adopting parameters, verifies) every tensor in a fixed order.
template <typename T>
void ResidualNet<T>::build_layout(bool allocate, std::uint64_t init_seed) {
  Rng rng(init_seed);
  std::size_t cursor = 0;
  auto tensor = [&](const std::string& name, std::vector<std::size_t> shape, auto init, bool trainable) {
    if (allocate) {
      const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
      std::vector<T> v(n);
      for (auto& e : v) e = static_cast<T>(init());
      return params_.add(name, std::move(shape), std::move(v), trainable);
    }
    if (cursor >= params_.size() || params_[cursor].name != name || params_[cursor].shape != shape) {
      throw NnError(Errc::VersionMismatch, "parameter " + name + " missing or shaped differently than the config implies");
    }
    return cursor++;
  };
  auto zero = [] { return 0.0; };
  auto one = [] { return 1.0; };
  auto conv = [&](const std::string& prefix, std::size_t in, std::size_t out, std::size_t stride) {
    const double sd = std::sqrt(2.0 / static_cast<double>(in * config_.kernel_len));
    ConvIdx c{};
    c.weight = tensor(prefix + ".weight", {out, in, config_.kernel_len}, [&] { return rng.normal(0.0, sd); }, true);
    c.bias = tensor(prefix + ".bias", {out}, zero, true);
    c.in = in;
    c.out = out;
    c.stride = stride;
    return c;
  };
  auto bn = [&](const std::string& prefix, std::size_t ch) {
    BnIdx b{};
    b.gamma = tensor(prefix + ".gamma", {ch}, one, true);
    b.beta = tensor(prefix + ".beta", {ch}, zero, true);
    b.mean = tensor(prefix + ".running_mean", {ch}, zero, false);
    b.var = tensor(prefix + ".running_var", {ch}, one, false);
    return b;
  };

  const std::size_t base = config_.base_filters;
  stem_conv_ = conv("stem.conv", 1, base, 1);
  stem_bn_ = bn("stem.bn", base);
  blocks_.clear();
  std::size_t in = base;
  for (std::size_t b = 0; b < config_.n_residual_blocks; ++b) {
    BlockLayout L{};
    L.in_channels = in;
    L.out_channels = config_.channels_at(b);
    L.stride = config_.stride_at(b);
    for (std::size_t j = 0; j < config_.convs_per_block; ++j) {
      const std::string p = "block" + std::to_string(b);
      const std::size_t cin = j == 0 ? L.in_channels : L.out_channels;
      // The first block follows the stem's activation directly.
      if (b == 0 && j == 0) {
        L.bn.emplace_back(std::nullopt);
      } else {
        L.bn.emplace_back(bn(p + ".bn" + std::to_string(j), cin));
      }
      L.conv.push_back(conv(p + ".conv" + std::to_string(j), cin, L.out_channels, j == 0 ? L.stride : 1));
    }
    in = L.out_channels;
    blocks_.push_back(std::move(L));
  }
  head_bn_ = bn("head.bn", in);
  const double sd = std::sqrt(2.0 / static_cast<double>(in));
  head_w_ = tensor("head.linear.weight", {config_.n_classes, in}, [&] { return rng.normal(0.0, sd); }, true);
  head_b_ = tensor("head.linear.bias", {config_.n_classes}, zero, true);
  if (!allocate && cursor != params_.size()) {
    throw NnError(Errc::VersionMismatch, "parameter set has " + std::to_string(params_.size() - cursor) +
                                             " tensors beyond what the config implies");
  }
  if (!allocate) {
    for (const auto& t : params_.tensors()) {
      if (t.name.ends_with("running_var")) {
        for (T v : t.values) {
          if (!(v > T{})) throw NnError(Errc::VersionMismatch, t.name + " must be strictly positive");
        }
      }
    }
  }
}

template <typename T>
ConvWeights<T> ResidualNet<T>::conv_weights(const ConvIdx& c) const {
  return {params_[c.weight].values, params_[c.bias].values, c.out, c.in, config_.kernel_len};
}

template <typename T>
BatchNormParams<T> ResidualNet<T>::bn_params(const BnIdx& b) const {
  // Running statistics are only written through the non-const forward().
  auto& mean = const_cast<std::vector<T>&>(params_[b.mean].values);
  auto& var = const_cast<std::vector<T>&>(params_[b.var].values);
  return {params_[b.gamma].values, params_[b.beta].values, mean, var};
}

template <typename T>
Tensor3<T> ResidualNet<T>::run_block(std::size_t b, const Tensor3<T>& x, const ForwardOptions& opts,
                                     BlockTrace<T>* trace, bool allow_update) const {
  const BlockLayout& L = blocks_[b];
  if (x.channels() != L.in_channels) {
    throw NnError(Errc::ShapeMismatch, "block " + std::to_string(b) + " expects " + std::to_string(L.in_channels) +
                                           " channels, got " + std::to_string(x.channels()));
  }
  const bool update = allow_update && opts.update_running_stats;
  if (trace) {
    trace->input = x;
    trace->bn.assign(L.conv.size(), std::nullopt);
    trace->conv_in.assign(L.conv.size(), Tensor3<T>{});
    trace->dropout_scale.assign(L.conv.size(), 1.0);
  }
  Tensor3<T> h;
  const Tensor3<T>* cur = &x;
  for (std::size_t j = 0; j < L.conv.size(); ++j) {
    Tensor3<T> act;
    if (L.bn[j]) {
      BatchNormCache<T> cache;
      act = batchnorm_forward(*cur, bn_params(*L.bn[j]), opts.mode, trace ? &cache : nullptr, update);
      const double p = j > 0 ? config_.dropout_rate : 0.0;
      const double scale = relu_dropout_inplace(act, p, opts.mode, opts.dropout_seed, b * 64 + j);
      if (trace) {
        trace->bn[j] = std::move(cache);
        trace->dropout_scale[j] = scale;
      }
    } else {
      act = *cur;
    }
    h = conv1d_forward(act, conv_weights(L.conv[j]), L.conv[j].stride);
    if (trace) trace->conv_in[j] = std::move(act);
    cur = &h;
  }
  Tensor3<T> shortcut;
  if (L.stride > 1) {
    auto pooled = maxpool1d(x, L.stride);
    shortcut = pad_channels(pooled.y, L.out_channels);
    if (trace) trace->pool_argmax = std::move(pooled.argmax);
  } else {
    shortcut = pad_channels(x, L.out_channels);
  }
  if (!shortcut.same_shape(h)) throw NnError(Errc::ShapeMismatch, "residual branch and shortcut disagree");
  auto& hv = h.values();
  const auto& sv = shortcut.values();
  for (std::size_t i = 0; i < hv.size(); ++i) hv[i] += sv[i];
  return h;
}

template <typename T>
Tensor3<T> ResidualNet<T>::run(const Tensor3<T>& x, const ForwardOptions& opts, ForwardTrace<T>* trace,
                               bool allow_update) const {
  if (x.channels() != 1) {
    throw NnError(Errc::ShapeMismatch, "model input must have 1 channel, got " + std::to_string(x.channels()));
  }
  const std::size_t seg = config_.segment_len();
  if (x.length() == 0 || x.length() % seg != 0) {
    throw NnError(Errc::ShapeMismatch, "input length " + std::to_string(x.length()) + " is not a multiple of " +
                                           std::to_string(seg));
  }
  const bool update = allow_update && opts.update_running_stats;
  if (trace) {
    trace->input = x;
    trace->blocks.assign(blocks_.size(), BlockTrace<T>{});
  }
  Tensor3<T> h = conv1d_forward(x, conv_weights(stem_conv_), 1);
  h = batchnorm_forward(h, bn_params(stem_bn_), opts.mode, trace ? &trace->stem_bn : nullptr, update);
  relu_dropout_inplace(h, 0.0, opts.mode, 0, 0);
  if (trace) trace->stem_act = h;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    h = run_block(b, h, opts, trace ? &trace->blocks[b] : nullptr, allow_update);
  }
  h = batchnorm_forward(h, bn_params(head_bn_), opts.mode, trace ? &trace->head_bn : nullptr, update);
  relu_dropout_inplace(h, 0.0, opts.mode, 0, 0);
  auto logits = linear_forward<T>(h, params_[head_w_].values, params_[head_b_].values, config_.n_classes);
  if (trace) trace->head_act = std::move(h);
  return logits;
}

template <typename T>
Tensor3<T> ResidualNet<T>::forward(const Tensor3<T>& x, const ForwardOptions& opts, ForwardTrace<T>* trace) {
  return run(x, opts, trace, opts.mode == Mode::Train);
}

template <typename T>
Tensor3<T> ResidualNet<T>::block_forward(std::size_t block, const Tensor3<T>& x, const ForwardOptions& opts) {
  if (block >= blocks_.size()) throw NnError(Errc::ShapeMismatch, "no block " + std::to_string(block));
  return run_block(block, x, opts, nullptr, opts.mode == Mode::Train);
}

template <typename T>
Tensor3<T> softmax(const Tensor3<T>& logits) {
  Tensor3<T> p(logits.batch(), logits.channels(), logits.length());
  const std::size_t K = logits.length();
  const std::size_t rows = logits.batch() * logits.channels();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* z = logits.data() + r * K;
    T* out = p.data() + r * K;
    const double m = *std::max_element(z, z + K);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(static_cast<double>(z[k]) - m);
    for (std::size_t k = 0; k < K; ++k) out[k] = static_cast<T>(std::exp(static_cast<double>(z[k]) - m) / sum);
  }
  return p;
}

template <typename T>
Tensor3<T> ResidualNet<T>::predict(const Tensor3<T>& x) const {
  return softmax(run(x, ForwardOptions{Mode::Eval, 0, false}, nullptr, false));
}

template <typename T>
std::vector<double> ResidualNet<T>::window_scores(const Tensor3<T>& x) const {
  const auto p = predict(x);
  std::vector<double> s(p.batch(), 0.0);
  for (std::size_t b = 0; b < p.batch(); ++b) {
    double acc = 0.0;
    for (std::size_t t = 0; t < p.channels(); ++t) acc += p(b, t, 1);
    s[b] = acc / static_cast<double>(p.channels());
  }
  return s;
}

template <typename T>
void ResidualNet<T>::backward(const ForwardTrace<T>& trace, const Tensor3<T>& dlogits, Gradients<T>& grads,
                              Tensor3<T>* dinput) const {
  if (grads.size() != params_.size()) throw NnError(Errc::ShapeMismatch, "gradient buffer count mismatch");
  if (trace.blocks.size() != blocks_.size()) throw NnError(Errc::ShapeMismatch, "trace does not match the model");
  auto g = [&](std::size_t i) { return std::span<T>(grads[i]); };

  Tensor3<T> dh;
  linear_backward<T>(trace.head_act, params_[head_w_].values, config_.n_classes, dlogits, dh, g(head_w_), g(head_b_));
  relu_dropout_backward(trace.head_act, dh, 1.0);
  Tensor3<T> dx;
  batchnorm_backward<T>(dh, trace.head_bn, params_[head_bn_.gamma].values, dx, g(head_bn_.gamma), g(head_bn_.beta));

  for (std::size_t bi = blocks_.size(); bi-- > 0;) {
    const BlockLayout& L = blocks_[bi];
    const BlockTrace<T>& bt = trace.blocks[bi];
    const Tensor3<T>& dout = dx;

    // Shortcut: drop the zero-padded channels, then route through the pool.
    Tensor3<T> dshort(dout.batch(), L.in_channels, dout.length());
    for (std::size_t b = 0; b < dout.batch(); ++b) {
      auto src = dout.item(b).subspan(0, L.in_channels * dout.length());
      std::copy(src.begin(), src.end(), dshort.item(b).begin());
    }
    if (L.stride > 1) dshort = maxpool1d_backward(dshort, bt.pool_argmax, bt.input.length());

    Tensor3<T> grad = dout;
    for (std::size_t j = L.conv.size(); j-- > 0;) {
      const ConvIdx& c = L.conv[j];
      Tensor3<T> dact;
      conv1d_backward(bt.conv_in[j], conv_weights(c), c.stride, grad, &dact, g(c.weight), g(c.bias));
      if (L.bn[j]) {
        relu_dropout_backward(bt.conv_in[j], dact, bt.dropout_scale[j]);
        Tensor3<T> dpre;
        batchnorm_backward<T>(dact, *bt.bn[j], params_[L.bn[j]->gamma].values, dpre, g(L.bn[j]->gamma),
                              g(L.bn[j]->beta));
        grad = std::move(dpre);
      } else {
        grad = std::move(dact);
      }
    }
    auto& gv = grad.values();
    const auto& sv = dshort.values();
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += sv[i];
    dx = std::move(grad);
  }

  relu_dropout_backward(trace.stem_act, dx, 1.0);
  Tensor3<T> dconv;
  batchnorm_backward<T>(dx, trace.stem_bn, params_[stem_bn_.gamma].values, dconv, g(stem_bn_.gamma),
                        g(stem_bn_.beta));
  conv1d_backward(trace.input, conv_weights(stem_conv_), 1, dconv, dinput, g(stem_conv_.weight), g(stem_conv_.bias));
}

template class ParamSet<float>;
template class ParamSet<double>;
template Gradients<float> zero_gradients(const ParamSet<float>&);
template Gradients<double> zero_gradients(const ParamSet<double>&);
template class ResidualNet<float>;
template class ResidualNet<double>;
template Tensor3<float> softmax(const Tensor3<float>&);
template Tensor3<double> softmax(const Tensor3<double>&);

}  // namespace ecg::nn
