#include "ecg/nn/layers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <string>

#include <Eigen/Core>

#include "ecg/rng.hpp"

namespace ecg::nn {

namespace testing_hooks {
namespace {
std::atomic<bool> g_conv_fault{false};
}
void set_conv_backward_fault(bool enabled) { g_conv_fault.store(enabled); }
bool conv_backward_fault() { return g_conv_fault.load(); }
}  // namespace testing_hooks

namespace {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMajor<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMajor<T>>;

// Per-thread reusable buffers; `slot` distinguishes buffers alive at the same time.
template <typename T>
T* scratch(int slot, std::size_t n) {
  thread_local std::vector<T> buffers[2];
  auto& buf = buffers[slot];
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

template <typename T>
Eigen::Map<Eigen::Array<std::remove_const_t<T>, Eigen::Dynamic, 1>> row_array(std::span<T> r) {
  return {r.data(), static_cast<Eigen::Index>(r.size())};
}
template <typename T>
Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>> row_array(std::span<const T> r) {
  return {r.data(), static_cast<Eigen::Index>(r.size())};
}

[[noreturn]] void shape_error(const std::string& msg) { throw NnError(Errc::ShapeMismatch, msg); }

template <typename T>
void check_conv(const Tensor3<T>& x, const ConvWeights<T>& w, std::size_t stride) {
  if (stride == 0 || w.kernel == 0) shape_error("conv1d: stride and kernel must be >= 1");
  if (x.channels() != w.in_channels) {
    shape_error("conv1d: input has " + std::to_string(x.channels()) + " channels, weights expect " +
                std::to_string(w.in_channels));
  }
  if (w.weight.size() != w.out_channels * w.in_channels * w.kernel || w.bias.size() != w.out_channels) {
    shape_error("conv1d: weight/bias sizes do not match (out, in, kernel)");
  }
  if (x.length() == 0) shape_error("conv1d: empty input");
}

// Columns are built for output positions [t0, t0 + n) at a time so the
// buffer stays cache resident.
constexpr std::size_t kChunkBytes = 256 * 1024;

std::size_t chunk_len(std::size_t rows, std::size_t elem, std::size_t out_len) {
  const std::size_t n = std::max<std::size_t>(64, kChunkBytes / (rows * elem)) / 16 * 16;
  return std::min(n, out_len);
}

// col[(i*K + k), t - t0] = x[i, t*stride + k - pad_left], zero outside the signal.
template <typename T>
void im2col(std::span<const T> x, std::size_t channels, const ConvGeometry& g, std::size_t t0, std::size_t n, T* col) {
  const auto in_len = static_cast<std::ptrdiff_t>(g.in_length);
  const auto s = static_cast<std::ptrdiff_t>(g.stride);
  const auto begin = static_cast<std::ptrdiff_t>(t0);
  const auto count = static_cast<std::ptrdiff_t>(n);
  for (std::size_t i = 0; i < channels; ++i) {
    const T* src = x.data() + i * g.in_length;
    for (std::size_t k = 0; k < g.kernel; ++k) {
      T* dst = col + (i * g.kernel + k) * n;
      const auto shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(g.pad_left);
      // valid t satisfies 0 <= (begin + t) * s + shift < in_len
      const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>((-shift + s - 1) / s - begin, 0, count);
      const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>((in_len - shift + s - 1) / s - begin, lo, count);
      std::fill(dst, dst + lo, T{});
      if (s == 1) {
        std::memcpy(dst + lo, src + begin + lo + shift, static_cast<std::size_t>(hi - lo) * sizeof(T));
      } else {
        for (std::ptrdiff_t t = lo; t < hi; ++t) dst[t] = src[(begin + t) * s + shift];
      }
      std::fill(dst + hi, dst + count, T{});
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t channels, const ConvGeometry& g, std::size_t t0, std::size_t n,
                std::span<T> dx) {
  const auto in_len = static_cast<std::ptrdiff_t>(g.in_length);
  const auto s = static_cast<std::ptrdiff_t>(g.stride);
  const auto begin = static_cast<std::ptrdiff_t>(t0);
  const auto count = static_cast<std::ptrdiff_t>(n);
  for (std::size_t i = 0; i < channels; ++i) {
    T* dst = dx.data() + i * g.in_length;
    for (std::size_t k = 0; k < g.kernel; ++k) {
      const T* src = col + (i * g.kernel + k) * n;
      const auto shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(g.pad_left);
      const std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>((-shift + s - 1) / s - begin, 0, count);
      const std::ptrdiff_t hi = std::clamp<std::ptrdiff_t>((in_len - shift + s - 1) / s - begin, lo, count);
      for (std::ptrdiff_t t = lo; t < hi; ++t) dst[(begin + t) * s + shift] += src[t];
    }
  }
}

}  // namespace

ConvGeometry conv_geometry(std::size_t in_length, std::size_t kernel, std::size_t stride) {
  const std::size_t out = (in_length + stride - 1) / stride;
  const std::size_t needed = (out - 1) * stride + kernel;
  const std::size_t pad_total = needed > in_length ? needed - in_length : 0;
  return {in_length, out, pad_total / 2, stride, kernel};
}

template <typename T>
Tensor3<T> conv1d_forward(const Tensor3<T>& x, const ConvWeights<T>& w, std::size_t stride) {
  check_conv(x, w, stride);
  const ConvGeometry g = conv_geometry(x.length(), w.kernel, stride);
  const std::size_t rows = w.in_channels * w.kernel;
  Tensor3<T> y(x.batch(), w.out_channels, g.out_length);
  const ConstMap<T> weight(w.weight.data(), static_cast<Eigen::Index>(w.out_channels), static_cast<Eigen::Index>(rows));
  const auto batch = static_cast<std::ptrdiff_t>(x.batch());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < batch; ++b) {
    const std::size_t chunk = chunk_len(rows, sizeof(T), g.out_length);
    T* col = scratch<T>(0, rows * chunk);
    MutMap<T> out(y.item(static_cast<std::size_t>(b)).data(), static_cast<Eigen::Index>(w.out_channels),
                  static_cast<Eigen::Index>(g.out_length));
    for (std::size_t t0 = 0; t0 < g.out_length; t0 += chunk) {
      const std::size_t n = std::min(chunk, g.out_length - t0);
      im2col<T>(x.item(static_cast<std::size_t>(b)), w.in_channels, g, t0, n, col);
      out.middleCols(static_cast<Eigen::Index>(t0), static_cast<Eigen::Index>(n)).noalias() =
          weight * ConstMap<T>(col, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
    }
    for (std::size_t o = 0; o < w.out_channels; ++o) out.row(static_cast<Eigen::Index>(o)).array() += w.bias[o];
  }
  return y;
}

template <typename T>
void conv1d_backward(const Tensor3<T>& x, const ConvWeights<T>& w, std::size_t stride, const Tensor3<T>& dy,
                     Tensor3<T>* dx, std::span<T> dweight, std::span<T> dbias) {
  check_conv(x, w, stride);
  const ConvGeometry g = conv_geometry(x.length(), w.kernel, stride);
  if (dy.batch() != x.batch() || dy.channels() != w.out_channels || dy.length() != g.out_length) {
    shape_error("conv1d_backward: upstream gradient shape mismatch");
  }
  if (dweight.size() != w.weight.size() || dbias.size() != w.bias.size()) {
    shape_error("conv1d_backward: gradient buffer sizes mismatch");
  }
  if (dx) *dx = Tensor3<T>(x.batch(), x.channels(), x.length());

  const std::size_t rows = w.in_channels * w.kernel;
  const std::size_t wsize = w.weight.size();
  const auto out_ch = static_cast<Eigen::Index>(w.out_channels);
  const auto out_len = static_cast<Eigen::Index>(g.out_length);
  const ConstMap<T> weight(w.weight.data(), out_ch, static_cast<Eigen::Index>(rows));

  // Per-item partial gradients reduced in item order keep the result
  // independent of the thread count.
  std::vector<T> dw_items(x.batch() * wsize);
  std::vector<double> db_items(x.batch() * w.out_channels, 0.0);
  const auto batch = static_cast<std::ptrdiff_t>(x.batch());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < batch; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    const std::size_t chunk = chunk_len(rows, sizeof(T), g.out_length);
    T* col = scratch<T>(0, rows * chunk);
    const ConstMap<T> grad(dy.item(b).data(), out_ch, out_len);
    MutMap<T> dw(dw_items.data() + b * wsize, out_ch, static_cast<Eigen::Index>(rows));
    dw.setZero();
    T* dcol = dx ? scratch<T>(1, rows * chunk) : nullptr;
    for (std::size_t t0 = 0; t0 < g.out_length; t0 += chunk) {
      const std::size_t n = std::min(chunk, g.out_length - t0);
      const auto cols_t0 = static_cast<Eigen::Index>(t0);
      const auto cols_n = static_cast<Eigen::Index>(n);
      im2col<T>(x.item(b), w.in_channels, g, t0, n, col);
      dw.noalias() += grad.middleCols(cols_t0, cols_n) * ConstMap<T>(col, static_cast<Eigen::Index>(rows), cols_n).transpose();
      if (dx) {
        MutMap<T> dc(dcol, static_cast<Eigen::Index>(rows), cols_n);
        dc.noalias() = weight.transpose() * grad.middleCols(cols_t0, cols_n);
        col2im_add<T>(dcol, w.in_channels, g, t0, n, dx->item(b));
      }
    }
    for (std::size_t o = 0; o < w.out_channels; ++o) {
      double acc = 0.0;
      for (T v : dy.row(b, o)) acc += v;
      db_items[b * w.out_channels + o] = acc;
    }
  }
  const T fault = testing_hooks::conv_backward_fault() ? T(1.01) : T(1);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    const T* p = dw_items.data() + b * wsize;
    for (std::size_t j = 0; j < wsize; ++j) dweight[j] += fault * p[j];
    for (std::size_t o = 0; o < w.out_channels; ++o) dbias[o] += static_cast<T>(db_items[b * w.out_channels + o]);
  }
}

template <typename T>
Tensor3<T> batchnorm_forward(const Tensor3<T>& x, const BatchNormParams<T>& p, Mode mode, BatchNormCache<T>* cache,
                             bool update_running, const BatchNormOptions& opts) {
  const std::size_t C = x.channels();
  if (p.gamma.size() != C || p.beta.size() != C || p.running_mean.size() != C || p.running_var.size() != C) {
    shape_error("batchnorm: parameter sizes do not match channel count " + std::to_string(C));
  }
  const std::size_t N = x.batch() * x.length();
  Tensor3<T> y(x.batch(), C, x.length());
  if (mode == Mode::Eval) {
    for (std::size_t c = 0; c < C; ++c) {
      const double inv = 1.0 / std::sqrt(static_cast<double>(p.running_var[c]) + opts.epsilon);
      const double scale = static_cast<double>(p.gamma[c]) * inv;
      const double shift = static_cast<double>(p.beta[c]) - static_cast<double>(p.running_mean[c]) * scale;
      for (std::size_t b = 0; b < x.batch(); ++b) {
        auto src = x.row(b, c);
        auto dst = y.row(b, c);
        for (std::size_t t = 0; t < src.size(); ++t) dst[t] = static_cast<T>(src[t] * scale + shift);
      }
    }
    return y;
  }
  if (N < 2) throw NnError(Errc::BatchTooSmall, "batchnorm: train mode needs batch x length >= 2");
  if (cache) {
    cache->x_hat = Tensor3<T>(x.batch(), C, x.length());
    cache->inv_std.assign(C, 0.0);
  }
  const auto channels = static_cast<std::ptrdiff_t>(C);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < channels; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    double sum = 0.0;
    for (std::size_t b = 0; b < x.batch(); ++b) sum += row_array(x.row(b, c)).template cast<double>().sum();
    const double mean = sum / static_cast<double>(N);
    double sq = 0.0;
    for (std::size_t b = 0; b < x.batch(); ++b) {
      sq += (row_array(x.row(b, c)).template cast<double>() - mean).square().sum();
    }
    const double var = sq / static_cast<double>(N);
    const double inv = 1.0 / std::sqrt(var + opts.epsilon);
    const double gamma = p.gamma[c], beta = p.beta[c];
    for (std::size_t b = 0; b < x.batch(); ++b) {
      const auto xh = ((row_array(x.row(b, c)).template cast<double>() - mean) * inv).eval();
      row_array(y.row(b, c)) = (gamma * xh + beta).template cast<T>();
      if (cache) row_array(cache->x_hat.row(b, c)) = xh.template cast<T>();
    }
    if (cache) cache->inv_std[c] = inv;
    if (update_running) {
      const double unbiased = sq / static_cast<double>(N - 1);
      p.running_mean[c] = static_cast<T>(opts.momentum * p.running_mean[c] + (1.0 - opts.momentum) * mean);
      p.running_var[c] = static_cast<T>(opts.momentum * p.running_var[c] + (1.0 - opts.momentum) * unbiased);
    }
  }
  return y;
}

template <typename T>
void batchnorm_backward(const Tensor3<T>& dy, const BatchNormCache<T>& cache, std::span<const T> gamma,
                        Tensor3<T>& dx, std::span<T> dgamma, std::span<T> dbeta) {
  const std::size_t C = dy.channels();
  if (!dy.same_shape(cache.x_hat) || gamma.size() != C || dgamma.size() != C || dbeta.size() != C) {
    shape_error("batchnorm_backward: shape mismatch");
  }
  if (!dx.same_shape(dy)) dx = Tensor3<T>(dy.batch(), C, dy.length());
  const auto N = static_cast<double>(dy.batch() * dy.length());
  const auto channels = static_cast<std::ptrdiff_t>(C);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < channels; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t b = 0; b < dy.batch(); ++b) {
      const auto g = row_array(dy.row(b, c)).template cast<double>();
      sum_dy += g.sum();
      sum_dy_xh += (g * row_array(cache.x_hat.row(b, c)).template cast<double>()).sum();
    }
    dbeta[c] += static_cast<T>(sum_dy);
    dgamma[c] += static_cast<T>(sum_dy_xh);
    const double k = static_cast<double>(gamma[c]) * cache.inv_std[c] / N;
    for (std::size_t b = 0; b < dy.batch(); ++b) {
      auto g = dy.row(b, c);
      auto xh = cache.x_hat.row(b, c);
      row_array(dx.row(b, c)) =
          (k * (N * row_array(g).template cast<double>() - sum_dy - row_array(xh).template cast<double>() * sum_dy_xh))
              .template cast<T>();
    }
  }
}

template <typename T>
Tensor3<T> relu(const Tensor3<T>& x) {
  Tensor3<T> y = x;
  for (auto& v : y.values()) v = v > T{} ? v : T{};
  return y;
}

namespace {
inline bool keep_from_base(std::uint64_t base, std::size_t index, double p) {
  return unit_from_bits(splitmix64(base ^ (static_cast<std::uint64_t>(index) * 0xd1b54a32d192ed03ULL))) >= p;
}
}  // namespace

bool dropout_keep(std::uint64_t seed, std::uint64_t tag, std::size_t index, double p) {
  return keep_from_base(mix_seed(seed, tag), index, p);
}

template <typename T>
Tensor3<T> dropout(const Tensor3<T>& x, double p, Mode mode, std::uint64_t seed, std::uint64_t tag) {
  Tensor3<T> y = x;
  if (mode == Mode::Eval || p <= 0.0) return y;
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  auto& v = y.values();
  const std::uint64_t base = mix_seed(seed, tag);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = keep_from_base(base, i, p) ? v[i] * scale : T{};
  return y;
}

template <typename T>
double relu_dropout_inplace(Tensor3<T>& x, double p, Mode mode, std::uint64_t seed, std::uint64_t tag) {
  auto& v = x.values();
  if (mode == Mode::Eval || p <= 0.0) {
    for (auto& e : v) e = e > T{} ? e : T{};
    return 1.0;
  }
  const double scale = 1.0 / (1.0 - p);
  const T s = static_cast<T>(scale);
  const std::uint64_t base = mix_seed(seed, tag);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (v[i] > T{} && keep_from_base(base, i, p)) ? v[i] * s : T{};
  }
  return scale;
}

template <typename T>
void relu_dropout_backward(const Tensor3<T>& out, Tensor3<T>& grad, double scale) {
  if (!out.same_shape(grad)) shape_error("relu_dropout_backward: shape mismatch");
  const T s = static_cast<T>(scale);
  auto& g = grad.values();
  const auto& o = out.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = o[i] > T{} ? g[i] * s : T{};
}

template <typename T>
MaxPoolResult<T> maxpool1d(const Tensor3<T>& x, std::size_t factor) {
  if (factor == 0) shape_error("maxpool1d: factor must be >= 1");
  const std::size_t out_len = (x.length() + factor - 1) / factor;
  MaxPoolResult<T> r{Tensor3<T>(x.batch(), x.channels(), out_len), std::vector<std::uint32_t>(x.batch() * x.channels() * out_len)};
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < x.channels(); ++c) {
      auto src = x.row(b, c);
      auto dst = r.y.row(b, c);
      std::uint32_t* arg = r.argmax.data() + (b * x.channels() + c) * out_len;
      for (std::size_t t = 0; t < out_len; ++t) {
        const std::size_t lo = t * factor;
        const std::size_t hi = std::min(lo + factor, x.length());
        std::size_t best = lo;
        for (std::size_t i = lo + 1; i < hi; ++i) {
          if (src[i] > src[best]) best = i;
        }
        dst[t] = src[best];
        arg[t] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
Tensor3<T> maxpool1d_backward(const Tensor3<T>& dy, const std::vector<std::uint32_t>& argmax, std::size_t in_length) {
  if (argmax.size() != dy.size()) shape_error("maxpool1d_backward: argmax size mismatch");
  Tensor3<T> dx(dy.batch(), dy.channels(), in_length);
  for (std::size_t b = 0; b < dy.batch(); ++b) {
    for (std::size_t c = 0; c < dy.channels(); ++c) {
      auto g = dy.row(b, c);
      auto out = dx.row(b, c);
      const std::uint32_t* arg = argmax.data() + (b * dy.channels() + c) * dy.length();
      for (std::size_t t = 0; t < g.size(); ++t) out[arg[t]] += g[t];
    }
  }
  return dx;
}

template <typename T>
Tensor3<T> pad_channels(const Tensor3<T>& x, std::size_t channels) {
  if (channels < x.channels()) shape_error("pad_channels: cannot shrink channel count");
  if (channels == x.channels()) return x;
  Tensor3<T> y(x.batch(), channels, x.length());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    auto src = x.item(b);
    std::copy(src.begin(), src.end(), y.item(b).begin());
  }
  return y;
}

template <typename T>
Tensor3<T> linear_forward(const Tensor3<T>& x, std::span<const T> weight, std::span<const T> bias, std::size_t classes) {
  const std::size_t C = x.channels(), L = x.length();
  if (weight.size() != classes * C || bias.size() != classes) shape_error("linear: weight/bias size mismatch");
  Tensor3<T> logits(x.batch(), L, classes);
  std::vector<double> acc(L);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t k = 0; k < classes; ++k) {
      std::fill(acc.begin(), acc.end(), static_cast<double>(bias[k]));
      for (std::size_t c = 0; c < C; ++c) {
        const double wkc = weight[k * C + c];
        auto row = x.row(b, c);
        for (std::size_t t = 0; t < L; ++t) acc[t] += wkc * row[t];
      }
      for (std::size_t t = 0; t < L; ++t) logits(b, t, k) = static_cast<T>(acc[t]);
    }
  }
  return logits;
}

template <typename T>
void linear_backward(const Tensor3<T>& x, std::span<const T> weight, std::size_t classes, const Tensor3<T>& dlogits,
                     Tensor3<T>& dx, std::span<T> dweight, std::span<T> dbias) {
  const std::size_t C = x.channels(), L = x.length();
  if (dlogits.batch() != x.batch() || dlogits.channels() != L || dlogits.length() != classes ||
      dweight.size() != classes * C || dbias.size() != classes) {
    shape_error("linear_backward: shape mismatch");
  }
  if (!dx.same_shape(x)) dx = Tensor3<T>(x.batch(), C, L);
  for (std::size_t k = 0; k < classes; ++k) {
    double db = 0.0;
    for (std::size_t b = 0; b < x.batch(); ++b) {
      for (std::size_t t = 0; t < L; ++t) db += dlogits(b, t, k);
    }
    dbias[k] += static_cast<T>(db);
    for (std::size_t c = 0; c < C; ++c) {
      double dw = 0.0;
      for (std::size_t b = 0; b < x.batch(); ++b) {
        auto row = x.row(b, c);
        for (std::size_t t = 0; t < L; ++t) dw += static_cast<double>(dlogits(b, t, k)) * row[t];
      }
      dweight[k * C + c] += static_cast<T>(dw);
    }
  }
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      auto out = dx.row(b, c);
      for (std::size_t t = 0; t < L; ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < classes; ++k) acc += static_cast<double>(weight[k * C + c]) * dlogits(b, t, k);
        out[t] = static_cast<T>(acc);
      }
    }
  }
}

#define ECG_INSTANTIATE_LAYERS(T)                                                                                   \
  template Tensor3<T> conv1d_forward<T>(const Tensor3<T>&, const ConvWeights<T>&, std::size_t);                    \
  template void conv1d_backward<T>(const Tensor3<T>&, const ConvWeights<T>&, std::size_t, const Tensor3<T>&,       \
                                   Tensor3<T>*, std::span<T>, std::span<T>);                                       \
  template Tensor3<T> batchnorm_forward<T>(const Tensor3<T>&, const BatchNormParams<T>&, Mode, BatchNormCache<T>*, \
                                           bool, const BatchNormOptions&);                                         \
  template void batchnorm_backward<T>(const Tensor3<T>&, const BatchNormCache<T>&, std::span<const T>, Tensor3<T>&, \
                                      std::span<T>, std::span<T>);                                                 \
  template Tensor3<T> relu<T>(const Tensor3<T>&);                                                                  \
  template Tensor3<T> dropout<T>(const Tensor3<T>&, double, Mode, std::uint64_t, std::uint64_t);                   \
  template double relu_dropout_inplace<T>(Tensor3<T>&, double, Mode, std::uint64_t, std::uint64_t);                \
  template void relu_dropout_backward<T>(const Tensor3<T>&, Tensor3<T>&, double);                                  \
  template MaxPoolResult<T> maxpool1d<T>(const Tensor3<T>&, std::size_t);                                          \
  template Tensor3<T> maxpool1d_backward<T>(const Tensor3<T>&, const std::vector<std::uint32_t>&, std::size_t);    \
  template Tensor3<T> pad_channels<T>(const Tensor3<T>&, std::size_t);                                             \
  template Tensor3<T> linear_forward<T>(const Tensor3<T>&, std::span<const T>, std::span<const T>, std::size_t);   \
  template void linear_backward<T>(const Tensor3<T>&, std::span<const T>, std::size_t, const Tensor3<T>&,          \
                                   Tensor3<T>&, std::span<T>, std::span<T>);

ECG_INSTANTIATE_LAYERS(float)
ECG_INSTANTIATE_LAYERS(double)

}  // namespace ecg::nn
