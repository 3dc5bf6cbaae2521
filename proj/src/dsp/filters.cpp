#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ecg/dsp.hpp"

namespace ecg::dsp {
namespace {

// Symmetric reflection about the first and last samples (edge not repeated).
std::size_t reflect_index(std::ptrdiff_t j, std::size_t n) {
  if (n == 1) return 0;
  const auto last = static_cast<std::ptrdiff_t>(n - 1);
  const std::ptrdiff_t period = 2 * last;
  j %= period;
  if (j < 0) j += period;
  return static_cast<std::size_t>(j <= last ? j : period - j);
}

std::size_t odd_window(double ms, double rate) {
  auto w = static_cast<std::size_t>(std::llround(ms * rate / 1000.0));
  if (w < 1) w = 1;
  return w % 2 == 0 ? w + 1 : w;
}

}  // namespace

void FilterSpec::validate(double rate) const {
  if (!(rate > 0.0)) throw DspError(Errc::InvalidSpec, "sampling rate must be positive");
  if (kind == FilterKind::LowpassFir) {
    if (taps < 3 || taps % 2 == 0) {
      throw DspError(Errc::InvalidSpec, "FIR taps must be odd and >= 3, got " + std::to_string(taps));
    }
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate / 2.0)) {
      throw DspError(Errc::InvalidSpec, "cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, rate/2)");
    }
  } else {
    if (!(window_ms.first > 0.0) || !(window_ms.second > 0.0)) {
      throw DspError(Errc::InvalidSpec, "median window lengths must be positive");
    }
  }
}

std::vector<double> median_filter(std::span<const double> x, std::size_t window) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  if (window % 2 == 0) ++window;
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  std::vector<double> sorted;
  sorted.reserve(window);
  for (std::ptrdiff_t j = -half; j <= half; ++j) sorted.push_back(x[reflect_index(j, n)]);
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> out(n);
  out[0] = sorted[static_cast<std::size_t>(half)];
  for (std::size_t i = 1; i < n; ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    const double leaving = x[reflect_index(ii - 1 - half, n)];
    const double entering = x[reflect_index(ii + half, n)];
    if (leaving != entering) {
      sorted.erase(std::lower_bound(sorted.begin(), sorted.end(), leaving));
      sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), entering), entering);
    }
    out[i] = sorted[static_cast<std::size_t>(half)];
  }
  return out;
}

std::vector<double> remove_baseline(std::span<const double> signal, double rate, const FilterSpec& spec) {
  if (signal.empty()) throw DspError(Errc::EmptyInput, "remove_baseline: empty input");
  if (spec.kind != FilterKind::MedianBaseline) {
    throw DspError(Errc::InvalidSpec, "remove_baseline needs a median baseline spec");
  }
  spec.validate(rate);
  auto baseline = median_filter(signal, odd_window(spec.window_ms.first, rate));
  baseline = median_filter(baseline, odd_window(spec.window_ms.second, rate));
  std::vector<double> out(signal.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = signal[i] - baseline[i];
  return out;
}

std::vector<double> lowpass_kernel(double cutoff_hz, double rate, std::size_t taps) {
  const double fc = cutoff_hz / rate;
  const auto half = static_cast<double>(taps / 2);
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t k = 0; k < taps; ++k) {
    const double m = static_cast<double>(k) - half;
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(taps - 1));
    h[k] = sinc * window;
    sum += h[k];
  }
  for (auto& v : h) v /= sum;
  return h;
}

std::vector<double> convolve_symmetric(std::span<const double> x, std::span<const double> kernel) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t half = kernel.size() / 2;
  const std::size_t last = n - 1;
  std::vector<double> padded(n + 2 * half);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    const auto j = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(half);
    if (j < 0) {
      padded[i] = 2.0 * x[0] - x[std::min<std::size_t>(static_cast<std::size_t>(-j), last)];
    } else if (static_cast<std::size_t>(j) > last) {
      const std::size_t over = static_cast<std::size_t>(j) - last;
      padded[i] = 2.0 * x[last] - x[over > last ? 0 : last - over];
    } else {
      padded[i] = x[static_cast<std::size_t>(j)];
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const double* p = padded.data() + i;
    for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * p[k];
    out[i] = acc;
  }
  return out;
}

std::vector<double> lowpass(std::span<const double> signal, double rate, const FilterSpec& spec) {
  if (spec.kind != FilterKind::LowpassFir) throw DspError(Errc::InvalidSpec, "lowpass needs a FIR spec");
  spec.validate(rate);
  if (signal.empty()) throw DspError(Errc::EmptyInput, "lowpass: empty input");
  // A forward pass followed by a time-reversed pass of a symmetric kernel h
  // equals one pass of h * h.
  const auto h = lowpass_kernel(spec.cutoff_hz, rate, spec.taps);
  std::vector<double> hh(2 * h.size() - 1, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) hh[i + j] += h[i] * h[j];
  }
  return convolve_symmetric(signal, hh);
}

}  // namespace ecg::dsp
