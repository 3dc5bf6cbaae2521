#include <algorithm>
#include <cmath>

#include "ecg/dsp.hpp"

namespace ecg::dsp {

double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<double> robust_normalize(std::span<const double> window, const NormalizeOptions& opts) {
  if (window.size() < 4) throw DspError(Errc::WindowTooShort, "robust_normalize needs at least 4 samples");
  std::vector<double> sorted(window.begin(), window.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = quantile_sorted(sorted, 0.5);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double scale = std::max(iqr, opts.epsilon);
  std::vector<double> out(window.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp((window[i] - median) / scale, -opts.clamp, opts.clamp);
  }
  return out;
}

}  // namespace ecg::dsp
