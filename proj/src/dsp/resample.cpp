#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ecg/dsp.hpp"

namespace ecg::dsp {
namespace {

constexpr std::ptrdiff_t kHalfWidth = 24;  // kernel half-width, in input samples
constexpr double kKaiserBeta = 8.0;
constexpr double kRolloff = 0.9;  // cutoff as a fraction of the lower Nyquist rate

long long integral_rate(double rate, const char* which) {
  const long long r = std::llround(rate);
  if (!(rate > 0.0) || std::abs(rate - static_cast<double>(r)) > 1e-9) {
    throw DspError(Errc::InvalidSpec, std::string(which) + " rate must be a positive integer number of Hz");
  }
  return r;
}

// Odd (point-symmetric) extension, clamped once the reflection leaves the signal.
double extended(std::span<const double> x, std::ptrdiff_t k) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (k < 0) return 2.0 * x[0] - x[static_cast<std::size_t>(std::min(-k, n - 1))];
  if (k >= n) return 2.0 * x[static_cast<std::size_t>(n - 1)] - x[static_cast<std::size_t>(std::max(2 * (n - 1) - k, std::ptrdiff_t{0}))];
  return x[static_cast<std::size_t>(k)];
}

}  // namespace

std::vector<double> resample(std::span<const double> signal, double from_rate, double to_rate) {
  if (signal.empty()) throw DspError(Errc::EmptyInput, "resample: empty input");
  const long long from = integral_rate(from_rate, "source");
  const long long to = integral_rate(to_rate, "target");
  const long long g = std::gcd(from, to);
  const long long up = to / g;
  const long long down = from / g;

  const auto n_in = static_cast<long long>(signal.size());
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * static_cast<double>(to) / static_cast<double>(from)));
  if (up == 1 && down == 1) return {signal.begin(), signal.end()};

  // Kernel sampled on the upsampled grid; one normalized tap table per phase.
  const double fc = kRolloff * 0.5 / static_cast<double>(std::max(up, down));
  const double span_up = static_cast<double>(kHalfWidth * up);
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  auto kernel = [&](double m) {
    if (std::abs(m) > span_up) return 0.0;
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double r = m / span_up;
    return sinc * std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
  };
  const std::size_t n_taps = 2 * kHalfWidth + 1;
  std::vector<std::vector<double>> phases(static_cast<std::size_t>(up), std::vector<double>(n_taps));
  for (long long p = 0; p < up; ++p) {
    auto& taps = phases[static_cast<std::size_t>(p)];
    double sum = 0.0;
    for (std::ptrdiff_t d = -kHalfWidth; d <= kHalfWidth; ++d) {
      const double w = kernel(static_cast<double>(p - d * up));
      taps[static_cast<std::size_t>(d + kHalfWidth)] = w;
      sum += w;
    }
    for (auto& w : taps) w /= sum;
  }

  std::vector<double> out(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    const long long pos = static_cast<long long>(j) * down;  // position on the upsampled grid
    const long long base = pos / up;
    const auto& taps = phases[static_cast<std::size_t>(pos - base * up)];
    double acc = 0.0;
    for (std::ptrdiff_t d = -kHalfWidth; d <= kHalfWidth; ++d) {
      acc += taps[static_cast<std::size_t>(d + kHalfWidth)] * extended(signal, static_cast<std::ptrdiff_t>(base) + d);
    }
    out[j] = acc;
  }
  return out;
}

}  // namespace ecg::dsp
