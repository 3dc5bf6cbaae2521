#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ecg/dsp.hpp"

namespace ecg::dsp {
namespace {

std::size_t odd_samples(double seconds, double rate) {
  auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  if (n < 1) n = 1;
  return n % 2 == 0 ? n + 1 : n;
}

struct Candidate {
  std::size_t index;
  double value;
};

}  // namespace

std::vector<std::size_t> detect_r_peaks(std::span<const double> signal, double rate, const QrsOptions& opts) {
  if (rate < 100.0) throw DspError(Errc::InvalidSpec, "detect_r_peaks needs rate >= 100 Hz");
  const std::size_t n = signal.size();
  if (n < 8) return {};

  // Zero-phase band-pass as the difference of two low-pass kernels.
  const std::size_t taps = odd_samples(0.5, rate);
  auto band = lowpass_kernel(opts.band_high_hz, rate, taps);
  const auto low = lowpass_kernel(opts.band_low_hz, rate, taps);
  for (std::size_t k = 0; k < taps; ++k) band[k] -= low[k];
  const auto filtered = convolve_symmetric(signal, band);

  auto at = [&](std::ptrdiff_t i) {
    return filtered[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n - 1)))];
  };
  std::vector<double> energy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    const double d = (2.0 * at(ii + 1) + at(ii + 2) - at(ii - 2) - 2.0 * at(ii - 1)) * (rate / 8.0);
    energy[i] = d * d;
  }

  // Centered moving-window integration.
  const std::size_t w = odd_samples(opts.integration_ms / 1000.0, rate);
  const std::size_t half = w / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + energy[i];
  std::vector<double> mwi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    mwi[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(w);
  }
  const double peak_all = *std::max_element(mwi.begin(), mwi.end());
  if (!(peak_all > 1e-12)) return {};

  std::vector<Candidate> cands;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) cands.push_back({i, mwi[i]});
  }

  const auto learn = std::min(n, static_cast<std::size_t>(opts.learning_s * rate));
  double spki = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(learn, 1))) / 3.0;
  double npki = std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(learn, 1)), 0.0) /
                static_cast<double>(std::max<std::size_t>(learn, 1)) / 2.0;
  double threshold = npki + 0.25 * (spki - npki);
  const auto refractory = static_cast<std::size_t>(std::ceil(opts.refractory_ms / 1000.0 * rate));

  std::vector<Candidate> beats;
  std::vector<Candidate> skipped;
  auto rr_average = [&]() {
    if (beats.size() < 2) return 0.0;
    const std::size_t k = std::min<std::size_t>(8, beats.size() - 1);
    return static_cast<double>(beats.back().index - beats[beats.size() - 1 - k].index) / static_cast<double>(k);
  };

  for (const auto& c : cands) {
    // Search back for a missed beat when the gap grows past 1.66 mean RR.
    const double rr = rr_average();
    if (rr > 0.0 && static_cast<double>(c.index - beats.back().index) > 1.66 * rr) {
      const Candidate* best = nullptr;
      for (const auto& s : skipped) {
        if (s.value > 0.5 * threshold && s.index - beats.back().index >= refractory && (!best || s.value > best->value)) {
          best = &s;
        }
      }
      if (best) {
        beats.push_back(*best);
        spki = 0.25 * best->value + 0.75 * spki;
        skipped.clear();
      }
    }
    if (c.value > threshold) {
      if (beats.empty() || c.index - beats.back().index >= refractory) {
        beats.push_back(c);
        spki = 0.125 * c.value + 0.875 * spki;
        skipped.clear();
      } else if (c.value > beats.back().value &&
                 (beats.size() < 2 || c.index - beats[beats.size() - 2].index >= refractory)) {
        beats.back() = c;
      }
    } else {
      npki = 0.125 * c.value + 0.875 * npki;
      skipped.push_back(c);
    }
    threshold = npki + 0.25 * (spki - npki);
  }

  // Align each detection to the largest band-passed excursion nearby.
  const auto search = static_cast<std::size_t>(std::llround(0.075 * rate));
  std::vector<std::size_t> peaks;
  for (const auto& b : beats) {
    const std::size_t lo = b.index >= search ? b.index - search : 0;
    const std::size_t hi = std::min(n - 1, b.index + search);
    std::size_t best = lo;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (std::abs(filtered[i]) > std::abs(filtered[best])) best = i;
    }
    if (peaks.empty() || best >= peaks.back() + refractory) peaks.push_back(best);
  }
  return peaks;
}

}  // namespace ecg::dsp
