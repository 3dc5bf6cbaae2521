#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include <fftw3.h>

#include "ecg/baselines.hpp"
#include "ecg/dsp.hpp"

namespace ecg::baselines {
namespace {

// Plan creation in FFTW is not thread-safe; execution on distinct arrays is.
std::mutex g_plan_mutex;

struct Spectrum {
  std::vector<double> power;  // one-sided, sums to mean(x^2)
  double bin_hz;
};

Spectrum periodogram(std::span<const double> x, double rate) {
  const std::size_t n = x.size();
  const std::size_t bins = n / 2 + 1;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    std::lock_guard lock(g_plan_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in);
  fftw_execute(plan);
  Spectrum s{std::vector<double>(bins), rate / static_cast<double>(n)};
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t k = 0; k < bins; ++k) {
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    s.power[k] = mag2 / n2 * (unpaired ? 1.0 : 2.0);
  }
  {
    std::lock_guard lock(g_plan_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return s;
}

double band_power(const Spectrum& s, double lo, double hi, bool include_hi) {
  double p = 0.0;
  for (std::size_t k = 0; k < s.power.size(); ++k) {
    const double f = static_cast<double>(k) * s.bin_hz;
    if (f >= lo && (f < hi || (include_hi && f <= hi))) p += s.power[k];
  }
  return p;
}

}  // namespace

const std::array<std::string_view, kNumFeatures>& feature_names() {
  static const std::array<std::string_view, kNumFeatures> names{
      "mean",      "std",        "skewness", "kurtosis", "rms",    "zero_crossing_rate", "band_0.5_4",
      "band_4_15", "band_15_40", "heart_rate_bpm", "st_mean", "st_std", "missing_beats"};
  return names;
}

FeatureVector extract_features(std::span<const float> window, double rate) {
  FeatureVector f{};
  const std::size_t n = window.size();
  if (n == 0) {
    f[kMissingBeats] = 1.0;
    return f;
  }
  std::vector<double> x(window.begin(), window.end());
  const double dn = static_cast<double>(n);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, sq = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    sq += v * v;
  }
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  f[kMean] = mean;
  f[kStd] = std::sqrt(m2);
  if (m2 > 1e-12) {
    f[kSkewness] = m3 / std::pow(m2, 1.5);
    f[kKurtosis] = m4 / (m2 * m2) - 3.0;
  }
  f[kRms] = std::sqrt(sq / dn);
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if ((x[i - 1] < 0.0 && x[i] >= 0.0) || (x[i - 1] >= 0.0 && x[i] < 0.0)) ++crossings;
  }
  // A constant window, zero included, has no crossings.
  if (n > 1) f[kZeroCrossingRate] = static_cast<double>(crossings) / static_cast<double>(n - 1);

  const auto spec = periodogram(x, rate);
  f[kBandLow] = band_power(spec, 0.5, 4.0, false);
  f[kBandMid] = band_power(spec, 4.0, 15.0, false);
  f[kBandHigh] = band_power(spec, 15.0, 40.0, true);

  std::vector<std::size_t> peaks;
  if (rate >= 100.0 && m2 > 1e-12) peaks = dsp::detect_r_peaks(x, rate);
  const auto after = static_cast<std::ptrdiff_t>(std::lround(0.080 * rate));
  const auto before = static_cast<std::ptrdiff_t>(std::lround(0.040 * rate));
  std::vector<double> st;
  for (std::size_t p : peaks) {
    const auto r = static_cast<std::ptrdiff_t>(p);
    if (r - before >= 0 && r + after < static_cast<std::ptrdiff_t>(n)) {
      st.push_back(x[static_cast<std::size_t>(r + after)] - x[static_cast<std::size_t>(r - before)]);
    }
  }
  if (peaks.size() < 2 || st.empty()) {
    f[kMissingBeats] = 1.0;
    return f;
  }
  const double rr = static_cast<double>(peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
  f[kHeartRate] = 60.0 * rate / rr;
  double s = 0.0;
  for (double v : st) s += v;
  const double st_mean = s / static_cast<double>(st.size());
  double var = 0.0;
  for (double v : st) var += (v - st_mean) * (v - st_mean);
  f[kStMean] = st_mean;
  f[kStStd] = std::sqrt(var / static_cast<double>(st.size()));
  return f;
}

Matrix feature_matrix(std::span<const dataset::EcgWindow> windows, double rate) {
  Matrix X(windows.size());
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto fv = extract_features(windows[static_cast<std::size_t>(i)].samples, rate);
    X[static_cast<std::size_t>(i)].assign(fv.begin(), fv.end());
  }
  return X;
}

std::vector<std::uint8_t> labels_of(std::span<const dataset::EcgWindow> windows) {
  std::vector<std::uint8_t> y;
  y.reserve(windows.size());
  for (const auto& w : windows) y.push_back(static_cast<std::uint8_t>(w.label));
  return y;
}

}  // namespace ecg::baselines
