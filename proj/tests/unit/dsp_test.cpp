#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ecg/dsp.hpp"
#include "ecg/rng.hpp"

using namespace ecg;
using namespace ecg::dsp;

namespace {

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

std::vector<double> sine(double hz, double rate, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  return x;
}

template <typename E>
E::Kind kind_of(auto&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return {};
}

}  // namespace

TEST(Resample, ConstantPassesThrough) {
  const std::vector<double> x(250, 3.0);
  const auto y = resample(x, 250.0, 200.0);
  ASSERT_EQ(y.size(), 200u);
  for (double v : y) EXPECT_NEAR(v, 3.0, 1e-3);
}

TEST(Resample, SinusoidMatchesAnalyticSampling) {
  const auto x = sine(5.0, 250.0, 2500);
  const auto y = resample(x, 250.0, 200.0);
  ASSERT_EQ(y.size(), 2000u);
  const auto ref = sine(5.0, 200.0, 2000);
  std::vector<double> err(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) err[i] = y[i] - ref[i];
  EXPECT_LT(rms(err), 1e-2);
  EXPECT_NEAR(rms(y) * std::sqrt(2.0), 1.0, 0.01);
}

TEST(Resample, OutputLengthIsRounded) {
  const std::vector<double> x(1001, 0.0);
  EXPECT_EQ(resample(x, 250.0, 200.0).size(), 801u);  // round(800.8)
  EXPECT_EQ(resample(x, 250.0, 250.0).size(), 1001u);
}

TEST(Resample, EmptyInputThrows) {
  EXPECT_EQ(kind_of<DspError>([] { resample(std::vector<double>{}, 250.0, 200.0); }), Errc::EmptyInput);
}

TEST(Median, MatchesMirrorModeReference) {
  // scipy.ndimage.median_filter(x, size, mode="mirror")
  const std::vector<double> x{0.3, -1.2, 4.0, 2.2, -0.7, 5.5, 1.1, 1.1, -3.0, 0.0, 2.5};
  EXPECT_EQ(median_filter(x, 5), (std::vector<double>{0.3, 0.3, 0.3, 2.2, 2.2, 1.1, 1.1, 1.1, 1.1, 0.0, 0.0}));
  EXPECT_EQ(median_filter(x, 3), (std::vector<double>{-1.2, 0.3, 2.2, 2.2, 2.2, 1.1, 1.1, 1.1, 0.0, 0.0, 0.0}));
}

TEST(Median, RandomAgainstNaive) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5 + rng.index(200));
    for (auto& v : x) v = std::round(rng.normal() * 4.0);  // ties on purpose
    const std::size_t w = 1 + 2 * rng.index(x.size() / 2);
    const auto y = median_filter(x, w);
    const auto half = static_cast<std::ptrdiff_t>(w / 2);
    for (std::ptrdiff_t i = half; i + half < static_cast<std::ptrdiff_t>(x.size()); ++i) {
      std::vector<double> win(x.begin() + (i - half), x.begin() + (i + half + 1));
      std::nth_element(win.begin(), win.begin() + half, win.end());
      ASSERT_EQ(y[static_cast<std::size_t>(i)], win[static_cast<std::size_t>(half)]);
    }
  }
}

TEST(Quantile, LinearInterpolationMatchesNumpy) {
  std::vector<double> x{3.5, -1.0, 7.25, 2.0, 2.0, 10.0, -4.5};
  std::sort(x.begin(), x.end());
  EXPECT_DOUBLE_EQ(quantile_sorted(x, 0.0), -4.5);
  EXPECT_NEAR(quantile_sorted(x, 0.1), -2.4, 1e-12);
  EXPECT_DOUBLE_EQ(quantile_sorted(x, 0.25), 0.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(x, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(x, 0.75), 5.375);
  EXPECT_NEAR(quantile_sorted(x, 0.9), 8.35, 1e-12);
  EXPECT_DOUBLE_EQ(quantile_sorted(x, 1.0), 10.0);
}

TEST(Baseline, ConstantGoesToZero) {
  const std::vector<double> x(1000, 2.5);
  for (double v : remove_baseline(x, 250.0)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Baseline, LinearDriftIsRemoved) {
  const double rate = 250.0;
  const std::size_t n = 2500;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    x[i] = 0.1 * t + ((i % 200) < 4 ? 1.0 : 0.0);  // 1 mV over 10 s plus sparse spikes
  }
  const auto y = remove_baseline(x, rate);
  // Least-squares slope of the output away from the edges.
  const std::size_t lo = 250, hi = n - 250;
  double st = 0, sy = 0, stt = 0, sty = 0, m = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double t = static_cast<double>(i) / rate;
    st += t;
    sy += y[i];
    stt += t * t;
    sty += t * y[i];
    m += 1;
  }
  const double slope = (m * sty - st * sy) / (m * stt - st * st);
  EXPECT_LT(std::abs(slope * 10.0), 0.1);
}

TEST(Baseline, SingleSample) { EXPECT_EQ(remove_baseline(std::vector<double>{4.2}, 250.0), (std::vector<double>{0.0})); }

TEST(Lowpass, DcUnchanged) {
  const std::vector<double> x(1000, 1.7);
  for (double v : lowpass(x, 200.0)) EXPECT_NEAR(v, 1.7, 1e-3);
}

TEST(Lowpass, SixtyHertzAttenuated) {
  const auto x = sine(60.0, 200.0, 4000);
  const auto y = lowpass(x, 200.0);
  const std::span<const double> mid(y.data() + 200, y.size() - 400);
  EXPECT_LT(rms(mid), 0.1 * rms(x));
}

TEST(Lowpass, PassbandPreserved) {
  const auto x = sine(8.0, 200.0, 4000);
  const auto y = lowpass(x, 200.0);
  const std::span<const double> a(y.data() + 200, y.size() - 400), b(x.data() + 200, x.size() - 400);
  EXPECT_NEAR(rms(a) / rms(b), 1.0, 0.01);
}

TEST(Lowpass, EvenTapsRejected) {
  EXPECT_EQ(kind_of<DspError>([] { FilterSpec::lowpass(40.0, 2).validate(200.0); }), Errc::InvalidSpec);
  EXPECT_EQ(kind_of<DspError>([] { FilterSpec::lowpass(120.0, 101).validate(200.0); }), Errc::InvalidSpec);
}

TEST(Lowpass, KernelHasUnitDcGainAndSymmetry) {
  const auto k = lowpass_kernel(40.0, 200.0, 101);
  double s = 0.0;
  for (double v : k) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(k[i], k[k.size() - 1 - i], 1e-15);
}

TEST(Normalize, GoldenVector) {
  const auto y = robust_normalize(std::vector<double>{1, 2, 3, 4});
  ASSERT_EQ(y.size(), 4u);
  EXPECT_NEAR(y[0], -1.0, 1e-12);
  EXPECT_NEAR(y[1], -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(y[2], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(y[3], 1.0, 1e-12);
}

TEST(Normalize, ConstantWindowIsZero) {
  for (double v : robust_normalize(std::vector<double>(64, 5.0))) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, ArtifactClamped) {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(static_cast<double>(i));
  x[50] = 1000.0;
  const auto y = robust_normalize(x);
  EXPECT_EQ(y[50], 20.0);
  for (double v : y) EXPECT_LE(std::abs(v), 20.0);
}

TEST(Normalize, PropertyShiftAndScaleInvariant) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(128), z(128);
    const double a = 0.1 + rng.uniform() * 10.0, b = rng.normal() * 5.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      z[i] = a * x[i] + b;
    }
    const auto yx = robust_normalize(x), yz = robust_normalize(z);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(yx[i], yz[i], 1e-9);
  }
}

namespace {

std::vector<double> spike_train(double rate, double seconds, std::vector<double> centers_s) {
  std::vector<double> x(static_cast<std::size_t>(rate * seconds), 0.0);
  for (double c : centers_s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(i) / rate - c;
      x[i] += std::exp(-0.5 * t * t / (0.010 * 0.010));
    }
  }
  return x;
}

}  // namespace

TEST(Qrs, OneHertzSpikes) {
  std::vector<double> centers;
  for (int k = 0; k < 10; ++k) centers.push_back(0.5 + k);
  const auto peaks = detect_r_peaks(spike_train(200.0, 10.0, centers), 200.0);
  EXPECT_GE(peaks.size(), 9u);
  EXPECT_LE(peaks.size(), 11u);
  std::size_t aligned = 0;
  for (auto p : peaks) {
    const double t = static_cast<double>(p) / 200.0;
    for (double c : centers) aligned += std::abs(t - c) <= 0.025;
  }
  EXPECT_GE(aligned, 9u);
}

TEST(Qrs, FlatSignalHasNoPeaks) { EXPECT_TRUE(detect_r_peaks(std::vector<double>(2000, 0.0), 200.0).empty()); }

TEST(Qrs, RefractoryMergesCloseSpikes) {
  const auto peaks = detect_r_peaks(spike_train(200.0, 4.0, {2.0, 2.1}), 200.0);
  EXPECT_EQ(peaks.size(), 1u);
}

TEST(Qrs, PropertyPeaksIncreasingAndSeparated) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> centers;
    double t = 0.3;
    while (t < 9.5) {
      centers.push_back(t);
      t += 0.4 + rng.uniform();
    }
    auto x = spike_train(250.0, 10.0, centers);
    for (auto& v : x) v += 0.02 * rng.normal();
    const auto peaks = detect_r_peaks(x, 250.0);
    for (std::size_t i = 1; i < peaks.size(); ++i) ASSERT_GE(peaks[i] - peaks[i - 1], 50u);
  }
}
