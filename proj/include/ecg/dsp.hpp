#pragma once

// Signal conditioning for ECG leads: rational resampling, baseline-wander
// removal, zero-phase low-pass filtering, robust window normalization and
// QRS (R-peak) detection.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ecg/error.hpp"

namespace ecg::dsp {

enum class Errc { EmptyInput, InvalidSpec, WindowTooShort };
using DspError = Error<Errc>;

enum class FilterKind { LowpassFir, MedianBaseline };

struct FilterSpec {
  FilterKind kind = FilterKind::LowpassFir;
  double cutoff_hz = 40.0;                          // LowpassFir
  std::size_t taps = 101;                           // LowpassFir, odd
  std::pair<double, double> window_ms{200.0, 600.0};  // MedianBaseline, two cascaded medians

  static FilterSpec lowpass(double cutoff_hz = 40.0, std::size_t taps = 101) {
    return {FilterKind::LowpassFir, cutoff_hz, taps, {200.0, 600.0}};
  }
  static FilterSpec median_baseline(double short_ms = 200.0, double long_ms = 600.0) {
    return {FilterKind::MedianBaseline, 40.0, 101, {short_ms, long_ms}};
  }

  /// Throws DspError{InvalidSpec} if the spec cannot be applied at `rate`.
  void validate(double rate) const;
};

/// Polyphase rational resampler with a Kaiser-windowed sinc kernel.
/// Output length is round(n * to_rate / from_rate). Rates must be integral Hz.
std::vector<double> resample(std::span<const double> signal, double from_rate, double to_rate);

/// Subtracts a baseline estimated by two cascaded median filters.
std::vector<double> remove_baseline(std::span<const double> signal, double rate,
                                    const FilterSpec& spec = FilterSpec::median_baseline());

/// Zero-phase (forward-backward) Hamming-windowed sinc FIR low-pass.
std::vector<double> lowpass(std::span<const double> signal, double rate,
                            const FilterSpec& spec = FilterSpec::lowpass());

/// Unit-DC-gain Hamming-windowed sinc low-pass kernel.
std::vector<double> lowpass_kernel(double cutoff_hz, double rate, std::size_t taps);

/// Running median with an odd window and symmetric reflection at the edges.
std::vector<double> median_filter(std::span<const double> signal, std::size_t window);

/// Quantile by linear interpolation between order statistics, q in [0, 1].
/// `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double q);

struct NormalizeOptions {
  double epsilon = 1e-6;
  double clamp = 20.0;
};

/// (x - median) / max(IQR, epsilon), clamped to [-clamp, clamp].
std::vector<double> robust_normalize(std::span<const double> window, const NormalizeOptions& opts = {});

struct QrsOptions {
  double band_low_hz = 5.0;
  double band_high_hz = 15.0;
  double integration_ms = 150.0;
  double refractory_ms = 200.0;
  double learning_s = 2.0;
};

/// Pan-Tompkins style detector. Returns strictly increasing sample indices
/// separated by at least the refractory period. Requires rate >= 100 Hz.
std::vector<std::size_t> detect_r_peaks(std::span<const double> signal, double rate, const QrsOptions& opts = {});

/// "Same"-length convolution with a symmetric odd-length kernel over a
/// signal extended by odd reflection at both ends.
std::vector<double> convolve_symmetric(std::span<const double> signal, std::span<const double> kernel);

}  // namespace ecg::dsp
