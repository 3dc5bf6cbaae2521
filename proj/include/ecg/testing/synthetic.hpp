#pragma once

// Synthetic ECG generator used by tests, the verify suite and the
// acceptance experiments.

#include <cstdint>
#include <span>
#include <vector>

#include "ecg/dataset.hpp"
#include "ecg/rng.hpp"

namespace ecg::testing {

struct Patient {
  double heart_rate_bpm = 70.0;
  double r_amp_mv = 1.0;
  double t_amp_mv = 0.3;
  double noise_mv = 0.03;
  double wander_mv = 0.2;
  double wander_hz = 0.2;
};

Patient random_patient(Rng& rng);

/// Sample range carrying an ST offset between QRS complexes.
struct StSpan {
  std::size_t start;
  std::size_t end;
  double offset_mv;
};

struct SyntheticSignal {
  std::vector<double> mv;
  std::vector<std::size_t> r_peaks;
};

/// P-QRS-T beats with heart-rate jitter, baseline wander and white noise. In
/// each StSpan the J-point-to-T-end stretch of every beat is shifted.
SyntheticSignal synth_ecg(std::size_t n, double rate, const Patient& p, std::span<const StSpan> st, Rng& rng);

struct SyntheticSetOptions {
  std::size_t patients = 40;
  std::size_t windows_per_patient = 50;
  double ischemic_fraction = 0.5;
  std::size_t window_len = 6144;
  double rate = 200.0;
  double st_offset_mv = -0.15;
  double st_duration_s = 30.0;
  std::uint64_t seed = 1;
};

/// Windows run through baseline removal, low-pass and robust normalization.
/// Record ids are "p000".."pNNN", one per simulated patient.
std::vector<dataset::EcgWindow> synthetic_windows(const SyntheticSetOptions& opts);

}  // namespace ecg::testing
