#pragma once

// Reader for PhysioNet WFDB records: .hea headers, format 212/16 signal
// files, MIT-format annotation streams, and ST-episode extraction from the
// LTST episode annotators.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecg/error.hpp"

namespace ecg::wfdb {

enum class Errc {
  MalformedHeader,
  UnsupportedFormat,
  TruncatedData,
  TruncatedStream,
  DanglingAux,
  MissingFile,
};

using WfdbError = Error<Errc>;

enum class Warning {
  ChecksumMismatch,
  UnpairedBoundary,
  IncompleteEpisode,
  MissingDeviation,
  InvariantViolation,
};

using WfdbDiagnostic = Diagnostic<Warning>;

enum class StorageFormat : int { Format16 = 16, Format212 = 212 };

inline constexpr double kDefaultGain = 200.0;      // ADC units per mV
inline constexpr double kDefaultFrequency = 250.0;  // Hz

struct SignalSpec {
  std::string file_name;
  StorageFormat storage_format = StorageFormat::Format212;
  std::size_t byte_offset = 0;
  double gain = kDefaultGain;
  int adc_baseline = 0;
  std::string units = "mV";
  int adc_resolution = 12;
  int adc_zero = 0;
  int initial_value = 0;
  std::optional<int> checksum;
  std::string description;
};

struct RecordHeader {
  std::string record_name;
  std::size_t n_signals = 0;
  double sampling_rate = kDefaultFrequency;
  std::size_t n_samples = 0;  // 0 when the header leaves it unspecified
  std::vector<SignalSpec> signals;

  double duration_seconds() const { return static_cast<double>(n_samples) / sampling_rate; }
};

/// Parses the text of a .hea file. Throws WfdbError{MalformedHeader|UnsupportedFormat}.
RecordHeader parse_header(std::string_view text);

/// Raw ADC samples for the signals stored in one .dat file.
struct RawSignals {
  std::vector<std::vector<std::int32_t>> leads;
  std::vector<WfdbDiagnostic> diagnostics;
};

/// Decodes one signal file. `specs` are the signals stored in that file, in
/// frame order. n_samples == 0 infers the count from the byte length.
RawSignals read_signal(std::span<const SignalSpec> specs, std::span<const std::uint8_t> bytes,
                       std::size_t n_samples);

/// Unpacks format-212 bytes into a flat sample stream (signals interleaved).
std::vector<std::int32_t> decode_212(std::span<const std::uint8_t> bytes, std::size_t n_values);

constexpr double adc_to_physical(double raw, const SignalSpec& spec) {
  return (raw - spec.adc_baseline) / spec.gain;
}

struct EcgRecord {
  RecordHeader header;
  std::vector<std::vector<double>> signals;  // mV, one vector per lead
};

// MIT annotation codes used by the reader.
inline constexpr int kCodeSkip = 59;
inline constexpr int kCodeNum = 60;
inline constexpr int kCodeSub = 61;
inline constexpr int kCodeChn = 62;
inline constexpr int kCodeAux = 63;

struct AnnotationEvent {
  std::int64_t sample_index = 0;
  int code = 0;
  int subtype = 0;
  int channel = 0;
  int num = 0;
  std::optional<std::string> aux;

  bool operator==(const AnnotationEvent&) const = default;
};

/// Decodes an MIT-format annotation stream.
/// Throws WfdbError{TruncatedStream|DanglingAux}.
std::vector<AnnotationEvent> read_annotations(std::span<const std::uint8_t> bytes);

enum class Protocol { A, B, C };

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);

/// Minimum episode depth and duration that define an LTST protocol.
struct EpisodeCriteria {
  double min_deviation_uv;
  double min_duration_s;
};

/// A: 75 uV / 30 s, B: 100 uV / 30 s, C: 100 uV / 60 s.
EpisodeCriteria criteria_for(Protocol p);

struct StEpisode {
  int lead = 0;
  std::int64_t start_sample = 0;
  std::int64_t extremum_sample = 0;
  std::int64_t end_sample = 0;
  double deviation_uv = 0.0;
  Protocol protocol = Protocol::B;

  double duration_seconds(double rate) const {
    return static_cast<double>(end_sample - start_sample) / rate;
  }
  bool operator==(const StEpisode&) const = default;
};

// Aux-text markers of the ST episode annotators:
//   begin     "(st<lead><sign>"            e.g. "(st0-"
//   extremum  "[a]st<lead><sign><uV>"      e.g. "st0-150", "ast1+120"
//   end       "st<lead><sign>)"            e.g. "st0-)"
// Matching is case-insensitive; anything else is not an episode marker.
enum class MarkerKind { Begin, Extremum, End };

struct EpisodeMarker {
  MarkerKind kind;
  int lead;
  int sign;  // +1 elevation, -1 depression
  std::optional<double> deviation_uv;

  bool operator==(const EpisodeMarker&) const = default;
};

std::optional<EpisodeMarker> parse_episode_marker(std::string_view aux);

struct EpisodeExtraction {
  std::vector<StEpisode> episodes;  // sorted by (lead, start)
  std::vector<WfdbDiagnostic> diagnostics;
};

EpisodeExtraction extract_st_episodes(std::span<const AnnotationEvent> events, Protocol protocol,
                                      double sampling_rate);
EpisodeExtraction extract_st_episodes(std::span<const AnnotationEvent> events, Protocol protocol,
                                      double sampling_rate, const EpisodeCriteria& criteria);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

struct LoadedRecord {
  EcgRecord record;
  std::vector<WfdbDiagnostic> diagnostics;
};

/// Loads <dir>/<name>.hea and its signal files, converted to mV.
/// Throws WfdbError{MissingFile} naming the absent file.
LoadedRecord load_record(const std::filesystem::path& dir, const std::string& name);

/// Reads only the header of <dir>/<name>.hea.
RecordHeader load_header(const std::filesystem::path& dir, const std::string& name);

/// Record names from <dir>/RECORDS if present, else every *.hea basename (sorted).
std::vector<std::string> discover_records(const std::filesystem::path& dir);

}  // namespace ecg::wfdb
