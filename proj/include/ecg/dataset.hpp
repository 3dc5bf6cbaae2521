#pragma once

// Fixed-length labeled ECG windows, record-disjoint splits, class balancing
// and the ECGWIN01 shard format.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecg/error.hpp"
#include "ecg/wfdb.hpp"

namespace ecg::dataset {

enum class Errc {
  SignalShorterThanWindow,
  InvalidWindow,
  InvalidFractions,
  TooFewRecords,
  SingleClassInput,
  CorruptShard,
  MissingShard,
};
using DatasetError = Error<Errc>;

enum class Label : std::uint8_t { Normal = 0, Ischemic = 1 };
enum class WindowLabel { Normal, Ischemic, Excluded };

inline constexpr std::size_t kDefaultWindowLen = 6144;
inline constexpr std::size_t kDefaultSegmentFactor = 256;

struct EcgWindow {
  std::string record_id;
  std::uint8_t lead = 0;
  std::uint64_t start_sample = 0;
  std::vector<float> samples;
  Label label = Label::Normal;

  bool operator==(const EcgWindow&) const = default;
};

struct RawWindow {
  std::size_t start = 0;
  std::vector<double> samples;
};

/// Cuts windows at 0, stride, 2*stride, ...; a trailing partial window is dropped.
/// window_len must be a positive multiple of `segment_factor`.
std::vector<RawWindow> window_record(std::span<const double> lead, std::size_t window_len, std::size_t stride,
                                     std::size_t segment_factor = kDefaultSegmentFactor);
std::vector<RawWindow> window_record(const wfdb::EcgRecord& record, std::size_t lead, std::size_t window_len,
                                     std::size_t stride, std::size_t segment_factor = kDefaultSegmentFactor);

/// Half-open sample interval [start, end).
struct Interval {
  std::int64_t start;
  std::int64_t end;
};

/// Rescales an episode's bounds between sampling rates with round-half-even.
Interval rescale_episode(const wfdb::StEpisode& ep, double from_rate, double to_rate);

struct LabelRule {
  double ischemic_min_overlap = 0.5;
};

/// Fraction of [start, start+len) covered by the union of `episodes`.
double overlap_fraction(std::size_t start, std::size_t len, std::span<const Interval> episodes);

WindowLabel label_window(std::size_t start, std::size_t len, std::span<const Interval> episodes,
                         const LabelRule& rule = {});

enum class SplitName { Train, Validation, Test };
std::string_view to_string(SplitName s);

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<EcgWindow> train;
  std::vector<EcgWindow> validation;
  std::vector<EcgWindow> test;
  std::map<std::string, SplitName> provenance;  // record id -> split

  std::vector<EcgWindow>& part(SplitName s);
  const std::vector<EcgWindow>& part(SplitName s) const;
  bool operator==(const DatasetSplit&) const = default;
};

/// Whole-record assignment by seeded shuffle. Prefers shuffles that leave both
/// classes in train (and then validation) when the data allows it.
DatasetSplit split_by_record(std::vector<EcgWindow> windows, const SplitFractions& fractions, std::uint64_t seed);

/// Oversamples the minority class by duplication until minority/majority >= ratio.
std::vector<EcgWindow> balance_classes(std::vector<EcgWindow> windows, std::uint64_t seed, double ratio = 1.0);

struct ClassCounts {
  std::size_t normal = 0;
  std::size_t ischemic = 0;
};
ClassCounts count_classes(std::span<const EcgWindow> windows);

/// Writes train/validation/test shards plus provenance.json into `dir`.
void export_shards(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit import_shards(const std::filesystem::path& dir);

/// Single-shard serialization (ECGWIN01).
std::vector<std::uint8_t> encode_shard(std::span<const EcgWindow> windows);
std::vector<EcgWindow> decode_shard(std::span<const std::uint8_t> bytes);

std::string shard_file_name(SplitName s);

}  // namespace ecg::dataset
