#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "ecg/dataset.hpp"
#include "ecg/rng.hpp"

using namespace ecg;
using namespace ecg::dataset;

namespace {

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

std::vector<EcgWindow> windows_for(std::size_t n_records, std::size_t per_record, std::size_t len = 8) {
  std::vector<EcgWindow> ws;
  for (std::size_t r = 0; r < n_records; ++r) {
    for (std::size_t k = 0; k < per_record; ++k) {
      EcgWindow w;
      w.record_id = "rec" + std::to_string(r);
      w.start_sample = k * len;
      w.samples.assign(len, static_cast<float>(r) + 0.25f * static_cast<float>(k));
      w.label = (k % 3 == 0) ? Label::Ischemic : Label::Normal;
      ws.push_back(std::move(w));
    }
  }
  return ws;
}

}  // namespace

TEST(Windowing, FloorArithmetic) {
  const std::vector<double> x(20000, 0.0);
  const auto w = window_record(x, 6144, 6144);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].start, 0u);
  EXPECT_EQ(w[1].start, 6144u);
  EXPECT_EQ(w[2].start, 12288u);
}

TEST(Windowing, HalfStride) {
  const std::vector<double> x(12288, 0.0);
  const auto w = window_record(x, 6144, 3072);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[2].start, 6144u);
}

TEST(Windowing, ShortSignal) {
  EXPECT_EQ(kind_of<DatasetError>([] { window_record(std::vector<double>(6143, 0.0), 6144, 6144); }),
            Errc::SignalShorterThanWindow);
}

TEST(Windowing, LengthMustBeSegmentMultiple) {
  EXPECT_EQ(kind_of<DatasetError>([] { window_record(std::vector<double>(7000, 0.0), 6000, 6000); }),
            Errc::InvalidWindow);
}

TEST(Windowing, SamplesAreCopiedVerbatim) {
  std::vector<double> x(1024);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const auto w = window_record(x, 512, 256);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[1].samples.front(), 256.0);
  EXPECT_EQ(w[1].samples.back(), 767.0);
}

TEST(Labeling, OverlapRule) {
  const std::vector<Interval> ep{{1000, 20000}};
  EXPECT_NEAR(overlap_fraction(0, 6144, ep), 5144.0 / 6144.0, 1e-12);
  EXPECT_EQ(label_window(0, 6144, ep), WindowLabel::Ischemic);
  EXPECT_EQ(label_window(0, 6144, {}), WindowLabel::Normal);
  const std::vector<Interval> tail{{5000, 6144}};
  EXPECT_NEAR(overlap_fraction(0, 6144, tail), 1144.0 / 6144.0, 1e-12);
  EXPECT_EQ(label_window(0, 6144, tail), WindowLabel::Excluded);
}

TEST(Labeling, OverlappingEpisodesCountedOnce) {
  const std::vector<Interval> ep{{0, 4000}, {2000, 5000}};
  EXPECT_NEAR(overlap_fraction(0, 10000, ep), 0.5, 1e-12);
}

TEST(Labeling, RescaleRoundsHalfEven) {
  wfdb::StEpisode ep;
  ep.start_sample = 5;  // 5 * 0.8 = 4
  ep.end_sample = 10;   // 8
  auto iv = rescale_episode(ep, 250.0, 200.0);
  EXPECT_EQ(iv.start, 4);
  EXPECT_EQ(iv.end, 8);
  ep.start_sample = 1;  // 0.5 -> 0
  ep.end_sample = 3;    // 1.5 -> 2
  iv = rescale_episode(ep, 2.0, 1.0);
  EXPECT_EQ(iv.start, 0);
  EXPECT_EQ(iv.end, 2);
}

TEST(Split, EightOneOneAndDeterministic) {
  const auto ws = windows_for(10, 6);
  const auto a = split_by_record(ws, {0.8, 0.1, 0.1}, 7);
  std::set<std::string> tr, va, te;
  for (const auto& w : a.train) tr.insert(w.record_id);
  for (const auto& w : a.validation) va.insert(w.record_id);
  for (const auto& w : a.test) te.insert(w.record_id);
  EXPECT_EQ(tr.size(), 8u);
  EXPECT_EQ(va.size(), 1u);
  EXPECT_EQ(te.size(), 1u);
  EXPECT_EQ(split_by_record(ws, {0.8, 0.1, 0.1}, 7), a);
}

TEST(Split, TooFewRecords) {
  EXPECT_EQ(kind_of<DatasetError>([] { split_by_record(windows_for(2, 3), {0.34, 0.33, 0.33}, 1); }),
            Errc::TooFewRecords);
}

TEST(Split, BadFractions) {
  EXPECT_EQ(kind_of<DatasetError>([] { split_by_record(windows_for(10, 3), {0.5, 0.1, 0.1}, 1); }),
            Errc::InvalidFractions);
}

TEST(Split, PropertyRecordsNeverStraddle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = split_by_record(windows_for(3 + seed % 12, 4), {}, seed);
    std::map<std::string, int> where;
    std::size_t total = 0;
    for (auto name : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
      for (const auto& w : s.part(name)) {
        auto [it, fresh] = where.emplace(w.record_id, static_cast<int>(name));
        ASSERT_TRUE(fresh || it->second == static_cast<int>(name)) << w.record_id;
        ASSERT_EQ(s.provenance.at(w.record_id), name);
        ++total;
      }
    }
    EXPECT_EQ(total, (3 + seed % 12) * 4);
  }
}

TEST(Balance, OversamplesMinority) {
  std::vector<EcgWindow> ws(100);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    ws[i].record_id = "r";
    ws[i].start_sample = i;
    ws[i].label = i < 10 ? Label::Ischemic : Label::Normal;
  }
  const auto b = balance_classes(ws, 3);
  const auto c = count_classes(b);
  EXPECT_EQ(c.normal, 90u);
  EXPECT_EQ(c.ischemic, 90u);
  EXPECT_EQ(balance_classes(ws, 3), b);
}

TEST(Balance, AlreadyBalancedUnchanged) {
  auto ws = windows_for(1, 2);
  ws[0].label = Label::Normal;
  ws[1].label = Label::Ischemic;
  EXPECT_EQ(balance_classes(ws, 1), ws);
}

TEST(Balance, SingleClass) {
  std::vector<EcgWindow> ws(5);
  EXPECT_EQ(kind_of<DatasetError>([&] { balance_classes(ws, 1); }), Errc::SingleClassInput);
}

TEST(Shards, RoundTripAndEmptySplit) {
  const auto dir = std::filesystem::temp_directory_path() / "ecg_shards_rt";
  std::filesystem::remove_all(dir);
  auto s = split_by_record(windows_for(10, 5, 256), {}, 2);
  s.test.clear();
  for (auto it = s.provenance.begin(); it != s.provenance.end();) {
    it = it->second == SplitName::Test ? s.provenance.erase(it) : std::next(it);
  }
  export_shards(s, dir);
  EXPECT_EQ(import_shards(dir), s);
  std::filesystem::remove_all(dir);
}

TEST(Shards, TruncatedIsCorrupt) {
  const auto bytes = encode_shard(windows_for(2, 2, 64));
  for (std::size_t cut : {std::size_t{0}, std::size_t{4}, std::size_t{20}, bytes.size() - 1}) {
    const std::span<const std::uint8_t> part(bytes.data(), cut);
    EXPECT_EQ(kind_of<DatasetError>([&] { decode_shard(part); }), Errc::CorruptShard) << cut;
  }
}

TEST(Shards, MissingDirectory) {
  EXPECT_EQ(kind_of<DatasetError>([] { import_shards("/nonexistent/ecg/shards"); }), Errc::MissingShard);
}

TEST(Shards, EncodingIsBitStable) {
  const auto ws = windows_for(3, 2, 16);
  EXPECT_EQ(encode_shard(ws), encode_shard(ws));
  const auto bytes = encode_shard(ws);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "ECGWIN01");
}
