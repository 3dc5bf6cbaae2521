#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "ecg/dataset.hpp"

namespace ecg::dataset {
namespace {

constexpr char kMagic[8] = {'E', 'C', 'G', 'W', 'I', 'N', '0', '1'};

template <typename UInt>
void put_le(std::vector<std::uint8_t>& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename UInt>
  UInt le() {
    need(sizeof(UInt));
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(static_cast<UInt>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(UInt);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw DatasetError(Errc::CorruptShard, "shard truncated at byte " + std::to_string(pos_));
    }
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string shard_file_name(SplitName s) { return std::string(to_string(s)) + ".ecgwin"; }

// Layout: magic, u64 count, u32 window_len, then per window:
//   u32 id length, id bytes, u8 lead, u64 start, u8 label, window_len x f32.
std::vector<std::uint8_t> encode_shard(std::span<const EcgWindow> windows) {
  const std::size_t len = windows.empty() ? 0 : windows.front().samples.size();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint64_t>(out, windows.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(len));
  for (const auto& w : windows) {
    if (w.samples.size() != len) {
      throw DatasetError(Errc::InvalidWindow, "windows in one shard must share a length");
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.record_id.size()));
    out.insert(out.end(), w.record_id.begin(), w.record_id.end());
    out.push_back(w.lead);
    put_le<std::uint64_t>(out, w.start_sample);
    out.push_back(static_cast<std::uint8_t>(w.label));
    for (float v : w.samples) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<EcgWindow> decode_shard(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(sizeof(kMagic));
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DatasetError(Errc::CorruptShard, "bad shard magic");
  }
  const auto count = r.le<std::uint64_t>();
  const auto len = r.le<std::uint32_t>();
  // Each record carries at least 14 header bytes; reject absurd counts early.
  if (count > r.remaining() / (14 + 4ull * len)) {
    throw DatasetError(Errc::CorruptShard, "shard count " + std::to_string(count) + " exceeds its payload");
  }
  std::vector<EcgWindow> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    EcgWindow w;
    const auto id_len = r.le<std::uint32_t>();
    auto id = r.take(id_len);
    w.record_id.assign(id.begin(), id.end());
    w.lead = r.le<std::uint8_t>();
    w.start_sample = r.le<std::uint64_t>();
    const auto label = r.le<std::uint8_t>();
    if (label > 1) throw DatasetError(Errc::CorruptShard, "bad label byte " + std::to_string(label));
    w.label = static_cast<Label>(label);
    w.samples.resize(len);
    for (auto& v : w.samples) v = std::bit_cast<float>(r.le<std::uint32_t>());
    out.push_back(std::move(w));
  }
  if (r.remaining() != 0) throw DatasetError(Errc::CorruptShard, "trailing bytes after last window");
  return out;
}

void export_shards(const DatasetSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json prov = nlohmann::ordered_json::object();
  for (const auto& [id, s] : split.provenance) prov[id] = std::string(to_string(s));
  for (auto s : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
    const auto bytes = encode_shard(split.part(s));
    std::ofstream out(dir / shard_file_name(s), std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + (dir / shard_file_name(s)).string());
  }
  std::ofstream side(dir / "provenance.json", std::ios::trunc);
  side << nlohmann::ordered_json{{"format", "ECGWIN01"}, {"records", prov}}.dump(2) << "\n";
}

DatasetSplit import_shards(const std::filesystem::path& dir) {
  DatasetSplit split;
  for (auto s : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
    const auto path = dir / shard_file_name(s);
    if (!std::filesystem::exists(path)) throw DatasetError(Errc::MissingShard, "missing shard " + path.string());
    std::ifstream in(path, std::ios::binary);
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    split.part(s) = decode_shard(bytes);
  }
  const auto prov_path = dir / "provenance.json";
  if (!std::filesystem::exists(prov_path)) throw DatasetError(Errc::MissingShard, "missing " + prov_path.string());
  std::ifstream side(prov_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(side);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(Errc::CorruptShard, std::string("bad provenance.json: ") + e.what());
  }
  for (const auto& [id, name] : j.at("records").items()) {
    const auto n = name.get<std::string>();
    SplitName s = n == "train" ? SplitName::Train : n == "validation" ? SplitName::Validation : SplitName::Test;
    split.provenance[id] = s;
  }
  return split;
}

}  // namespace ecg::dataset
