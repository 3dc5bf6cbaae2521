#include "ecg/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ecg::nn {
namespace {

constexpr char kMagic[8] = {'E', 'C', 'G', 'C', 'K', 'P', 'T', '1'};

[[noreturn]] void corrupt(const std::string& m) { throw NnError(Errc::CorruptCheckpoint, "checkpoint: " + m); }

std::uint64_t read_u64(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

nlohmann::ordered_json config_to_json(const ModelConfig& c) {
  return {{"n_residual_blocks", c.n_residual_blocks},
          {"convs_per_block", c.convs_per_block},
          {"kernel_len", c.kernel_len},
          {"base_filters", c.base_filters},
          {"filter_increment_every", c.filter_increment_every},
          {"subsample_every", c.subsample_every},
          {"dropout_rate", c.dropout_rate},
          {"n_classes", c.n_classes}};
}

ModelConfig config_from_json(const nlohmann::json& j, ModelConfig c) {
  try {
    c.n_residual_blocks = j.value("n_residual_blocks", c.n_residual_blocks);
    c.convs_per_block = j.value("convs_per_block", c.convs_per_block);
    c.kernel_len = j.value("kernel_len", c.kernel_len);
    c.base_filters = j.value("base_filters", c.base_filters);
    c.filter_increment_every = j.value("filter_increment_every", c.filter_increment_every);
    c.subsample_every = j.value("subsample_every", c.subsample_every);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    c.n_classes = j.value("n_classes", c.n_classes);
  } catch (const nlohmann::json::exception& e) {
    throw NnError(Errc::InvalidConfig, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const ResidualNet<float>& net) {
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& t : net.params().tensors()) {
    const std::uint64_t nbytes = t.values.size() * sizeof(float);
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"trainable", t.trainable}, {"offset", offset},
                       {"nbytes", nbytes}});
    offset += nbytes;
  }
  const nlohmann::ordered_json manifest{
      {"format_version", kCheckpointVersion}, {"config", config_to_json(net.config())}, {"tensors", tensors}};
  const std::string text = manifest.dump();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  for (std::size_t i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(text.size() >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& t : net.params().tensors()) {
    for (float v : t.values) {
      const auto u = std::bit_cast<std::uint32_t>(v);
      for (std::size_t i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
  }
  return out;
}

ResidualNet<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) corrupt("bad magic");
  const std::uint64_t mlen = read_u64(bytes, 8);
  if (mlen > bytes.size() - 16) corrupt("manifest length exceeds file");
  const auto blobs = bytes.subspan(16 + mlen);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(mlen));
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("manifest is not JSON: ") + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("format_version") || !manifest.contains("config") ||
      !manifest.contains("tensors")) {
    corrupt("manifest lacks required fields");
  }
  if (manifest["format_version"] != kCheckpointVersion) {
    throw NnError(Errc::VersionMismatch, "checkpoint format version " + manifest["format_version"].dump() +
                                             " is not " + std::to_string(kCheckpointVersion));
  }
  ModelConfig config;
  try {
    config = config_from_json(manifest["config"]);
  } catch (const NnError& e) {
    throw NnError(Errc::VersionMismatch, e.what());
  }
  ParamSet<float> params;
  std::uint64_t expected = 0;
  try {
    for (const auto& t : manifest["tensors"]) {
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto nbytes = t.at("nbytes").get<std::uint64_t>();
      std::uint64_t count = 1;
      for (auto d : shape) count *= d;
      if (nbytes != count * sizeof(float) || offset != expected || offset + nbytes > blobs.size()) {
        corrupt("tensor table entry " + t.at("name").get<std::string>() + " is inconsistent");
      }
      std::vector<float> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t u = 0;
        for (std::size_t k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(blobs[offset + 4 * i + k]) << (8 * k);
        values[i] = std::bit_cast<float>(u);
      }
      params.add(t.at("name").get<std::string>(), shape, std::move(values), t.value("trainable", true));
      expected += nbytes;
    }
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("bad tensor table: ") + e.what());
  }
  if (expected != blobs.size()) corrupt("trailing bytes after tensor data");
  return ResidualNet<float>(config, std::move(params));
}

void save_checkpoint(const ResidualNet<float>& net, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ResidualNet<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) corrupt("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace ecg::nn
