#include <cstdint>

#include "ecg/wfdb.hpp"

namespace ecg::wfdb {
namespace {

constexpr std::int32_t sign_extend12(std::uint32_t v) {
  return (v & 0x800u) ? static_cast<std::int32_t>(v) - 0x1000 : static_cast<std::int32_t>(v);
}

std::size_t bytes_for_212(std::size_t n_values) { return (n_values / 2) * 3 + (n_values % 2) * 2; }

}  // namespace

std::vector<std::int32_t> decode_212(std::span<const std::uint8_t> bytes, std::size_t n_values) {
  if (bytes.size() < bytes_for_212(n_values)) {
    throw WfdbError(Errc::TruncatedData, "format 212 stream holds " + std::to_string(bytes.size()) +
                                             " bytes, " + std::to_string(bytes_for_212(n_values)) +
                                             " needed for " + std::to_string(n_values) + " samples");
  }
  std::vector<std::int32_t> out(n_values);
  std::size_t b = 0;
  std::size_t i = 0;
  for (; i + 1 < n_values; i += 2, b += 3) {
    const std::uint32_t b0 = bytes[b], b1 = bytes[b + 1], b2 = bytes[b + 2];
    out[i] = sign_extend12(b0 | ((b1 & 0x0fu) << 8));
    out[i + 1] = sign_extend12(b2 | ((b1 & 0xf0u) << 4));
  }
  if (i < n_values) {
    out[i] = sign_extend12(bytes[b] | ((bytes[b + 1] & 0x0fu) << 8));
  }
  return out;
}

RawSignals read_signal(std::span<const SignalSpec> specs, std::span<const std::uint8_t> bytes,
                       std::size_t n_samples) {
  RawSignals result;
  if (specs.empty()) return result;
  const StorageFormat fmt = specs.front().storage_format;
  const std::size_t offset = specs.front().byte_offset;
  for (const auto& s : specs) {
    if (s.storage_format != fmt) {
      throw WfdbError(Errc::UnsupportedFormat, "signals sharing " + s.file_name + " use different formats");
    }
  }
  if (offset > bytes.size()) {
    throw WfdbError(Errc::TruncatedData, "byte offset " + std::to_string(offset) + " beyond end of " +
                                             specs.front().file_name);
  }
  bytes = bytes.subspan(offset);
  const std::size_t n_sig = specs.size();

  if (n_samples == 0) {
    const std::size_t frame_bits = n_sig * (fmt == StorageFormat::Format212 ? 12 : 16);
    n_samples = bytes.size() * 8 / frame_bits;
  }
  const std::size_t n_values = n_samples * n_sig;

  std::vector<std::int32_t> flat;
  if (fmt == StorageFormat::Format212) {
    flat = decode_212(bytes, n_values);
  } else {
    if (bytes.size() < n_values * 2) {
      throw WfdbError(Errc::TruncatedData, "format 16 stream holds " + std::to_string(bytes.size()) + " bytes, " +
                                               std::to_string(n_values * 2) + " needed");
    }
    flat.resize(n_values);
    for (std::size_t i = 0; i < n_values; ++i) {
      flat[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8)));
    }
  }

  result.leads.assign(n_sig, std::vector<std::int32_t>(n_samples));
  for (std::size_t t = 0; t < n_samples; ++t) {
    for (std::size_t s = 0; s < n_sig; ++s) result.leads[s][t] = flat[t * n_sig + s];
  }

  for (std::size_t s = 0; s < n_sig; ++s) {
    if (!specs[s].checksum) continue;
    std::uint16_t sum = 0;
    for (auto v : result.leads[s]) sum = static_cast<std::uint16_t>(sum + static_cast<std::uint16_t>(v));
    const auto expected = static_cast<std::int16_t>(static_cast<std::uint16_t>(*specs[s].checksum));
    if (static_cast<std::int16_t>(sum) != expected) {
      result.diagnostics.push_back({Warning::ChecksumMismatch,
                                    "signal " + std::to_string(s) + " (" + specs[s].description + ") checksum " +
                                        std::to_string(static_cast<std::int16_t>(sum)) + " != header " +
                                        std::to_string(expected)});
    }
  }
  return result;
}

}  // namespace ecg::wfdb
