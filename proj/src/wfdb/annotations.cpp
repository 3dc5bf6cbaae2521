#include "ecg/wfdb.hpp"

namespace ecg::wfdb {

// Each annotation is a little-endian 16-bit word: code in the high 6 bits,
// time delta (or payload) in the low 10. Pseudo-codes after an event modify
// it; SKIP before an event adds a 32-bit offset (high half first) to the clock.
std::vector<AnnotationEvent> read_annotations(std::span<const std::uint8_t> bytes) {
  std::vector<AnnotationEvent> events;
  std::int64_t clock = 0;
  int sticky_channel = 0;
  int sticky_num = 0;
  std::size_t pos = 0;

  auto word_at = [&](std::size_t p) -> std::uint32_t {
    return static_cast<std::uint32_t>(bytes[p]) | (static_cast<std::uint32_t>(bytes[p + 1]) << 8);
  };
  auto truncated = [&](const std::string& what) {
    return WfdbError(Errc::TruncatedStream, "annotation stream truncated at byte " + std::to_string(pos) + ": " + what);
  };
  auto owner = [&](const char* what) -> AnnotationEvent& {
    if (events.empty()) {
      throw WfdbError(Errc::DanglingAux,
                      std::string(what) + " pseudo-annotation at byte " + std::to_string(pos) + " has no owning event");
    }
    return events.back();
  };

  while (pos < bytes.size()) {
    if (pos + 2 > bytes.size()) throw truncated("odd trailing byte");
    const std::uint32_t word = word_at(pos);
    const int code = static_cast<int>(word >> 10);
    const int data = static_cast<int>(word & 0x3ffu);
    pos += 2;
    if (code == 0 && data == 0) break;

    switch (code) {
      case kCodeSkip: {
        if (pos + 4 > bytes.size()) throw truncated("SKIP offset");
        const std::uint32_t hi = word_at(pos);
        const std::uint32_t lo = word_at(pos + 2);
        clock += static_cast<std::int32_t>((hi << 16) | lo);
        pos += 4;
        break;
      }
      case kCodeNum:
        sticky_num = static_cast<std::int8_t>(data & 0xff);
        owner("NUM").num = sticky_num;
        break;
      case kCodeSub:
        owner("SUB").subtype = static_cast<std::int8_t>(data & 0xff);
        break;
      case kCodeChn:
        sticky_channel = data & 0xff;
        owner("CHN").channel = sticky_channel;
        break;
      case kCodeAux: {
        auto& ev = owner("AUX");
        const std::size_t len = static_cast<std::size_t>(data & 0xff);
        const std::size_t padded = len + (len & 1u);
        if (pos + padded > bytes.size()) throw truncated("AUX payload");
        ev.aux = std::string(reinterpret_cast<const char*>(bytes.data() + pos), len);
        pos += padded;
        break;
      }
      default:
        clock += data;
        // Code 0 with a nonzero delta only moves the clock.
        if (code != 0) {
          AnnotationEvent ev;
          ev.sample_index = clock;
          ev.code = code;
          ev.channel = sticky_channel;
          ev.num = sticky_num;
          events.push_back(std::move(ev));
        }
        break;
    }
  }
  return events;
}

}  // namespace ecg::wfdb
