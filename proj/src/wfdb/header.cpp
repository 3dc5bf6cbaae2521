#include <cctype>
#include <charconv>
#include <sstream>

#include "ecg/wfdb.hpp"

namespace ecg::wfdb {
namespace {

[[noreturn]] void malformed(const std::string& msg) {
  throw WfdbError(Errc::MalformedHeader, "malformed header: " + msg);
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Parses a leading integer; returns the number of characters consumed (0 on failure).
template <typename Int>
std::size_t parse_int_prefix(std::string_view s, Int& value) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{}) return 0;
  return static_cast<std::size_t>(ptr - s.data());
}

std::size_t parse_double_prefix(std::string_view s, double& value) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{}) return 0;
  return static_cast<std::size_t>(ptr - s.data());
}

template <typename Int>
Int parse_int(std::string_view s, const char* field) {
  Int v{};
  if (parse_int_prefix(s, v) != s.size()) malformed(std::string("bad ") + field + " '" + std::string(s) + "'");
  return v;
}

// "212", "212x1", "16+512", "212:0+24"
void parse_format_token(std::string_view tok, SignalSpec& spec) {
  int fmt = 0;
  std::size_t n = parse_int_prefix(tok, fmt);
  if (n == 0) malformed("bad storage format '" + std::string(tok) + "'");
  std::string_view rest = tok.substr(n);
  while (!rest.empty()) {
    char tag = rest.front();
    rest.remove_prefix(1);
    long long v = 0;
    std::size_t m = parse_int_prefix(rest, v);
    if (m == 0) malformed("bad format modifier in '" + std::string(tok) + "'");
    rest.remove_prefix(m);
    if (tag == 'x') {
      if (v != 1) {
        throw WfdbError(Errc::UnsupportedFormat,
                        "multi-frequency signals (samples per frame " + std::to_string(v) + ") are not supported");
      }
    } else if (tag == ':') {
      // skew: ignored, LTST records carry none
    } else if (tag == '+') {
      if (v < 0) malformed("negative byte offset");
      spec.byte_offset = static_cast<std::size_t>(v);
    } else {
      malformed("unknown format modifier '" + std::string(1, tag) + "'");
    }
  }
  if (fmt == 212) {
    spec.storage_format = StorageFormat::Format212;
  } else if (fmt == 16) {
    spec.storage_format = StorageFormat::Format16;
  } else {
    throw WfdbError(Errc::UnsupportedFormat, "storage format " + std::to_string(fmt) + " is not supported");
  }
}

// "200", "200(0)", "200/mV", "200(1024)/uV"; returns whether a baseline was given.
bool parse_gain_token(std::string_view tok, SignalSpec& spec) {
  double gain = 0.0;
  std::size_t n = parse_double_prefix(tok, gain);
  if (n == 0) malformed("bad gain '" + std::string(tok) + "'");
  std::string_view rest = tok.substr(n);
  bool has_baseline = false;
  if (!rest.empty() && rest.front() == '(') {
    auto close = rest.find(')');
    if (close == std::string_view::npos) malformed("unterminated baseline in '" + std::string(tok) + "'");
    spec.adc_baseline = parse_int<int>(rest.substr(1, close - 1), "baseline");
    has_baseline = true;
    rest.remove_prefix(close + 1);
  }
  if (!rest.empty()) {
    if (rest.front() != '/') malformed("bad gain suffix '" + std::string(tok) + "'");
    spec.units = std::string(rest.substr(1));
  }
  if (gain < 0.0) malformed("negative gain");
  spec.gain = gain == 0.0 ? kDefaultGain : gain;
  return has_baseline;
}

void parse_record_line(const std::vector<std::string>& tok, RecordHeader& h) {
  if (tok.size() < 2) malformed("record line needs a name and a signal count");
  const std::string& name = tok[0];
  if (name.find('/') != std::string::npos) {
    throw WfdbError(Errc::UnsupportedFormat, "multi-segment records are not supported");
  }
  h.record_name = name;
  h.n_signals = parse_int<std::size_t>(tok[1], "signal count");
  if (h.n_signals == 0) malformed("record declares zero signals");
  if (tok.size() > 2) {
    double f = 0.0;
    if (parse_double_prefix(tok[2], f) == 0 || !(f > 0.0)) malformed("bad sampling frequency '" + tok[2] + "'");
    h.sampling_rate = f;
  }
  if (tok.size() > 3) h.n_samples = parse_int<std::size_t>(tok[3], "sample count");
}

SignalSpec parse_signal_line(std::string_view line) {
  auto tok = split_ws(line);
  if (tok.size() < 2) malformed("signal line needs a file name and a format");
  SignalSpec spec;
  spec.file_name = tok[0];
  parse_format_token(tok[1], spec);
  bool has_baseline = false;
  if (tok.size() > 2) has_baseline = parse_gain_token(tok[2], spec);
  if (tok.size() > 3) {
    spec.adc_resolution = parse_int<int>(tok[3], "ADC resolution");
    if (spec.adc_resolution == 0) spec.adc_resolution = spec.storage_format == StorageFormat::Format212 ? 12 : 16;
  } else {
    spec.adc_resolution = spec.storage_format == StorageFormat::Format212 ? 12 : 16;
  }
  if (tok.size() > 4) spec.adc_zero = parse_int<int>(tok[4], "ADC zero");
  if (!has_baseline) spec.adc_baseline = spec.adc_zero;
  if (tok.size() > 5) spec.initial_value = parse_int<int>(tok[5], "initial value");
  if (tok.size() > 6) spec.checksum = parse_int<int>(tok[6], "checksum");
  if (tok.size() > 7) (void)parse_int<long long>(tok[7], "block size");
  if (tok.size() > 8) {
    // The description is the remainder of the line, spaces included.
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    std::size_t pos = 0;
    for (std::size_t field = 0; field < 8; ++field) {
      while (pos < line.size() && is_space(line[pos])) ++pos;
      while (pos < line.size() && !is_space(line[pos])) ++pos;
    }
    while (pos < line.size() && is_space(line[pos])) ++pos;
    std::size_t end = line.size();
    while (end > pos && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
    spec.description = std::string(line.substr(pos, end - pos));
  }
  return spec;
}

}  // namespace

RecordHeader parse_header(std::string_view text) {
  RecordHeader h;
  bool have_record_line = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view line = raw;
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    line.remove_prefix(first);
    if (line.front() == '#') continue;
    if (!have_record_line) {
      // Trailing comments are allowed on the record line.
      parse_record_line(split_ws(line.substr(0, line.find('#'))), h);
      have_record_line = true;
    } else if (h.signals.size() < h.n_signals) {
      h.signals.push_back(parse_signal_line(line));
    }
  }
  if (!have_record_line) malformed("no record line");
  if (h.signals.size() != h.n_signals) {
    malformed("expected " + std::to_string(h.n_signals) + " signal lines, found " + std::to_string(h.signals.size()));
  }
  return h;
}

}  // namespace ecg::wfdb
