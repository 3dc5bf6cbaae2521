#include <algorithm>
#include <fstream>
#include <iterator>

#include "ecg/wfdb.hpp"

namespace ecg::wfdb {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WfdbError(Errc::MissingFile, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RecordHeader load_header(const fs::path& dir, const std::string& name) {
  auto bytes = read_file_bytes(dir / (name + ".hea"));
  return parse_header(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

LoadedRecord load_record(const fs::path& dir, const std::string& name) {
  LoadedRecord out;
  EcgRecord& rec = out.record;
  rec.header = load_header(dir, name);
  const auto& specs = rec.header.signals;
  rec.signals.resize(specs.size());

  // Signals sharing a file are interleaved in it; group them in header order.
  std::vector<bool> done(specs.size(), false);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> members;
    std::vector<SignalSpec> group;
    for (std::size_t j = i; j < specs.size(); ++j) {
      if (specs[j].file_name == specs[i].file_name) {
        members.push_back(j);
        group.push_back(specs[j]);
        done[j] = true;
      }
    }
    auto bytes = read_file_bytes(dir / specs[i].file_name);
    RawSignals raw = read_signal(group, bytes, rec.header.n_samples);
    if (rec.header.n_samples == 0 && !raw.leads.empty()) rec.header.n_samples = raw.leads.front().size();
    for (auto& d : raw.diagnostics) out.diagnostics.push_back(std::move(d));
    for (std::size_t k = 0; k < members.size(); ++k) {
      const SignalSpec& spec = specs[members[k]];
      auto& dst = rec.signals[members[k]];
      dst.resize(raw.leads[k].size());
      std::transform(raw.leads[k].begin(), raw.leads[k].end(), dst.begin(),
                     [&](std::int32_t v) { return adc_to_physical(v, spec); });
    }
  }
  return out;
}

std::vector<std::string> discover_records(const fs::path& dir) {
  std::vector<std::string> names;
  const fs::path index = dir / "RECORDS";
  if (fs::exists(index)) {
    std::ifstream in(index);
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '/')) line.pop_back();
      if (!line.empty() && line.front() != '#') names.push_back(line);
    }
    return names;
  }
  if (!fs::is_directory(dir)) return names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".hea") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace ecg::wfdb
