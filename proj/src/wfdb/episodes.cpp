#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "ecg/wfdb.hpp"

namespace ecg::wfdb {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::A: return "A";
    case Protocol::B: return "B";
    case Protocol::C: return "C";
  }
  return "?";
}

Protocol protocol_from_string(std::string_view s) {
  if (s == "A" || s == "a") return Protocol::A;
  if (s == "B" || s == "b") return Protocol::B;
  if (s == "C" || s == "c") return Protocol::C;
  throw std::invalid_argument("unknown protocol '" + std::string(s) + "'");
}

EpisodeCriteria criteria_for(Protocol p) {
  switch (p) {
    case Protocol::A: return {75.0, 30.0};
    case Protocol::B: return {100.0, 30.0};
    case Protocol::C: return {100.0, 60.0};
  }
  return {100.0, 30.0};
}

std::optional<EpisodeMarker> parse_episode_marker(std::string_view aux) {
  std::string s;
  s.reserve(aux.size());
  for (char c : aux) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  MarkerKind kind = MarkerKind::Extremum;
  std::string_view v = s;
  if (v.starts_with('(')) {
    kind = MarkerKind::Begin;
    v.remove_prefix(1);
  } else if (v.ends_with(')')) {
    kind = MarkerKind::End;
    v.remove_suffix(1);
  } else if (v.starts_with("ast")) {
    v.remove_prefix(1);
  }
  if (!v.starts_with("st") || v.size() < 4) return std::nullopt;
  v.remove_prefix(2);
  if (!std::isdigit(static_cast<unsigned char>(v[0]))) return std::nullopt;
  const int lead = v[0] - '0';
  int sign;
  if (v[1] == '+') {
    sign = 1;
  } else if (v[1] == '-') {
    sign = -1;
  } else {
    return std::nullopt;
  }
  v.remove_prefix(2);

  EpisodeMarker m{kind, lead, sign, std::nullopt};
  if (kind != MarkerKind::Extremum) {
    if (!v.empty()) return std::nullopt;
    return m;
  }
  if (v.empty()) return m;
  double magnitude = 0.0;
  for (char c : v) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    magnitude = magnitude * 10.0 + (c - '0');
  }
  m.deviation_uv = sign * magnitude;
  return m;
}

EpisodeExtraction extract_st_episodes(std::span<const AnnotationEvent> events, Protocol protocol,
                                      double sampling_rate) {
  return extract_st_episodes(events, protocol, sampling_rate, criteria_for(protocol));
}

EpisodeExtraction extract_st_episodes(std::span<const AnnotationEvent> events, Protocol protocol,
                                      double sampling_rate, const EpisodeCriteria& criteria) {
  struct Open {
    std::int64_t start;
    std::optional<std::int64_t> extremum_sample;
    std::optional<double> deviation;
  };
  EpisodeExtraction out;
  std::map<int, Open> open;
  auto warn = [&](Warning w, std::string msg) { out.diagnostics.push_back({w, std::move(msg)}); };
  auto at = [](std::int64_t s) { return " at sample " + std::to_string(s); };

  for (const auto& ev : events) {
    if (!ev.aux) continue;
    auto marker = parse_episode_marker(*ev.aux);
    if (!marker) continue;
    const int lead = marker->lead;
    switch (marker->kind) {
      case MarkerKind::Begin:
        if (auto it = open.find(lead); it != open.end()) {
          warn(Warning::UnpairedBoundary, "lead " + std::to_string(lead) + " episode begun" + at(it->second.start) +
                                              " never ended before next begin" + at(ev.sample_index));
        }
        open[lead] = Open{ev.sample_index, std::nullopt, std::nullopt};
        break;
      case MarkerKind::Extremum: {
        auto it = open.find(lead);
        if (it == open.end()) {
          warn(Warning::UnpairedBoundary, "lead " + std::to_string(lead) + " extremum" + at(ev.sample_index) +
                                              " outside any episode");
          break;
        }
        Open& o = it->second;
        if (!marker->deviation_uv) {
          if (!o.extremum_sample) o.extremum_sample = ev.sample_index;
        } else if (!o.deviation || std::abs(*marker->deviation_uv) > std::abs(*o.deviation)) {
          o.extremum_sample = ev.sample_index;
          o.deviation = marker->deviation_uv;
        }
        break;
      }
      case MarkerKind::End: {
        auto it = open.find(lead);
        if (it == open.end()) {
          warn(Warning::UnpairedBoundary, "lead " + std::to_string(lead) + " episode end" + at(ev.sample_index) +
                                              " without a begin");
          break;
        }
        Open o = it->second;
        open.erase(it);
        if (!o.extremum_sample) {
          warn(Warning::IncompleteEpisode, "lead " + std::to_string(lead) + " episode" + at(o.start) +
                                               " has no extremum annotation");
          break;
        }
        if (!o.deviation) {
          warn(Warning::MissingDeviation, "lead " + std::to_string(lead) + " episode" + at(o.start) +
                                              " extremum carries no deviation value");
          break;
        }
        StEpisode ep{lead, o.start, *o.extremum_sample, ev.sample_index, *o.deviation, protocol};
        const bool ordered = ep.start_sample <= ep.extremum_sample && ep.extremum_sample <= ep.end_sample;
        const double duration = ep.duration_seconds(sampling_rate);
        if (!ordered) {
          warn(Warning::InvariantViolation, "lead " + std::to_string(lead) + " episode" + at(o.start) +
                                                " has extremum outside its bounds");
        } else if (duration < criteria.min_duration_s) {
          warn(Warning::InvariantViolation, "lead " + std::to_string(lead) + " episode" + at(o.start) + " lasts " +
                                                std::to_string(duration) + " s, shorter than protocol " +
                                                std::string(to_string(protocol)) + " minimum");
        } else if (std::abs(ep.deviation_uv) < criteria.min_deviation_uv) {
          warn(Warning::InvariantViolation, "lead " + std::to_string(lead) + " episode" + at(o.start) + " deviation " +
                                                std::to_string(ep.deviation_uv) + " uV below protocol " +
                                                std::string(to_string(protocol)) + " minimum");
        } else {
          out.episodes.push_back(ep);
        }
        break;
      }
    }
  }
  for (const auto& [lead, o] : open) {
    warn(Warning::UnpairedBoundary, "lead " + std::to_string(lead) + " episode begun" + at(o.start) + " never ended");
  }
  std::stable_sort(out.episodes.begin(), out.episodes.end(), [](const StEpisode& a, const StEpisode& b) {
    return a.lead != b.lead ? a.lead < b.lead : a.start_sample < b.start_sample;
  });
  return out;
}

}  // namespace ecg::wfdb
