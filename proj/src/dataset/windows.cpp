#include <algorithm>
#include <cfenv>
#include <cmath>

#include "ecg/dataset.hpp"

namespace ecg::dataset {

std::vector<RawWindow> window_record(std::span<const double> lead, std::size_t window_len, std::size_t stride,
                                     std::size_t segment_factor) {
  if (window_len == 0 || segment_factor == 0 || window_len % segment_factor != 0) {
    throw DatasetError(Errc::InvalidWindow, "window length " + std::to_string(window_len) +
                                                " is not a positive multiple of " + std::to_string(segment_factor));
  }
  if (stride == 0) throw DatasetError(Errc::InvalidWindow, "stride must be >= 1");
  if (lead.size() < window_len) {
    throw DatasetError(Errc::SignalShorterThanWindow, "signal of " + std::to_string(lead.size()) +
                                                          " samples is shorter than window " + std::to_string(window_len));
  }
  std::vector<RawWindow> out;
  for (std::size_t start = 0; start + window_len <= lead.size(); start += stride) {
    out.push_back({start, std::vector<double>(lead.begin() + static_cast<std::ptrdiff_t>(start),
                                              lead.begin() + static_cast<std::ptrdiff_t>(start + window_len))});
  }
  return out;
}

std::vector<RawWindow> window_record(const wfdb::EcgRecord& record, std::size_t lead, std::size_t window_len,
                                     std::size_t stride, std::size_t segment_factor) {
  return window_record(record.signals.at(lead), window_len, stride, segment_factor);
}

Interval rescale_episode(const wfdb::StEpisode& ep, double from_rate, double to_rate) {
  const double ratio = to_rate / from_rate;
  // nearbyint honours the current rounding mode, which defaults to round-half-even.
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  Interval iv{static_cast<std::int64_t>(std::nearbyint(static_cast<double>(ep.start_sample) * ratio)),
              static_cast<std::int64_t>(std::nearbyint(static_cast<double>(ep.end_sample) * ratio))};
  std::fesetround(saved);
  return iv;
}

double overlap_fraction(std::size_t start, std::size_t len, std::span<const Interval> episodes) {
  if (len == 0) return 0.0;
  const auto w0 = static_cast<std::int64_t>(start);
  const auto w1 = w0 + static_cast<std::int64_t>(len);
  std::vector<Interval> clipped;
  for (const auto& e : episodes) {
    const std::int64_t a = std::max(e.start, w0);
    const std::int64_t b = std::min(e.end, w1);
    if (a < b) clipped.push_back({a, b});
  }
  std::sort(clipped.begin(), clipped.end(), [](const Interval& x, const Interval& y) { return x.start < y.start; });
  std::int64_t covered = 0;
  std::int64_t cur_start = 0, cur_end = -1;
  bool have = false;
  for (const auto& c : clipped) {
    if (have && c.start <= cur_end) {
      cur_end = std::max(cur_end, c.end);
    } else {
      if (have) covered += cur_end - cur_start;
      cur_start = c.start;
      cur_end = c.end;
      have = true;
    }
  }
  if (have) covered += cur_end - cur_start;
  return static_cast<double>(covered) / static_cast<double>(len);
}

WindowLabel label_window(std::size_t start, std::size_t len, std::span<const Interval> episodes, const LabelRule& rule) {
  const double f = overlap_fraction(start, len, episodes);
  if (f >= rule.ischemic_min_overlap) return WindowLabel::Ischemic;
  if (f == 0.0) return WindowLabel::Normal;
  return WindowLabel::Excluded;
}

ClassCounts count_classes(std::span<const EcgWindow> windows) {
  ClassCounts c;
  for (const auto& w : windows) {
    if (w.label == Label::Ischemic) {
      ++c.ischemic;
    } else {
      ++c.normal;
    }
  }
  return c;
}

}  // namespace ecg::dataset
