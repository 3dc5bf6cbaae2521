#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ecg/eval.hpp"

namespace ecg::eval {
namespace {

struct ClassCount {
  std::uint64_t pos = 0, neg = 0;
};

ClassCount check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels, bool need_both) {
  if (scores.size() != labels.size()) {
    throw EvalError(Errc::LengthMismatch, "scores and labels differ in length (" + std::to_string(scores.size()) +
                                              " vs " + std::to_string(labels.size()) + ")");
  }
  ClassCount c;
  for (auto l : labels) (l ? c.pos : c.neg) += 1;
  if (need_both && (c.pos == 0 || c.neg == 0)) {
    throw EvalError(Errc::SingleClassInput, "both classes must be present");
  }
  return c;
}

// Indices ordered by descending score.
std::vector<std::size_t> order_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

struct Cut {
  double score;            // lowest score predicted positive at this cut
  std::uint64_t tp, fp;    // cumulative counts
};

// One entry per distinct score, descending.
std::vector<Cut> cumulative_cuts(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto idx = order_desc(scores);
  std::vector<Cut> cuts;
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double s = scores[idx[i]];
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == s) {
      (labels[idx[j]] ? tp : fp) += 1;
      ++j;
    }
    cuts.push_back({s, tp, fp});
    i = j;
  }
  return cuts;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto c = check_inputs(scores, labels, true);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the positive rank sum, with tied groups sharing their mid-rank, stays integral.
  unsigned __int128 rank2 = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::uint64_t pos_in_group = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      pos_in_group += labels[idx[j]] ? 1 : 0;
      ++j;
    }
    rank2 += static_cast<unsigned __int128>(pos_in_group) * (i + 1 + j);
    i = j;
  }
  const auto u2 = rank2 - static_cast<unsigned __int128>(c.pos) * (c.pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto c = check_inputs(scores, labels, true);
  std::vector<RocPoint> pts;
  pts.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  for (const auto& cut : cumulative_cuts(scores, labels)) {
    pts.push_back({static_cast<double>(cut.fp) / static_cast<double>(c.neg),
                   static_cast<double>(cut.tp) / static_cast<double>(c.pos), cut.score});
  }
  return pts;
}

double trapezoid_area(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

SensSpec sensitivity_specificity(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                 double threshold) {
  check_inputs(scores, labels, false);
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw EvalError(Errc::InvalidThreshold, "threshold must lie in [0, 1]");
  }
  SensSpec r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i]) {
      (pred ? r.confusion.tp : r.confusion.fn) += 1;
    } else {
      (pred ? r.confusion.fp : r.confusion.tn) += 1;
    }
  }
  const auto& m = r.confusion;
  if (m.tp + m.fn > 0) r.sensitivity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.tn + m.fp > 0) r.specificity = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
  return r;
}

double youden_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto c = check_inputs(scores, labels, true);
  const auto cuts = cumulative_cuts(scores, labels);
  // J = tp/P - fp/N compared as tp*N - fp*P to avoid rounding ties apart.
  std::size_t best = 0;
  __int128 best_j = std::numeric_limits<__int128>::min();
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    const __int128 j = static_cast<__int128>(cuts[k].tp) * c.neg - static_cast<__int128>(cuts[k].fp) * c.pos;
    if (j >= best_j) {
      best_j = j;
      best = k;
    }
  }
  if (best + 1 < cuts.size()) return (cuts[best].score + cuts[best + 1].score) / 2.0;
  return cuts[best].score;
}

std::vector<RecordScore> aggregate(std::span<const ScoredWindow> windows) {
  if (windows.empty()) throw EvalError(Errc::EmptyGroup, "aggregate needs at least one window");
  std::map<std::string, RecordScore> by_record;
  std::map<std::string, std::vector<double>> scores;
  for (const auto& w : windows) {
    auto [it, inserted] = by_record.try_emplace(w.record_id, RecordScore{w.record_id, 0.0, 0, 0});
    it->second.label = std::max(it->second.label, w.label);
    it->second.n_windows += 1;
    scores[w.record_id].push_back(w.score);
  }
  std::vector<RecordScore> out;
  for (auto& [id, r] : by_record) {
    // Sorting first makes the mean independent of window order.
    auto& s = scores[id];
    std::sort(s.begin(), s.end());
    double sum = 0.0;
    for (double v : s) sum += v;
    r.score = sum / static_cast<double>(s.size());
    out.push_back(r);
  }
  return out;
}

namespace {

OperatingPoint operating_point(std::span<const double> s, std::span<const std::uint8_t> l, double threshold) {
  auto ss = sensitivity_specificity(s, l, std::clamp(threshold, 0.0, 1.0));
  return {threshold, ss.sensitivity, ss.specificity, ss.confusion};
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json point_json(const OperatingPoint& p) {
  return {{"threshold", p.threshold},
          {"sensitivity", optional_json(p.sensitivity)},
          {"specificity", optional_json(p.specificity)},
          {"confusion", {{"tp", p.confusion.tp}, {"fp", p.confusion.fp}, {"tn", p.confusion.tn}, {"fn", p.confusion.fn}}}};
}

}  // namespace

EvalReport make_report(std::string model, std::string split, std::span<const ScoredWindow> windows) {
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (const auto& w : windows) {
    s.push_back(w.score);
    l.push_back(w.label);
  }
  EvalReport r;
  r.model = std::move(model);
  r.split = std::move(split);
  r.n_windows = windows.size();
  r.n_positive = static_cast<std::size_t>(std::count(l.begin(), l.end(), std::uint8_t{1}));
  r.auc = roc_auc(s, l);
  r.roc = roc_points(s, l);
  r.at_default = operating_point(s, l, 0.5);
  r.at_youden = operating_point(s, l, youden_threshold(s, l));
  const auto rec = aggregate(windows);
  std::vector<double> rs;
  std::vector<std::uint8_t> rl;
  for (const auto& x : rec) {
    rs.push_back(x.score);
    rl.push_back(x.label);
  }
  if (std::count(rl.begin(), rl.end(), std::uint8_t{1}) > 0 && std::count(rl.begin(), rl.end(), std::uint8_t{0}) > 0) {
    r.record_auc = roc_auc(rs, rl);
  }
  return r;
}

nlohmann::ordered_json to_json(const EvalReport& r, bool include_roc) {
  nlohmann::ordered_json j{{"model", r.model},
                           {"split", r.split},
                           {"n_windows", r.n_windows},
                           {"n_positive", r.n_positive},
                           {"auc", r.auc},
                           {"record_auc", optional_json(r.record_auc)},
                           {"default", point_json(r.at_default)},
                           {"youden", point_json(r.at_youden)}};
  if (include_roc) {
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : r.roc) pts.push_back({p.fpr, p.tpr});
    j["roc_points"] = std::move(pts);
  }
  return j;
}

std::string roc_csv(std::span<const RocPoint> points) {
  std::ostringstream os;
  os.precision(17);
  os << "fpr,tpr,threshold\n";
  for (const auto& p : points) os << p.fpr << ',' << p.tpr << ',' << p.threshold << '\n';
  return os.str();
}

}  // namespace ecg::eval
