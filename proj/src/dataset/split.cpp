#include <algorithm>
#include <cmath>
#include <set>

#include "ecg/dataset.hpp"
#include "ecg/rng.hpp"

namespace ecg::dataset {

std::string_view to_string(SplitName s) {
  switch (s) {
    case SplitName::Train: return "train";
    case SplitName::Validation: return "validation";
    case SplitName::Test: return "test";
  }
  return "?";
}

std::vector<EcgWindow>& DatasetSplit::part(SplitName s) {
  switch (s) {
    case SplitName::Train: return train;
    case SplitName::Validation: return validation;
    case SplitName::Test: break;
  }
  return test;
}

const std::vector<EcgWindow>& DatasetSplit::part(SplitName s) const {
  return const_cast<DatasetSplit*>(this)->part(s);
}

namespace {

struct RecordClasses {
  bool normal = false;
  bool ischemic = false;
};

bool window_less(const EcgWindow& a, const EcgWindow& b) {
  if (a.record_id != b.record_id) return a.record_id < b.record_id;
  if (a.lead != b.lead) return a.lead < b.lead;
  return a.start_sample < b.start_sample;
}

}  // namespace

DatasetSplit split_by_record(std::vector<EcgWindow> windows, const SplitFractions& f, std::uint64_t seed) {
  if (f.train < 0.0 || f.validation < 0.0 || f.test < 0.0 || std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
    throw DatasetError(Errc::InvalidFractions, "split fractions must be non-negative and sum to 1");
  }
  std::map<std::string, RecordClasses> records;
  for (const auto& w : windows) {
    auto& rc = records[w.record_id];
    (w.label == Label::Ischemic ? rc.ischemic : rc.normal) = true;
  }
  const std::size_t n = records.size();
  auto share = [&](double frac) -> std::size_t {
    if (frac <= 0.0) return 0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))));
  };
  const std::size_t n_val = share(f.validation);
  const std::size_t n_test = share(f.test);
  if (n_val + n_test >= n + (f.train > 0.0 ? 0 : 1)) {
    throw DatasetError(Errc::TooFewRecords, std::to_string(n) + " records cannot fill the requested splits");
  }
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::string> ids;
  for (const auto& [id, _] : records) ids.push_back(id);

  bool any_normal = false, any_ischemic = false;
  for (const auto& [_, rc] : records) {
    any_normal |= rc.normal;
    any_ischemic |= rc.ischemic;
  }
  auto covers = [&](std::span<const std::string> part) {
    bool nn = false, ii = false;
    for (const auto& id : part) {
      nn |= records[id].normal;
      ii |= records[id].ischemic;
    }
    return nn && ii;
  };

  constexpr int kAttempts = 64;
  std::vector<std::string> best;
  int best_score = -1;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<std::string> order = ids;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    rng.shuffle(order.begin(), order.end());
    int score = 0;
    if (any_normal && any_ischemic) {
      std::span<const std::string> all(order);
      if (covers(all.subspan(0, n_train))) {
        score = 1;
        if (n_val == 0 || covers(all.subspan(n_train, n_val))) score = 2;
      }
    } else {
      score = 2;
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(order);
    }
    if (best_score == 2) break;
  }

  DatasetSplit split;
  for (std::size_t i = 0; i < best.size(); ++i) {
    SplitName s = i < n_train ? SplitName::Train : (i < n_train + n_val ? SplitName::Validation : SplitName::Test);
    split.provenance[best[i]] = s;
  }
  for (auto& w : windows) {
    split.part(split.provenance.at(w.record_id)).push_back(std::move(w));
  }
  for (auto s : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
    auto& p = split.part(s);
    std::stable_sort(p.begin(), p.end(), window_less);
  }
  return split;
}

std::vector<EcgWindow> balance_classes(std::vector<EcgWindow> windows, std::uint64_t seed, double ratio) {
  std::vector<std::size_t> normal, ischemic;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    (windows[i].label == Label::Ischemic ? ischemic : normal).push_back(i);
  }
  if (normal.empty() || ischemic.empty()) {
    throw DatasetError(Errc::SingleClassInput, "balance_classes needs both classes present");
  }
  const auto& minority = ischemic.size() < normal.size() ? ischemic : normal;
  const std::size_t majority = std::max(ischemic.size(), normal.size());
  const auto target = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(majority) - 1e-9));
  if (minority.size() >= target) return windows;

  std::vector<std::size_t> order = minority;
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  const std::size_t extra = target - minority.size();
  windows.reserve(windows.size() + extra);
  for (std::size_t k = 0; k < extra; ++k) windows.push_back(windows[order[k % order.size()]]);
  return windows;
}

}  // namespace ecg::dataset
