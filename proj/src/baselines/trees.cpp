#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "ecg/baselines.hpp"
#include "ecg/rng.hpp"

namespace ecg::baselines {
namespace {

enum class Criterion { Gini, Mse };

void check_xy(const Matrix& X, std::span<const std::uint8_t> y) {
  if (X.size() != y.size() || X.empty() || X.front().empty()) {
    throw BaselineError(Errc::ShapeMismatch, "feature rows and labels must be non-empty and equal in count");
  }
  for (const auto& r : X) {
    if (r.size() != X.front().size()) throw BaselineError(Errc::ShapeMismatch, "ragged feature matrix");
  }
  const auto pos = std::count(y.begin(), y.end(), std::uint8_t{1});
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
    throw BaselineError(Errc::SingleClassInput, "classifier needs both classes in the training set");
  }
}

// Weighted-by-multiplicity node statistics; impurity() is the node total,
// so a split's gain is parent - left - right.
struct Stats {
  double n = 0.0, sum = 0.0, sum_sq = 0.0;
  void add(double t) {
    n += 1.0;
    sum += t;
    sum_sq += t * t;
  }
  double impurity(Criterion c) const {
    if (n <= 0.0) return 0.0;
    if (c == Criterion::Gini) return 2.0 * sum * (n - sum) / n;
    return std::max(0.0, sum_sq - sum * sum / n);
  }
};

class Builder {
 public:
  Builder(const Matrix& X, std::span<const double> target, Criterion crit, const TreeOptions& opts, std::uint64_t seed,
          std::function<double(std::span<const std::size_t>)> leaf_value)
      : X_(X), t_(target), crit_(crit), opts_(opts), rng_(seed), leaf_value_(std::move(leaf_value)) {}

  Tree build(std::vector<std::size_t> idx) {
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  int make_leaf(std::span<const std::size_t> idx) {
    TreeNode n;
    n.value = leaf_value_(idx);
    tree_.nodes.push_back(n);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = X_.front().size();
    std::vector<std::size_t> f(d);
    std::iota(f.begin(), f.end(), 0);
    if (opts_.max_features == 0 || opts_.max_features >= d) return f;
    for (std::size_t i = 0; i < opts_.max_features; ++i) {
      const std::size_t j = i + rng_.index(d - i);
      std::swap(f[i], f[j]);
    }
    f.resize(opts_.max_features);
    std::sort(f.begin(), f.end());
    return f;
  }

  int grow(std::vector<std::size_t>& idx, std::size_t depth) {
    Stats all;
    for (auto i : idx) all.add(t_[i]);
    const double parent = all.impurity(crit_);
    const std::size_t min_leaf = std::max<std::size_t>(1, opts_.min_samples_leaf);
    if (depth >= opts_.max_depth || parent <= 1e-12 || idx.size() < 2 * min_leaf) return make_leaf(idx);

    int best_feature = -1;
    double best_gain = -1.0, best_threshold = 0.0;
    std::vector<std::size_t> sorted = idx;
    for (std::size_t f : candidate_features()) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return X_[a][f] < X_[b][f]; });
      Stats left;
      for (std::size_t k = 1; k < sorted.size(); ++k) {
        left.add(t_[sorted[k - 1]]);
        const double lo = X_[sorted[k - 1]][f], hi = X_[sorted[k]][f];
        if (!(lo < hi) || k < min_leaf || sorted.size() - k < min_leaf) continue;
        Stats right{all.n - left.n, all.sum - left.sum, all.sum_sq - left.sum_sq};
        const double gain = parent - left.impurity(crit_) - right.impurity(crit_);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = lo + (hi - lo) / 2.0;
        }
      }
    }
    if (best_feature < 0) return make_leaf(idx);

    std::vector<std::size_t> l, r;
    for (auto i : idx) (X_[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? l : r).push_back(i);
    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{best_feature, best_threshold, -1, -1, 0.0});
    idx.clear();
    idx.shrink_to_fit();
    const int li = grow(l, depth + 1);
    const int ri = grow(r, depth + 1);
    tree_.nodes[static_cast<std::size_t>(node)].left = li;
    tree_.nodes[static_cast<std::size_t>(node)].right = ri;
    return node;
  }

  const Matrix& X_;
  std::span<const double> t_;
  Criterion crit_;
  TreeOptions opts_;
  Rng rng_;
  std::function<double(std::span<const std::size_t>)> leaf_value_;
  Tree tree_;
};

std::vector<double> as_targets(std::span<const std::uint8_t> y) { return {y.begin(), y.end()}; }

Tree fit_gini(const Matrix& X, std::span<const double> t, std::vector<std::size_t> idx, const TreeOptions& opts,
              std::uint64_t seed) {
  auto majority = [&](std::span<const std::size_t> s) {
    double pos = 0.0;
    for (auto i : s) pos += t[i];
    return 2.0 * pos >= static_cast<double>(s.size()) ? 1.0 : 0.0;
  };
  return Builder(X, t, Criterion::Gini, opts, seed, majority).build(std::move(idx));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

std::size_t leaf_of(const Tree& t, std::span<const double> row) {
  std::size_t n = 0;
  while (t.nodes[n].feature >= 0) {
    const auto& node = t.nodes[n];
    n = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return n;
}

}  // namespace

double Tree::predict(std::span<const double> row) const {
  if (nodes.empty()) throw BaselineError(Errc::InvalidModel, "empty tree");
  return nodes[leaf_of(*this, row)].value;
}

std::size_t Tree::depth() const {
  std::function<std::size_t(std::size_t)> rec = [&](std::size_t n) -> std::size_t {
    if (nodes[n].feature < 0) return 0;
    return 1 + std::max(rec(static_cast<std::size_t>(nodes[n].left)), rec(static_cast<std::size_t>(nodes[n].right)));
  };
  return nodes.empty() ? 0 : rec(0);
}

Tree fit_classification_tree(const Matrix& X, std::span<const std::uint8_t> y, const TreeOptions& opts,
                             std::uint64_t seed) {
  check_xy(X, y);
  const auto t = as_targets(y);
  std::vector<std::size_t> idx(X.size());
  std::iota(idx.begin(), idx.end(), 0);
  return fit_gini(X, t, std::move(idx), opts, seed);
}

double Forest::predict_proba(std::span<const double> row) const {
  if (trees.empty()) throw BaselineError(Errc::InvalidModel, "empty forest");
  double votes = 0.0;
  for (const auto& t : trees) votes += t.predict(row);
  return votes / static_cast<double>(trees.size());
}

Forest fit_random_forest(const Matrix& X, std::span<const std::uint8_t> y, const ForestOptions& opts) {
  check_xy(X, y);
  if (opts.n_trees == 0) throw BaselineError(Errc::InvalidOptions, "forest needs at least one tree");
  const std::size_t d = X.front().size();
  const double frac = opts.feature_subsample;
  const std::size_t max_features =
      frac <= 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d)))))
                  : std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(frac * static_cast<double>(d))), 1, d);
  const TreeOptions topts{opts.max_depth, opts.min_samples_leaf, max_features};
  const auto t = as_targets(y);
  Forest f;
  f.trees.resize(opts.n_trees);
  const auto n_trees = static_cast<std::ptrdiff_t>(opts.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < n_trees; ++k) {
    const std::uint64_t seed = mix_seed(opts.seed, static_cast<std::uint64_t>(k));
    std::vector<std::size_t> idx(X.size());
    if (opts.bootstrap) {
      Rng rng(mix_seed(seed, 0xb007));
      for (auto& i : idx) i = rng.index(X.size());
      std::sort(idx.begin(), idx.end());
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    f.trees[static_cast<std::size_t>(k)] = fit_gini(X, t, std::move(idx), topts, seed);
  }
  return f;
}

double Gbm::raw_score(std::span<const double> row) const {
  double s = prior_log_odds;
  for (const auto& t : trees) s += t.predict(row);
  return s;
}

double Gbm::predict_proba(std::span<const double> row) const { return sigmoid(raw_score(row)); }

Gbm fit_gbm(const Matrix& X, std::span<const std::uint8_t> y, const GbmOptions& opts) {
  check_xy(X, y);
  if (!(opts.shrinkage > 0.0)) throw BaselineError(Errc::InvalidOptions, "gbm shrinkage must be > 0");
  const std::size_t n = X.size();
  const double pos = static_cast<double>(std::count(y.begin(), y.end(), std::uint8_t{1}));
  Gbm g;
  g.prior_log_odds = std::log(pos / (static_cast<double>(n) - pos));
  std::vector<double> F(n, g.prior_log_odds), resid(n), p(n);
  auto loss_at = [&](std::size_t i, double f) { return softplus(f) - (y[i] ? f : 0.0); };
  const TreeOptions topts{opts.max_depth, opts.min_samples_leaf, 0};

  for (std::size_t round = 0; round < opts.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = sigmoid(F[i]);
      resid[i] = (y[i] ? 1.0 : 0.0) - p[i];
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto mean = [&](std::span<const std::size_t> s) {
      double a = 0.0;
      for (auto i : s) a += resid[i];
      return a / static_cast<double>(s.size());
    };
    Tree tree = Builder(X, resid, Criterion::Mse, topts, mix_seed(opts.seed, round), mean).build(std::move(idx));

    std::vector<std::vector<std::size_t>> members(tree.nodes.size());
    for (std::size_t i = 0; i < n; ++i) members[leaf_of(tree, X[i])].push_back(i);
    for (std::size_t leaf = 0; leaf < tree.nodes.size(); ++leaf) {
      if (tree.nodes[leaf].feature >= 0) continue;
      const auto& m = members[leaf];
      double num = 0.0, den = 0.0, base = 0.0;
      for (auto i : m) {
        num += resid[i];
        den += p[i] * (1.0 - p[i]);
        base += loss_at(i, F[i]);
      }
      double step = opts.shrinkage * num / std::max(den, 1e-12);
      for (int h = 0; h < 50; ++h, step *= 0.5) {
        double l = 0.0;
        for (auto i : m) l += loss_at(i, F[i] + step);
        if (l <= base) break;
      }
      double l = 0.0;
      for (auto i : m) l += loss_at(i, F[i] + step);
      if (l > base) step = 0.0;
      tree.nodes[leaf].value = step;
      for (auto i : m) F[i] += step;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += loss_at(i, F[i]);
    g.loss_history.push_back(total / static_cast<double>(n));
    g.trees.push_back(std::move(tree));
  }
  return g;
}

}  // namespace ecg::baselines
