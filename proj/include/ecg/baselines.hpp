#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecg/dataset.hpp"
#include "ecg/error.hpp"

namespace ecg::baselines {

enum class Errc { SingleClassInput, ShapeMismatch, InvalidModel, InvalidOptions };
using BaselineError = Error<Errc>;

// Fixed feature order. The last entry flags windows without usable beats,
// in which case the heart-rate and ST features are 0.
inline constexpr std::size_t kNumFeatures = 13;
using FeatureVector = std::array<double, kNumFeatures>;
const std::array<std::string_view, kNumFeatures>& feature_names();

enum Feature : std::size_t {
  kMean,
  kStd,
  kSkewness,
  kKurtosis,
  kRms,
  kZeroCrossingRate,
  kBandLow,   // 0.5-4 Hz
  kBandMid,   // 4-15 Hz
  kBandHigh,  // 15-40 Hz
  kHeartRate,
  kStMean,
  kStStd,
  kMissingBeats,
};

/// Band powers are one-sided periodogram power (mean-square units), so all
/// bins together sum to mean(x^2).
FeatureVector extract_features(std::span<const float> window, double rate);

using Matrix = std::vector<std::vector<double>>;

Matrix feature_matrix(std::span<const dataset::EcgWindow> windows, double rate);
std::vector<std::uint8_t> labels_of(std::span<const dataset::EcgWindow> windows);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for constant columns

  static Standardizer fit(const Matrix& X);
  std::vector<double> apply(std::span<const double> row) const;
};

struct LogRegOptions {
  double l2 = 1e-3;
  std::size_t epochs = 500;
  double lr = 1.0;  // initial step; backtracking shrinks it as needed
  std::uint64_t seed = 0;
};

struct LogRegModel {
  Standardizer scaler;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> loss_history;  // regularized loss after each epoch

  double predict_proba(std::span<const double> row) const;
};

/// Mean log-loss plus (l2/2)|w|^2 on already standardized rows; params are
/// (w..., b). Writes the gradient when `grad` is non-null.
double logreg_objective(std::span<const double> params, const Matrix& Z, std::span<const std::uint8_t> y, double l2,
                        std::vector<double>* grad);

LogRegModel fit_logreg(const Matrix& X, std::span<const std::uint8_t> y, const LogRegOptions& opts = {});
std::vector<double> predict_logreg(const LogRegModel& m, const Matrix& X);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> row) const;
  std::size_t depth() const;
  bool operator==(const Tree&) const = default;
};

struct TreeOptions {
  std::size_t max_depth = 6;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // per split; 0 means all
};

/// Gini CART; leaves hold the majority class (ties go to 1).
Tree fit_classification_tree(const Matrix& X, std::span<const std::uint8_t> y, const TreeOptions& opts = {},
                             std::uint64_t seed = 0);

struct ForestOptions {
  std::size_t n_trees = 100;
  std::size_t max_depth = 8;
  std::size_t min_samples_leaf = 1;
  double feature_subsample = 0.0;  // fraction per split; 0 means sqrt(d)
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct Forest {
  std::vector<Tree> trees;
  /// Mean of per-tree hard votes.
  double predict_proba(std::span<const double> row) const;
  bool operator==(const Forest&) const = default;
};

Forest fit_random_forest(const Matrix& X, std::span<const std::uint8_t> y, const ForestOptions& opts = {});

struct GbmOptions {
  std::size_t n_rounds = 100;
  std::size_t max_depth = 3;
  double shrinkage = 0.1;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

struct Gbm {
  double prior_log_odds = 0.0;
  std::vector<Tree> trees;  // leaf values are log-odds increments
  std::vector<double> loss_history;  // training log-loss after each round

  double raw_score(std::span<const double> row) const;
  double predict_proba(std::span<const double> row) const;
  bool operator==(const Gbm&) const = default;
};

/// Stagewise regression trees on log-odds. Each leaf takes a shrunken Newton
/// step, halved while it would raise that leaf's loss.
Gbm fit_gbm(const Matrix& X, std::span<const std::uint8_t> y, const GbmOptions& opts = {});

double log_loss(std::span<const double> probs, std::span<const std::uint8_t> y);

template <typename Model>
std::vector<double> predict_all(const Model& m, const Matrix& X) {
  std::vector<double> out;
  out.reserve(X.size());
  for (const auto& row : X) out.push_back(m.predict_proba(row));
  return out;
}

nlohmann::ordered_json to_json(const LogRegModel& m);
nlohmann::ordered_json to_json(const Tree& t);
nlohmann::ordered_json to_json(const Forest& f);
nlohmann::ordered_json to_json(const Gbm& g);
LogRegModel logreg_from_json(const nlohmann::json& j);
Tree tree_from_json(const nlohmann::json& j);
Forest forest_from_json(const nlohmann::json& j);
Gbm gbm_from_json(const nlohmann::json& j);

}  // namespace ecg::baselines
