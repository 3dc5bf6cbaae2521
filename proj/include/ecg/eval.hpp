#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecg/error.hpp"

namespace ecg::eval {

enum class Errc { SingleClassInput, EmptyGroup, LengthMismatch, InvalidThreshold };
using EvalError = Error<Errc>;

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;  // score >= threshold is predicted positive
};

struct Confusion {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool operator==(const Confusion&) const = default;
};

/// Mann-Whitney AUC, ties count one half. Labels are 0/1.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Operating points from (0,0) to (1,1), one per distinct score.
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Trapezoidal area under a ROC polyline.
double trapezoid_area(std::span<const RocPoint> points);

struct SensSpec {
  std::optional<double> sensitivity;  // empty when there are no positives
  std::optional<double> specificity;  // empty when there are no negatives
  Confusion confusion;
};

SensSpec sensitivity_specificity(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                 double threshold);

/// Maximizes TPR - FPR; returns the midpoint of the best gap between
/// consecutive distinct scores, preferring the lower threshold on ties.
double youden_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct ScoredWindow {
  std::string record_id;
  double score;
  std::uint8_t label;
};

struct RecordScore {
  std::string record_id;
  double score;
  std::uint8_t label;  // 1 when any window of the record is positive
  std::size_t n_windows;
};

/// Mean window score per record, ordered by record id.
std::vector<RecordScore> aggregate(std::span<const ScoredWindow> windows);

struct OperatingPoint {
  double threshold;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  Confusion confusion;
};

struct EvalReport {
  std::string model;
  std::string split;
  std::size_t n_windows = 0;
  std::size_t n_positive = 0;
  double auc = 0.0;
  OperatingPoint at_default;  // threshold 0.5
  OperatingPoint at_youden;
  std::vector<RocPoint> roc;
  std::optional<double> record_auc;
};

EvalReport make_report(std::string model, std::string split, std::span<const ScoredWindow> windows);

nlohmann::ordered_json to_json(const EvalReport& r, bool include_roc = true);
std::string roc_csv(std::span<const RocPoint> points);

}  // namespace ecg::eval
