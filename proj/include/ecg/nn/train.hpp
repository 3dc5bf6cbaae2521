#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecg/dataset.hpp"
#include "ecg/nn/model.hpp"
#include "ecg/nn/optim.hpp"

namespace ecg::nn {

struct EpochRecord {
  std::size_t epoch;
  double train_loss;
  double val_loss;
  double val_auc;  // NaN when validation holds a single class
  double lr;
};

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  AdamOptions adam;
  PlateauOptions plateau;
  std::uint64_t seed = 0;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ResidualNet<float> best;
  std::vector<EpochRecord> history;
  std::optional<std::size_t> best_epoch;
};

/// Mini-batch Adam with plateau schedule; keeps the parameters of the epoch
/// with the lowest validation loss. Throws EmptySplit.
TrainResult train(std::span<const dataset::EcgWindow> train_set, std::span<const dataset::EcgWindow> val_set,
                  const ModelConfig& config, const TrainOptions& opts);

/// (n, 1, len) batch from windows[begin, end) in the given order.
Tensor3<float> make_batch(std::span<const dataset::EcgWindow> windows, std::span<const std::size_t> order,
                          std::size_t begin, std::size_t end);

struct SplitScores {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  double loss;
};

/// Eval-mode window scores and mean loss over a whole split.
SplitScores score_windows(const ResidualNet<float>& net, std::span<const dataset::EcgWindow> windows,
                          std::size_t batch_size = 32);

std::string history_csv(std::span<const EpochRecord> history);

}  // namespace ecg::nn
