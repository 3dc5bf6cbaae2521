#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ecg/nn/model.hpp"

namespace ecg::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct TrainState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t epochs_without_improvement = 0;
  std::uint64_t seed = 0;

  static TrainState init(const ParamSet<T>& params, double lr, std::uint64_t seed);
};

/// Bias-corrected Adam update of every trainable tensor at state.lr. Throws
/// NonFiniteGradient without touching parameters or state.
template <typename T>
void adam_step(ParamSet<T>& params, const Gradients<T>& grads, TrainState<T>& state, const AdamOptions& opts = {});

struct PlateauOptions {
  std::size_t patience = 3;
  double factor = 0.1;
  double threshold = 1e-4;  // relative improvement required
};

/// Returns true when this call reduced the learning rate.
template <typename T>
bool lr_on_plateau(TrainState<T>& state, double val_loss, const PlateauOptions& opts = {});

}  // namespace ecg::nn
