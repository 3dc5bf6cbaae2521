#include "ecg/nn/optim.hpp"

#include <cmath>

namespace ecg::nn {

template <typename T>
TrainState<T> TrainState<T>::init(const ParamSet<T>& params, double lr, std::uint64_t seed) {
  if (!(lr > 0.0)) throw NnError(Errc::InvalidConfig, "learning rate must be > 0");
  TrainState s;
  for (const auto& t : params.tensors()) {
    s.m.emplace_back(t.values.size(), 0.0);
    s.v.emplace_back(t.values.size(), 0.0);
  }
  s.lr = lr;
  s.seed = seed;
  return s;
}

template <typename T>
void adam_step(ParamSet<T>& params, const Gradients<T>& grads, TrainState<T>& state, const AdamOptions& opts) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw NnError(Errc::ShapeMismatch, "adam: gradients or moments do not match the parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].values.size() || state.m[i].size() != grads[i].size()) {
      throw NnError(Errc::ShapeMismatch, "adam: size mismatch for " + params[i].name);
    }
    if (!params[i].trainable) continue;
    for (T g : grads[i]) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NnError(Errc::NonFiniteGradient, "non-finite gradient in " + params[i].name);
      }
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opts.beta1, t);
  const double c2 = 1.0 - std::pow(opts.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    auto& w = params[i].values;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = grads[i][k];
      m[k] = opts.beta1 * m[k] + (1.0 - opts.beta1) * g;
      v[k] = opts.beta2 * v[k] + (1.0 - opts.beta2) * g * g;
      const double mh = m[k] / c1;
      const double vh = v[k] / c2;
      w[k] = static_cast<T>(w[k] - state.lr * mh / (std::sqrt(vh) + opts.epsilon));
    }
  }
}

template <typename T>
bool lr_on_plateau(TrainState<T>& state, double val_loss, const PlateauOptions& opts) {
  const bool improved = !std::isfinite(state.best_val_loss)
                            ? std::isfinite(val_loss)
                            : val_loss < state.best_val_loss * (1.0 - opts.threshold);
  if (improved) {
    state.best_val_loss = val_loss;
    state.epochs_without_improvement = 0;
    return false;
  }
  state.epochs_without_improvement += 1;
  if (state.epochs_without_improvement >= opts.patience) {
    state.lr *= opts.factor;
    state.epochs_without_improvement = 0;
    return true;
  }
  return false;
}

template struct TrainState<float>;
template struct TrainState<double>;
template void adam_step(ParamSet<float>&, const Gradients<float>&, TrainState<float>&, const AdamOptions&);
template void adam_step(ParamSet<double>&, const Gradients<double>&, TrainState<double>&, const AdamOptions&);
template bool lr_on_plateau(TrainState<float>&, double, const PlateauOptions&);
template bool lr_on_plateau(TrainState<double>&, double, const PlateauOptions&);

}  // namespace ecg::nn
