#include "ecg/nn/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ecg/eval.hpp"
#include "ecg/nn/loss.hpp"
#include "ecg/rng.hpp"

namespace ecg::nn {

Tensor3<float> make_batch(std::span<const dataset::EcgWindow> windows, std::span<const std::size_t> order,
                          std::size_t begin, std::size_t end) {
  const std::size_t len = windows[order[begin]].samples.size();
  Tensor3<float> x(end - begin, 1, len);
  for (std::size_t i = begin; i < end; ++i) {
    const auto& s = windows[order[i]].samples;
    if (s.size() != len) throw NnError(Errc::ShapeMismatch, "windows in one batch differ in length");
    std::copy(s.begin(), s.end(), x.item(i - begin).begin());
  }
  return x;
}

SplitScores score_windows(const ResidualNet<float>& net, std::span<const dataset::EcgWindow> windows,
                          std::size_t batch_size) {
  SplitScores out{{}, {}, 0.0};
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  double loss_sum = 0.0;
  for (std::size_t begin = 0; begin < windows.size(); begin += batch_size) {
    const std::size_t end = std::min(windows.size(), begin + batch_size);
    const auto probs = net.predict(make_batch(windows, order, begin, end));
    std::vector<std::uint8_t> labels;
    for (std::size_t i = begin; i < end; ++i) labels.push_back(static_cast<std::uint8_t>(windows[i].label));
    loss_sum += cross_entropy_probs(probs, labels) * static_cast<double>(end - begin);
    for (std::size_t b = 0; b < probs.batch(); ++b) {
      double acc = 0.0;
      for (std::size_t t = 0; t < probs.channels(); ++t) acc += probs(b, t, 1);
      out.scores.push_back(acc / static_cast<double>(probs.channels()));
    }
    out.labels.insert(out.labels.end(), labels.begin(), labels.end());
  }
  out.loss = windows.empty() ? 0.0 : loss_sum / static_cast<double>(windows.size());
  return out;
}

TrainResult train(std::span<const dataset::EcgWindow> train_set, std::span<const dataset::EcgWindow> val_set,
                  const ModelConfig& config, const TrainOptions& opts) {
  if (train_set.empty()) throw NnError(Errc::EmptySplit, "training split is empty");
  if (val_set.empty()) throw NnError(Errc::EmptySplit, "validation split is empty");
  if (opts.batch_size == 0) throw NnError(Errc::InvalidConfig, "batch_size must be >= 1");

  ResidualNet<float> net(config, mix_seed(opts.seed, 0x1417));
  TrainState<float> state = TrainState<float>::init(net.params(), opts.lr, opts.seed);
  TrainResult result{net, {}, std::nullopt};
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(opts.seed, epoch));
    rng.shuffle(order.begin(), order.end());

    const double lr_used = state.lr;
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += opts.batch_size) {
      const std::size_t end = std::min(order.size(), begin + opts.batch_size);
      const auto x = make_batch(train_set, order, begin, end);
      std::vector<std::uint8_t> labels;
      for (std::size_t i = begin; i < end; ++i) labels.push_back(static_cast<std::uint8_t>(train_set[order[i]].label));
      ForwardTrace<float> trace;
      const ForwardOptions fo{Mode::Train, mix_seed(opts.seed ^ 0xd40u, state.step), true};
      const auto logits = net.forward(x, fo, &trace);
      const auto loss = cross_entropy(logits, labels);
      auto grads = zero_gradients(net.params());
      net.backward(trace, loss.dlogits, grads);
      adam_step(net.params(), grads, state, opts.adam);
      loss_sum += loss.loss * static_cast<double>(end - begin);
    }

    const auto val = score_windows(net, val_set, opts.batch_size);
    double auc = std::numeric_limits<double>::quiet_NaN();
    try {
      auc = eval::roc_auc(val.scores, val.labels);
    } catch (const eval::EvalError&) {
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), val.loss, auc, lr_used};
    if (val.loss < best_val) {
      best_val = val.loss;
      result.best = net;
      result.best_epoch = epoch;
    }
    lr_on_plateau(state, val.loss, opts.plateau);
    result.history.push_back(rec);
    if (opts.on_epoch) opts.on_epoch(rec);
  }
  return result;
}

std::string history_csv(std::span<const EpochRecord> history) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_loss,val_loss,val_auc,lr\n";
  for (const auto& r : history) {
    os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_auc << ',' << r.lr << '\n';
  }
  return os.str();
}

}  // namespace ecg::nn
