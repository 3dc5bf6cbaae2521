#include "ecg/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ecg/nn/loss.hpp"
#include "ecg/rng.hpp"

namespace ecg::nn {
namespace {

class Collector {
 public:
  void record(const std::string& group, double analytic, double numeric) {
    auto& g = groups_[group];
    g.group = group;
    g.max_rel_error = std::max(g.max_rel_error, relative_error(analytic, numeric));
    g.checked += 1;
  }

  GradCheckReport report() const {
    GradCheckReport r;
    for (const auto& [_, g] : groups_) {
      r.groups.push_back(g);
      r.max_rel_error = std::max(r.max_rel_error, g.max_rel_error);
    }
    return r;
  }

 private:
  std::map<std::string, GroupError> groups_;
};

// Random entries plus the largest-magnitude one, so a sample never consists
// only of structurally zero gradients.
std::vector<std::size_t> pick(std::span<const double> analytic, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx;
  if (analytic.empty()) return idx;
  if (analytic.size() <= k + 1) {
    for (std::size_t i = 0; i < analytic.size(); ++i) idx.push_back(i);
    return idx;
  }
  for (std::size_t i = 0; i < k; ++i) idx.push_back(rng.index(analytic.size()));
  auto top = std::max_element(analytic.begin(), analytic.end(),
                              [](double a, double b) { return std::abs(a) < std::abs(b); });
  idx.push_back(static_cast<std::size_t>(top - analytic.begin()));
  return idx;
}

template <typename F>
double central_difference(double& slot, double h, F&& loss) {
  const double saved = slot;
  slot = saved + h;
  const double up = loss();
  slot = saved - h;
  const double down = loss();
  slot = saved;
  return (up - down) / (2.0 * h);
}

std::string group_of(const std::string& name) {
  if (name.find("linear") != std::string::npos) return "linear";
  if (name.find(".bn") != std::string::npos) return "batchnorm";
  return "conv";
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

ModelConfig gradcheck_config() {
  ModelConfig c;
  c.n_residual_blocks = 2;
  c.base_filters = 8;
  c.dropout_rate = 0.0;
  return c;
}

GradCheckReport gradient_check(const ModelConfig& config, std::uint64_t seed, const GradCheckOptions& opts) {
  ModelConfig cfg = config;
  cfg.dropout_rate = opts.dropout_rate;
  ResidualNet<double> net(cfg, seed);
  Rng rng(mix_seed(seed, 0x6c));
  Tensor3<double> x(opts.batch, 1, opts.length);
  for (auto& v : x.values()) v = rng.normal();
  std::vector<std::uint8_t> labels(opts.batch);
  for (std::size_t b = 0; b < opts.batch; ++b) labels[b] = static_cast<std::uint8_t>(b % 2);

  const ForwardOptions fo{Mode::Train, mix_seed(seed, 0xd0), false};
  auto loss = [&] { return cross_entropy(net.forward(x, fo), labels).loss; };

  ForwardTrace<double> trace;
  const auto logits = net.forward(x, fo, &trace);
  const auto lr = cross_entropy(logits, labels);
  auto grads = zero_gradients(net.params());
  Tensor3<double> dx;
  net.backward(trace, lr.dlogits, grads, &dx);

  Collector col;
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    auto& t = net.params()[i];
    if (!t.trainable) continue;
    for (std::size_t k : pick(grads[i], opts.samples_per_tensor, rng)) {
      const double numeric = central_difference(t.values[k], opts.step, loss);
      col.record(group_of(t.name), grads[i][k], numeric);
    }
  }
  for (std::size_t k : pick(dx.values(), 4 * opts.samples_per_tensor, rng)) {
    const double numeric = central_difference(x.values()[k], opts.step, loss);
    col.record("residual", dx.values()[k], numeric);
  }
  auto report = col.report();
  const auto lossr = loss_gradient_check(seed, opts.step);
  report.groups.insert(report.groups.end(), lossr.groups.begin(), lossr.groups.end());
  report.max_rel_error = std::max(report.max_rel_error, lossr.max_rel_error);
  return report;
}

GradCheckReport conv_gradient_check(std::uint64_t seed, double step) {
  Rng rng(mix_seed(seed, 0xc0));
  const std::size_t B = 2, Cin = 3, Cout = 4, L = 21, K = 5, stride = 2;
  Tensor3<double> x(B, Cin, L);
  for (auto& v : x.values()) v = rng.normal();
  std::vector<double> w(Cout * Cin * K), bias(Cout);
  for (auto& v : w) v = rng.normal();
  for (auto& v : bias) v = rng.normal();
  const std::size_t out_len = conv_geometry(L, K, stride).out_length;
  Tensor3<double> r(B, Cout, out_len);
  for (auto& v : r.values()) v = rng.normal();

  auto loss = [&] {
    const auto y = conv1d_forward<double>(x, {w, bias, Cout, Cin, K}, stride);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.values()[i] * r.values()[i];
    return s;
  };
  std::vector<double> dw(w.size(), 0.0), db(bias.size(), 0.0);
  Tensor3<double> dx;
  conv1d_backward<double>(x, {w, bias, Cout, Cin, K}, stride, r, &dx, dw, db);

  Collector col;
  for (std::size_t k = 0; k < w.size(); ++k) col.record("conv", dw[k], central_difference(w[k], step, loss));
  for (std::size_t k = 0; k < bias.size(); ++k) col.record("conv", db[k], central_difference(bias[k], step, loss));
  for (std::size_t k = 0; k < x.size(); ++k) {
    col.record("conv", dx.values()[k], central_difference(x.values()[k], step, loss));
  }
  return col.report();
}

GradCheckReport loss_gradient_check(std::uint64_t seed, double step) {
  Rng rng(mix_seed(seed, 0x10));
  Tensor3<double> logits(3, 8, 2);
  for (auto& v : logits.values()) v = rng.normal(0.0, 2.0);
  const std::vector<std::uint8_t> labels{0, 1, 1};
  const auto analytic = cross_entropy(logits, labels).dlogits;
  auto loss = [&] { return cross_entropy(logits, labels).loss; };
  Collector col;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    col.record("loss", analytic.values()[k], central_difference(logits.values()[k], step, loss));
  }
  return col.report();
}

}  // namespace ecg::nn
