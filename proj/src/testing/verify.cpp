#include "ecg/testing/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "ecg/dataset.hpp"
#include "ecg/eval.hpp"
#include "ecg/nn/checkpoint.hpp"
#include "ecg/nn/gradcheck.hpp"
#include "ecg/nn/layers.hpp"
#include "ecg/rng.hpp"
#include "ecg/testing/wfdb_writer.hpp"
#include "ecg/wfdb.hpp"

namespace ecg::testing {
namespace {

constexpr double kGradTolerance = 1e-4;

std::string describe(const nn::GradCheckReport& r) {
  std::ostringstream os;
  os.precision(3);
  for (const auto& g : r.groups) os << g.group << "=" << g.max_rel_error << " (" << g.checked << ") ";
  return os.str();
}

CheckResult timed(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::pair<bool, std::string> r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {name, r.first, r.second, s};
}

}  // namespace

std::vector<double> naive_conv1d(const std::vector<double>& x, std::size_t batch, std::size_t cin, std::size_t len,
                                 const std::vector<double>& w, const std::vector<double>& b, std::size_t cout,
                                 std::size_t kernel, std::size_t stride) {
  const std::size_t out_len = (len + stride - 1) / stride;
  const std::size_t needed = (out_len - 1) * stride + kernel;
  const std::size_t pad_left = (needed > len ? needed - len : 0) / 2;
  std::vector<double> y(batch * cout * out_len, 0.0);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t t = 0; t < out_len; ++t) {
        double acc = b[o];
        for (std::size_t i = 0; i < cin; ++i) {
          for (std::size_t k = 0; k < kernel; ++k) {
            const auto p = static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(pad_left);
            if (p < 0 || p >= static_cast<std::ptrdiff_t>(len)) continue;
            acc += w[(o * cin + i) * kernel + k] * x[(n * cin + i) * len + static_cast<std::size_t>(p)];
          }
        }
        y[(n * cout + o) * out_len + t] = acc;
      }
    }
  }
  return y;
}

double brute_force_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

std::vector<CheckResult> run_verify_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;

  out.push_back(timed("gradient check (conv, batchnorm, residual, linear, loss)", [&] {
    const auto r = nn::gradient_check(nn::gradcheck_config(), seed);
    return std::pair{r.max_rel_error < kGradTolerance, describe(r)};
  }));
  out.push_back(timed("gradient check (conv only)", [&] {
    const auto r = nn::conv_gradient_check(seed);
    return std::pair{r.max_rel_error < kGradTolerance, describe(r)};
  }));
  out.push_back(timed("gradient check (dropout 0.2, frozen mask)", [&] {
    nn::GradCheckOptions o;
    o.dropout_rate = 0.2;
    const auto r = nn::gradient_check(nn::gradcheck_config(), seed + 1, o);
    return std::pair{r.max_rel_error < kGradTolerance, describe(r)};
  }));

  out.push_back(timed("conv1d vs naive oracle", [&] {
    Rng rng(mix_seed(seed, 0xc1));
    double worst = 0.0, worst_f32 = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t B = 1 + rng.index(3), Ci = 1 + rng.index(6), Co = 1 + rng.index(6);
      const std::size_t L = 1 + rng.index(70), K = 1 + rng.index(17), S = 1 + rng.index(2);
      std::vector<double> x(B * Ci * L), w(Co * Ci * K), b(Co);
      for (auto* v : {&x, &w, &b}) {
        for (auto& e : *v) e = static_cast<float>(rng.normal());
      }
      const auto ref = naive_conv1d(x, B, Ci, L, w, b, Co, K, S);

      nn::Tensor3<double> xd(B, Ci, L);
      std::copy(x.begin(), x.end(), xd.values().begin());
      const auto yd = nn::conv1d_forward<double>(xd, {w, b, Co, Ci, K}, S);

      // Single precision is held to its own rounding scale: eps * sum |w x| per output.
      nn::Tensor3<float> xf(B, Ci, L);
      std::copy(x.begin(), x.end(), xf.values().begin());
      const std::vector<float> wf(w.begin(), w.end()), bf(b.begin(), b.end());
      const auto yf = nn::conv1d_forward<float>(xf, {wf, bf, Co, Ci, K}, S);
      std::vector<double> aw(w.size()), ax(x.size()), ab(b.size());
      for (std::size_t i = 0; i < w.size(); ++i) aw[i] = std::abs(w[i]);
      for (std::size_t i = 0; i < x.size(); ++i) ax[i] = std::abs(x[i]);
      for (std::size_t i = 0; i < b.size(); ++i) ab[i] = std::abs(b[i]);
      const auto scale = naive_conv1d(ax, B, Ci, L, aw, ab, Co, K, S);

      if (ref.size() != yd.size() || ref.size() != yf.size()) {
        return std::pair{false, std::string("output length mismatch")};
      }
      for (std::size_t i = 0; i < ref.size(); ++i) {
        worst = std::max(worst, std::abs(ref[i] - yd.values()[i]));
        worst_f32 = std::max(worst_f32, std::abs(ref[i] - yf.values()[i]) / (1.0 + scale[i]));
      }
    }
    nn::Tensor3<float> ex(1, 1, 3);
    ex.values() = {1, 2, 3};
    const std::vector<float> ew{1, 0, -1}, eb{0};
    const auto ey = nn::conv1d_forward<float>(ex, {ew, eb, 1, 1, 3}, 1);
    const bool example = ey.values() == std::vector<float>{-2, -2, 2};
    const double f32_tol = 8.0 * std::numeric_limits<float>::epsilon();
    std::ostringstream os;
    os << "f64 max abs diff " << worst << "; f32 max scaled diff " << worst_f32
       << (example ? "" : "; [1,2,3]*[1,0,-1] example wrong");
    return std::pair{worst < 1e-5 && worst_f32 < f32_tol && example, os.str()};
  }));

  out.push_back(timed("AUC vs brute-force oracle", [&] {
    Rng rng(mix_seed(seed, 0xa0c));
    std::size_t inexact = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 2 + rng.index(200);
      std::vector<double> s(n);
      std::vector<std::uint8_t> l(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = static_cast<double>(rng.index(12)) / 11.0;  // coarse grid forces ties
        l[i] = static_cast<std::uint8_t>(rng.index(2));
      }
      l[0] = 0;
      l[1] = 1;
      if (eval::roc_auc(s, l) != brute_force_auc(s, l)) ++inexact;
      worst = std::max(worst, std::abs(eval::trapezoid_area(eval::roc_points(s, l)) - eval::roc_auc(s, l)));
    }
    const std::vector<double> ex{0.1, 0.4, 0.35, 0.8};
    const std::vector<std::uint8_t> el{0, 0, 1, 1};
    const bool example = eval::roc_auc(ex, el) == 0.75;
    std::ostringstream os;
    os << inexact << " of 1000 differ from pair counting; trapezoid max abs diff " << worst;
    return std::pair{inexact == 0 && worst < 1e-12 && example, os.str()};
  }));

  out.push_back(timed("format round-trips (212, annotations, shards, checkpoint)", [&] {
    Rng rng(mix_seed(seed, 0xf0));
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<std::int32_t> v(1 + rng.index(600));
      for (auto& e : v) e = static_cast<std::int32_t>(rng.index(4096)) - 2048;
      if (wfdb::decode_212(encode_212(v), v.size()) != v) return std::pair{false, std::string("format 212 mismatch")};
    }

    std::vector<wfdb::AnnotationEvent> evs;
    std::int64_t t = 0;
    for (int i = 0; i < 50; ++i) {
      t += static_cast<std::int64_t>(rng.index(i % 7 == 0 ? 100000 : 1000));
      wfdb::AnnotationEvent e;
      e.sample_index = t;
      e.code = 1 + static_cast<int>(rng.index(40));
      e.channel = static_cast<int>(rng.index(3));
      if (i % 3 == 0) e.aux = "(st" + std::to_string(e.channel) + (i % 2 ? "+" : "-");
      evs.push_back(e);
    }
    if (wfdb::read_annotations(encode_annotations(evs)) != evs) {
      return std::pair{false, std::string("annotation mismatch")};
    }

    std::vector<dataset::EcgWindow> ws;
    for (int i = 0; i < 5; ++i) {
      dataset::EcgWindow w{"r" + std::to_string(i), static_cast<std::uint8_t>(i % 2), static_cast<std::uint64_t>(i) * 256,
                           std::vector<float>(256), i % 2 ? dataset::Label::Ischemic : dataset::Label::Normal};
      for (auto& x : w.samples) x = static_cast<float>(rng.normal());
      ws.push_back(std::move(w));
    }
    if (dataset::decode_shard(dataset::encode_shard(ws)) != ws) return std::pair{false, std::string("shard mismatch")};

    const nn::ResidualNet<float> net(nn::gradcheck_config(), seed);
    const auto back = nn::decode_checkpoint(nn::encode_checkpoint(net));
    if (!(back.params() == net.params()) || !(back.config() == net.config())) {
      return std::pair{false, std::string("checkpoint mismatch")};
    }
    return std::pair{true, std::string("all identical")};
  }));
  return out;
}

}  // namespace ecg::testing
