#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "ecg/nn.hpp"
#include "ecg/rng.hpp"
#include "ecg/testing/verify.hpp"

using namespace ecg;
using namespace ecg::nn;

namespace {

template <typename E>
E::Kind kind_of(auto&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return {};
}

Tensor3<float> random_input(std::size_t b, std::size_t len, std::uint64_t seed) {
  Tensor3<float> x(b, 1, len);
  Rng rng(seed);
  for (auto& v : x.values()) v = static_cast<float>(rng.normal());
  return x;
}

ModelConfig tiny() {
  ModelConfig c;
  c.n_residual_blocks = 2;
  c.base_filters = 4;
  c.kernel_len = 5;
  return c;
}

std::vector<dataset::EcgWindow> toy_windows(std::size_t n, std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<dataset::EcgWindow> ws(n);
  for (std::size_t i = 0; i < n; ++i) {
    ws[i].record_id = "r" + std::to_string(i % 5);
    ws[i].label = i % 2 ? dataset::Label::Ischemic : dataset::Label::Normal;
    ws[i].samples.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
      ws[i].samples[t] = static_cast<float>(rng.normal() + (i % 2 ? 1.5 * std::sin(0.3 * static_cast<double>(t)) : 0.0));
    }
  }
  return ws;
}

}  // namespace

TEST(Conv, SpecExample) {
  Tensor3<float> x(1, 1, 3);
  x.values() = {1, 2, 3};
  const std::vector<float> w{1, 0, -1}, b{0};
  EXPECT_EQ(conv1d_forward<float>(x, {w, b, 1, 1, 3}, 1).values(), (std::vector<float>{-2, -2, 2}));
}

TEST(Conv, IdentityKernel) {
  const auto x = random_input(2, 37, 1);
  const std::vector<float> w{0, 0, 1, 0, 0}, b{0};
  EXPECT_EQ(conv1d_forward<float>(x, {w, b, 1, 1, 5}, 1), x);
}

TEST(Conv, StrideTwoCeilLength) {
  Tensor3<float> x(1, 1, 6);
  const std::vector<float> w(3, 1.0f), b{0};
  EXPECT_EQ(conv1d_forward<float>(x, {w, b, 1, 1, 3}, 2).length(), 3u);
  EXPECT_EQ(conv_geometry(7, 16, 2).out_length, 4u);
}

TEST(Conv, MatchesNaiveOracleBothPrecisions) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t B = 1 + rng.index(2), Ci = 1 + rng.index(4), Co = 1 + rng.index(4);
    const std::size_t L = 1 + rng.index(900), K = 1 + rng.index(16), S = 1 + rng.index(2);
    std::vector<double> x(B * Ci * L), w(Co * Ci * K), b(Co);
    for (auto* v : {&x, &w, &b}) {
      for (auto& e : *v) e = rng.normal();
    }
    const auto ref = ecg::testing::naive_conv1d(x, B, Ci, L, w, b, Co, K, S);
    Tensor3<double> xd(B, Ci, L);
    std::copy(x.begin(), x.end(), xd.values().begin());
    const auto y = conv1d_forward<double>(xd, {w, b, Co, Ci, K}, S);
    ASSERT_EQ(y.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y.values()[i], ref[i], 1e-9);
  }
}

TEST(Conv, ChannelMismatchThrows) {
  Tensor3<float> x(1, 2, 8);
  const std::vector<float> w(3), b(1);
  EXPECT_EQ(kind_of<NnError>([&] { conv1d_forward<float>(x, {w, b, 1, 1, 3}, 1); }), Errc::ShapeMismatch);
}

TEST(Conv, BackwardIndependentOfThreadScheduleAndRepeatable) {
  const auto x = random_input(4, 300, 3);
  Rng rng(4);
  std::vector<float> w(2 * 1 * 7), b(2);
  for (auto& v : w) v = static_cast<float>(rng.normal());
  Tensor3<float> dy(4, 2, 150);
  for (auto& v : dy.values()) v = static_cast<float>(rng.normal());
  std::vector<float> dw1(w.size()), db1(2), dw2(w.size()), db2(2);
  Tensor3<float> dx1, dx2;
  conv1d_backward<float>(x, {w, b, 2, 1, 7}, 2, dy, &dx1, dw1, db1);
  conv1d_backward<float>(x, {w, b, 2, 1, 7}, 2, dy, &dx2, dw2, db2);
  EXPECT_EQ(dw1, dw2);
  EXPECT_EQ(dx1, dx2);
}

TEST(BatchNorm, TrainModeStandardizes) {
  Rng rng(5);
  Tensor3<double> x(4, 3, 100);
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t c = 0; c < 3; ++c) {
      for (auto& v : x.row(b, c)) v = 5.0 * static_cast<double>(c) + (1.0 + static_cast<double>(c)) * rng.normal();
    }
  }
  const std::vector<double> g(3, 1.0), be(3, 0.0);
  std::vector<double> rm(3, 0.0), rv(3, 1.0);
  const auto y = batchnorm_forward<double>(x, {g, be, rm, rv}, Mode::Train, nullptr);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, s2 = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      for (double v : y.row(b, c)) {
        s += v;
        s2 += v * v;
      }
    }
    EXPECT_NEAR(s / 400.0, 0.0, 1e-5);
    EXPECT_NEAR(s2 / 400.0, 1.0, 1e-3);
  }
  EXPECT_GT(rm[2], 0.0);  // running stats moved
}

TEST(BatchNorm, EvalIsPureAndConstantChannelIsZero) {
  Tensor3<float> x(2, 1, 50, 3.0f);
  const std::vector<float> g{1}, be{0};
  std::vector<float> rm{1}, rv{2};
  const auto a = batchnorm_forward<float>(x, {g, be, rm, rv}, Mode::Eval, nullptr);
  const auto b = batchnorm_forward<float>(x, {g, be, rm, rv}, Mode::Eval, nullptr);
  EXPECT_EQ(a, b);
  EXPECT_EQ(rm[0], 1.0f);
  const auto t = batchnorm_forward<float>(x, {g, be, rm, rv}, Mode::Train, nullptr, false);
  for (float v : t.values()) EXPECT_EQ(v, 0.0f);
}

TEST(BatchNorm, SingleValueTrainBatchRejected) {
  Tensor3<float> x(1, 1, 1);
  const std::vector<float> g{1}, be{0};
  std::vector<float> rm{0}, rv{1};
  EXPECT_EQ(kind_of<NnError>([&] { batchnorm_forward<float>(x, {g, be, rm, rv}, Mode::Train, nullptr); }),
            Errc::BatchTooSmall);
}

TEST(Elementwise, ReluDropoutMaxpool) {
  Tensor3<float> x(1, 1, 3);
  x.values() = {-1, 0, 2};
  EXPECT_EQ(relu(x).values(), (std::vector<float>{0, 0, 2}));
  const auto r = random_input(2, 64, 6);
  EXPECT_EQ(dropout(r, 0.0, Mode::Train, 1, 2), r);
  EXPECT_EQ(dropout(r, 0.5, Mode::Eval, 1, 2), r);
  Tensor3<float> m(1, 1, 4);
  m.values() = {1, 3, 2, 5};
  EXPECT_EQ(maxpool1d(m, 2).y.values(), (std::vector<float>{3, 5}));
  Tensor3<float> odd(1, 1, 5);
  odd.values() = {1, 3, 2, 5, 4};
  EXPECT_EQ(maxpool1d(odd, 2).y.values(), (std::vector<float>{3, 5, 4}));
}

TEST(Elementwise, DropoutMaskDeterministicAndRateRoughlyRight) {
  Tensor3<float> x(1, 1, 20000, 1.0f);
  const auto a = dropout(x, 0.2, Mode::Train, 9, 3), b = dropout(x, 0.2, Mode::Train, 9, 3);
  EXPECT_EQ(a, b);
  std::size_t zeros = 0;
  for (float v : a.values()) {
    zeros += v == 0.0f;
    if (v != 0.0f) {
      EXPECT_FLOAT_EQ(v, 1.25f);
    }
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 20000.0, 0.2, 0.02);
  EXPECT_NE(dropout(x, 0.2, Mode::Train, 10, 3), a);
}

TEST(Block, ZeroWeightsGiveIdentity) {
  ResidualNet<float> net(tiny(), 1);
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    auto& t = net.params()[i];
    if (t.name.rfind("block0.conv", 0) == 0) std::fill(t.values.begin(), t.values.end(), 0.0f);
  }
  auto x = random_input(2, 64, 7);
  Tensor3<float> xin(2, 4, 64);
  for (std::size_t i = 0; i < xin.size(); ++i) xin.values()[i] = x.values()[i % x.size()];
  const auto y = net.block_forward(0, xin, {Mode::Eval, 0, false});
  EXPECT_EQ(y, xin);
}

TEST(Block, StrideAndChannelSchedule) {
  ModelConfig c;
  EXPECT_EQ(c.stride_at(0), 1u);
  EXPECT_EQ(c.stride_at(1), 2u);
  EXPECT_EQ(c.channels_at(3), 64u);
  EXPECT_EQ(c.channels_at(4), 128u);
  EXPECT_EQ(c.channels_at(15), 256u);
  ModelConfig small;
  small.n_residual_blocks = 2;
  small.base_filters = 4;
  ResidualNet<float> net(small, 1);
  Tensor3<float> x(1, 4, 6144);
  EXPECT_EQ(net.block_forward(1, x, {Mode::Eval, 0, false}).length(), 3072u);
}

TEST(Model, DefaultOutputShapeAndSoftmax) {
  ResidualNet<float> net(ModelConfig{}, 1);
  const auto x = random_input(2, 6144, 8);
  const auto logits = net.forward(x, {Mode::Eval, 0, false});
  EXPECT_EQ(logits.batch(), 2u);
  EXPECT_EQ(logits.channels(), 24u);
  EXPECT_EQ(logits.length(), 2u);
  const auto p = net.predict(x);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t s = 0; s < 24; ++s) EXPECT_NEAR(p(b, s, 0) + p(b, s, 1), 1.0f, 1e-6f);
  }
  EXPECT_EQ(net.predict(x), p);
}

TEST(Model, ParameterNamesFollowLayout) {
  ResidualNet<float> net(tiny(), 1);
  for (const char* n : {"stem.conv.weight", "stem.bn.gamma", "block0.conv0.weight", "block0.bn1.gamma",
                        "block1.conv1.bias", "head.bn.running_var", "head.linear.weight", "head.linear.bias"}) {
    EXPECT_TRUE(net.params().find(n).has_value()) << n;
  }
  EXPECT_FALSE(net.params().find("block0.bn0.gamma").has_value());  // first block starts with its conv
}

TEST(Model, LengthMustBeSegmentMultiple) {
  ResidualNet<float> net(tiny(), 1);
  EXPECT_EQ(kind_of<NnError>([&] { net.forward(random_input(1, 63, 1), {Mode::Eval, 0, false}); }),
            Errc::ShapeMismatch);
}

TEST(Model, InvalidConfig) {
  ModelConfig c;
  c.kernel_len = 0;
  EXPECT_EQ(kind_of<NnError>([&] { c.validate(); }), Errc::InvalidConfig);
}

TEST(Loss, OneHotAndUniform) {
  Tensor3<double> probs(1, 1, 2);
  probs.values() = {0.0, 1.0};
  EXPECT_NEAR(cross_entropy_probs(probs, std::vector<std::uint8_t>{1}), 0.0, 1e-12);
  Tensor3<double> logits(2, 3, 2, 0.0);
  EXPECT_NEAR(cross_entropy(logits, std::vector<std::uint8_t>{0, 1}).loss, std::log(2.0), 1e-12);
}

TEST(Loss, GradientMatchesFiniteDifferencesInFloat) {
  Rng rng(9);
  Tensor3<float> logits(2, 4, 2);
  for (auto& v : logits.values()) v = static_cast<float>(rng.normal());
  const std::vector<std::uint8_t> y{1, 0};
  const auto g = cross_entropy(logits, y).dlogits;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const float saved = logits.values()[k];
    logits.values()[k] = saved + 1e-3f;
    const double up = cross_entropy(logits, y).loss;
    logits.values()[k] = saved - 1e-3f;
    const double down = cross_entropy(logits, y).loss;
    logits.values()[k] = saved;
    const double num = (up - down) / 2e-3;
    EXPECT_LT(relative_error(g.values()[k], num), 1e-3) << k;
  }
}

TEST(Adam, ZeroGradientKeepsParams) {
  ParamSet<double> p;
  p.add("w", {2}, {0.5, -1.0});
  auto st = TrainState<double>::init(p, 1e-3, 0);
  adam_step(p, Gradients<double>{{0.0, 0.0}}, st);
  EXPECT_EQ(p[0].values, (std::vector<double>{0.5, -1.0}));
}

TEST(Adam, FirstStepIsMinusLr) {
  ParamSet<double> p;
  p.add("w", {1}, {0.0});
  auto st = TrainState<double>::init(p, 1e-3, 0);
  adam_step(p, Gradients<double>{{1.0}}, st);
  EXPECT_NEAR(p[0].values[0], -1e-3, 1e-9);
  adam_step(p, Gradients<double>{{1.0}}, st);
  EXPECT_NEAR(p[0].values[0], -2e-3, 1e-9);
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  ParamSet<double> p;
  p.add("w", {1}, {0.25});
  auto st = TrainState<double>::init(p, 1e-3, 0);
  EXPECT_EQ(kind_of<NnError>([&] { adam_step(p, Gradients<double>{{std::nan("")}}, st); }),
            Errc::NonFiniteGradient);
  EXPECT_EQ(p[0].values[0], 0.25);
  EXPECT_EQ(st.step, 0u);
}

TEST(Plateau, Rules) {
  ParamSet<double> p;
  p.add("w", {1}, {0.0});
  auto st = TrainState<double>::init(p, 1e-3, 0);
  for (double l : {1.0, 0.9, 0.8}) EXPECT_FALSE(lr_on_plateau(st, l));
  EXPECT_DOUBLE_EQ(st.lr, 1e-3);

  auto flat = TrainState<double>::init(p, 1e-3, 0);
  bool reduced = false;
  for (double l : {1.0, 1.0, 1.0, 1.0}) reduced = lr_on_plateau(flat, l);
  EXPECT_TRUE(reduced);
  EXPECT_NEAR(flat.lr, 1e-4, 1e-18);

  EXPECT_FALSE(lr_on_plateau(flat, 0.5));
  EXPECT_EQ(flat.epochs_without_improvement, 0u);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  const auto ws = toy_windows(8, 64, 1);
  TrainOptions o;
  o.epochs = 0;
  o.seed = 3;
  const auto r = train(ws, ws, tiny(), o);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.best.params(), ResidualNet<float>(tiny(), mix_seed(3, 0x1417)).params());
}

TEST(Train, SameSeedSameHistoryBitwise) {
  const auto tr = toy_windows(24, 64, 2), va = toy_windows(8, 64, 3);
  TrainOptions o;
  o.epochs = 3;
  o.batch_size = 8;
  o.seed = 11;
  const auto a = train(tr, va, tiny(), o), b = train(tr, va, tiny(), o);
  EXPECT_EQ(history_csv(a.history), history_csv(b.history));
  EXPECT_EQ(a.best.params(), b.best.params());
  ASSERT_EQ(a.history.size(), 3u);
  EXPECT_LT(a.history.back().train_loss, a.history.front().train_loss);
}

TEST(Train, EmptySplitRejected) {
  const auto tr = toy_windows(8, 64, 2);
  EXPECT_EQ(kind_of<NnError>([&] { train(tr, {}, tiny(), {}); }), Errc::EmptySplit);
}

TEST(Checkpoint, RoundTripForwardBitwise) {
  ResidualNet<float> net(tiny(), 4);
  const auto back = decode_checkpoint(encode_checkpoint(net));
  const auto x = random_input(2, 64, 12);
  EXPECT_EQ(back.predict(x), net.predict(x));
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(net));
}

TEST(Checkpoint, BadMagic) {
  auto bytes = encode_checkpoint(ResidualNet<float>(tiny(), 4));
  bytes[0] = 'X';
  EXPECT_EQ(kind_of<NnError>([&] { decode_checkpoint(bytes); }), Errc::CorruptCheckpoint);
  bytes = encode_checkpoint(ResidualNet<float>(tiny(), 4));
  bytes.resize(bytes.size() - 3);
  EXPECT_EQ(kind_of<NnError>([&] { decode_checkpoint(bytes); }), Errc::CorruptCheckpoint);
}

TEST(Checkpoint, ConfigDisagreeingWithTensorsIsVersionMismatch) {
  ResidualNet<float> net(tiny(), 4);
  auto other = tiny();
  other.base_filters = 6;
  EXPECT_EQ(kind_of<NnError>([&] { ResidualNet<float>(other, net.params()); }), Errc::VersionMismatch);
  auto bytes = encode_checkpoint(net);
  // Rewrite base_filters in the manifest text without touching its length.
  const std::string needle = "\"base_filters\":4";
  auto it = std::search(bytes.begin(), bytes.end(), needle.begin(), needle.end());
  ASSERT_NE(it, bytes.end());
  *(it + static_cast<std::ptrdiff_t>(needle.size()) - 1) = '6';
  EXPECT_EQ(kind_of<NnError>([&] { decode_checkpoint(bytes); }), Errc::VersionMismatch);
}

TEST(GradCheck, AllGroupsBelowTolerance) {
  const auto r = gradient_check(gradcheck_config(), 21);
  EXPECT_LT(r.max_rel_error, 1e-4);
  std::set<std::string> groups;
  for (const auto& g : r.groups) groups.insert(g.group);
  EXPECT_EQ(groups, (std::set<std::string>{"batchnorm", "conv", "linear", "loss", "residual"}));
  EXPECT_LT(conv_gradient_check(21).max_rel_error, 1e-4);
  GradCheckOptions o;
  o.dropout_rate = 0.3;
  EXPECT_LT(gradient_check(gradcheck_config(), 22, o).max_rel_error, 1e-4);
}

TEST(GradCheck, DetectsCorruptedBackward) {
  testing_hooks::set_conv_backward_fault(true);
  const double err = conv_gradient_check(21).max_rel_error;
  testing_hooks::set_conv_backward_fault(false);
  EXPECT_GT(err, 1e-3);
}

TEST(Precision, DoubleShadowAgreesWithFloat) {
  ResidualNet<float> net(tiny(), 5);
  const auto shadow = net.cast<double>();
  const auto x = random_input(2, 64, 13);
  Tensor3<double> xd(2, 1, 64);
  std::copy(x.values().begin(), x.values().end(), xd.values().begin());
  const auto pf = net.predict(x);
  const auto pd = shadow.predict(xd);
  for (std::size_t i = 0; i < pf.size(); ++i) EXPECT_NEAR(pf.values()[i], pd.values()[i], 1e-4);
}
