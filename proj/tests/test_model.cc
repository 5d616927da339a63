// tests/test_model.cc

// Copyright 2026   DANSE authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "danse/checkpoint.h"
#include "danse/error.h"
#include "danse/grad_check.h"
#include "danse/model.h"
#include "danse/ops.h"
#include "danse/optim.h"
#include "doctest.h"
#include "test_util.h"

using namespace danse;
using danse::testing::RandomNormal;
using danse::testing::TinyModelConfig;

namespace {

AttentionParams ScalarAttention() {
  AttentionParams p;
  p.W = Tensor::FromData({1, 1}, {1.0});
  p.b = Tensor::FromData({1}, {0.0});
  p.v = Tensor::FromData({1}, {1.0});
  p.k = Tensor::FromData({1}, {0.0});
  return p;
}

// Plain-double cosine between row i of f [N x D] and column j of w [D x S].
double Cosine(const Tensor& f, std::size_t i, const Tensor& w, std::size_t j) {
  const std::size_t d = f.dim(1), s = w.dim(1);
  double dot = 0, nf = 0, nw = 0;
  for (std::size_t k = 0; k < d; ++k) {
    const double a = f[i * d + k], b = w[k * s + j];
    dot += a * b;
    nf += a * a;
    nw += b * b;
  }
  return dot / std::sqrt(nf * nw);
}

std::vector<std::vector<double>> Grads(const ParamSet& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params)
    out.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
  return out;
}

}  // namespace

TEST_CASE("default extractor has 52 named layers") {
  ExtractorConfig c;
  CHECK(c.BlockConvCount() == 48);
  CHECK(c.NamedLayerCount() == 52);
  CHECK(c.embedding_dim == 64);

  ModelConfig mc;
  mc.extractor.channel_widths = {2, 2, 2, 2};
  mc.extractor.fc_hidden_dim = 4;
  mc.extractor.attention_dim = 2;
  DanseModel m(mc, 1);
  std::size_t convs = 0;
  for (const auto& p : m.ThetaF()) {
    const auto& n = p.name;
    if (n.ends_with(".kernels") && n.find("projection") == std::string::npos)
      ++convs;
  }
  CHECK(convs == 49);  // 48 block convs plus the input conv
}

TEST_CASE("parameter groups are disjoint and cover the model") {
  DanseModel m(TinyModelConfig(), 3);
  std::vector<std::string> names;
  for (const auto& group : {m.ThetaF(), m.ThetaY(), m.ThetaD()})
    for (const auto& p : group) names.push_back(p.name);
  auto sorted = names;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  std::size_t params_in_state = 0;
  for (const auto& nt : m.State())
    if (!nt.name.ends_with(".running_mean") &&
        !nt.name.ends_with(".running_var"))
      ++params_in_state;
  CHECK(params_in_state == names.size());
  CHECK(m.classifier().am_weight().shape() == Shape{8, 3});
}

TEST_CASE("extractor output length and minimum input") {
  DanseModel m(TinyModelConfig(), 1);
  const ExtractorConfig& c = m.config().extractor;
  std::mt19937_64 rng(2);
  for (std::size_t t : {32, 33, 40, 47, 64}) {
    Tape tape;
    Tensor h = m.extractor().Frames(tape, RandomNormal({2, 4, t}, rng, false),
                                    Mode::kTrain);
    CHECK(h.dim(1) == c.PooledChannels());
    CHECK(h.dim(2) == (t + 7) / 8);
    CHECK(c.OutputLength(t) == (t + 7) / 8);
  }
  Tape tape;
  CHECK_THROWS_AS(
      m.extractor().Forward(tape, RandomNormal({2, 4, 31}, rng, false),
                            Mode::kTrain),
      InputError);
}

TEST_CASE("attention example and basic contracts") {
  AttentionParams p = ScalarAttention();
  Tape tape;
  Tensor a = AttentionWeights(tape, Tensor::FromData({1, 2}, {0.0, 1.0}), p);
  // 1 / (1 + e^{tanh 1}) evaluated independently
  CHECK(a[0] == doctest::Approx(0.3183002578).epsilon(1e-9));
  CHECK(a[1] == doctest::Approx(0.6816997422).epsilon(1e-9));

  Tensor same = AttentionWeights(
      tape, Tensor::FromData({1, 4}, {0.3, 0.3, 0.3, 0.3}), p);
  for (std::size_t t = 0; t < 4; ++t) CHECK(same[t] == doctest::Approx(0.25));
  Tensor single = AttentionWeights(tape, Tensor::FromData({1, 1}, {2.0}), p);
  CHECK(single[0] == 1.0);
}

TEST_CASE("attentive statistics examples") {
  Tape tape;
  PooledStats s =
      AttentiveStats(tape, Tensor::FromData({1, 1, 2}, {0.0, 2.0}),
                     Tensor::FromData({1, 2}, {0.5, 0.5}), 1e-8);
  CHECK(s.mu[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.sigma[0] == doctest::Approx(1.0).epsilon(1e-12));

  PooledStats one =
      AttentiveStats(tape, Tensor::FromData({1, 2, 3}, {1, 2, 3, 4, 5, 6}),
                     Tensor::FromData({1, 3}, {0.0, 1.0, 0.0}), 1e-8);
  CHECK(one.mu[0] == 2.0);
  CHECK(one.mu[1] == 5.0);
  CHECK(one.sigma[0] == doctest::Approx(1e-4));
  CHECK(one.concat.shape() == Shape{1, 4});
}

TEST_CASE("attention is permutation invariant and sigma respects the floor") {
  std::mt19937_64 rng(5);
  AttentionParams p(6, 3, rng);
  const std::size_t nf = 6, t = 9;
  for (int trial = 0; trial < 10; ++trial) {
    Tensor h = RandomNormal({1, nf, t}, rng, false);
    std::vector<std::size_t> perm(t);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> hp(nf * t);
    for (std::size_t c = 0; c < nf; ++c)
      for (std::size_t i = 0; i < t; ++i) hp[c * t + i] = h[c * t + perm[i]];
    Tensor hperm = Tensor::FromData({1, nf, t}, hp);
    Tape tape;
    Tensor a = AttentionWeights(tape, h, p);
    Tensor ap = AttentionWeights(tape, hperm, p);
    double sum = 0;
    for (std::size_t i = 0; i < t; ++i) {
      CHECK(ap[i] == doctest::Approx(a[perm[i]]).epsilon(1e-12));
      CHECK(a[i] > 0);
      sum += a[i];
    }
    CHECK(std::fabs(sum - 1.0) < 1e-12);
    PooledStats s = AttentiveStats(tape, h, a, 1e-8);
    PooledStats sp = AttentiveStats(tape, hperm, ap, 1e-8);
    for (std::size_t c = 0; c < nf; ++c) {
      CHECK(std::fabs(s.mu[c] - sp.mu[c]) < 1e-10);
      CHECK(std::fabs(s.sigma[c] - sp.sigma[c]) < 1e-10);
    }
    // Constant rows have zero variance.
    Tensor flat =
        Tensor::FromData({1, nf, t}, std::vector<double>(nf * t, 0.7));
    PooledStats sf = AttentiveStats(tape, flat, a, 1e-6);
    for (std::size_t c = 0; c < nf; ++c)
      CHECK(sf.sigma[c] >= std::sqrt(1e-6) - 1e-18);
  }
}

TEST_CASE("am-softmax examples and reductions") {
  const double c0 = 0.9, c1 = 0.1;
  Tensor f = Tensor::FromData({1, 2}, {1.0, 0.0});
  Tensor w = Tensor::FromData(
      {2, 2}, {c0, c1, std::sqrt(1 - c0 * c0), std::sqrt(1 - c1 * c1)});
  const int label = 0;
  Tape tape;
  CHECK(AmSoftmaxLoss(tape, f, std::span(&label, 1), w, 0.6, 30.0).item() ==
        doctest::Approx(std::log1p(std::exp(-6.0))).epsilon(1e-12));

  std::mt19937_64 rng(9);
  Tensor w1 = RandomNormal({5, 1}, rng);
  Tensor f1 = RandomNormal({4, 5}, rng);
  const std::vector<int> zeros(4, 0);
  CHECK(AmSoftmaxLoss(tape, f1, zeros, w1, 0.6, 30.0).item() == 0.0);

  // m = 0, s = 1 is cross-entropy over plain cosines.
  Tensor fr = RandomNormal({6, 5}, rng), wr = RandomNormal({5, 4}, rng);
  const std::vector<int> y{0, 3, 2, 1, 3, 0};
  double want = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    double z = 0;
    for (std::size_t j = 0; j < 4; ++j) z += std::exp(Cosine(fr, i, wr, j));
    want += std::log(z) - Cosine(fr, i, wr, std::size_t(y[i]));
  }
  want /= 6;
  CHECK(std::fabs(AmSoftmaxLoss(tape, fr, y, wr, 0.0, 1.0).item() - want) <
        1e-12);
}

TEST_CASE("am-softmax is scale invariant and the margin keeps the argmax") {
  std::mt19937_64 rng(10);
  Tensor f = RandomNormal({5, 6}, rng, false), w = RandomNormal({6, 4}, rng);
  const std::vector<int> y{1, 0, 3, 2, 2};
  Tape tape;
  const double base = AmSoftmaxLoss(tape, f, y, w).item();
  for (double c : {0.01, 3.0, 1e4}) {
    std::vector<double> v(f.data().begin(), f.data().end());
    for (std::size_t k = 0; k < 6; ++k) v[6 + k] *= c;  // one row only
    Tensor g = Tensor::FromData(f.shape(), v);
    CHECK(std::fabs(AmSoftmaxLoss(tape, g, y, w).item() - base) < 1e-10);
  }
  Tensor cos = CosineLogits(tape, f, w);
  double previous = -1;
  for (double m : {0.0, 0.2, 0.6}) {
    const double loss = AmSoftmaxLoss(tape, f, y, w, m, 30.0).item();
    CHECK(loss > previous);
    previous = loss;
    Tensor again = CosineLogits(tape, f, w);
    for (std::size_t i = 0; i < 5; ++i) {
      auto row = [&](const Tensor& t) {
        const double* p = t.data().data() + i * 4;
        return std::max_element(p, p + 4) - p;
      };
      CHECK(row(again) == row(cos));
    }
  }
  Tensor zero = Tensor::FromData({1, 6}, std::vector<double>(6, 0.0));
  const int l = 0;
  CHECK_THROWS_AS(AmSoftmaxLoss(tape, zero, std::span(&l, 1), w), NumericError);
}

TEST_CASE("bce examples") {
  Tape tape;
  const std::vector<int> d{0, 1, 1, 0};
  Tensor half = Tensor::FromData({4}, std::vector<double>(4, 0.0));
  CHECK(ops::BceWithLogits(tape, half, d).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  Tensor sure = Tensor::FromData({4}, {-30, 30, 30, -30});
  CHECK(ops::BceWithLogits(tape, sure, d).item() < 1e-12);
  const int one = 1;
  Tensor z = Tensor::FromData({1}, {std::log(9.0)});
  CHECK(ops::BceWithLogits(tape, z, std::span(&one, 1)).item() ==
        doctest::Approx(-std::log(0.9)).epsilon(1e-12));
}

TEST_CASE("gradient reversal contract") {
  std::mt19937_64 rng(3);
  Tensor x = RandomNormal({4, 3}, rng);
  Tensor g = RandomNormal({4, 3}, rng, false);
  for (double lambda : {0.0, 3.0}) {
    x.zero_grad();
    Tape tape;
    Tensor y = ops::GradReverse(tape, x, lambda);
    for (std::size_t i = 0; i < 12; ++i) CHECK(y[i] == x[i]);
    tape.Backward(ops::Sum(tape, ops::Mul(tape, y, g)));
    for (std::size_t i = 0; i < 12; ++i) CHECK(x.grad()[i] == -lambda * g[i]);
  }
}

TEST_CASE("discriminator output range and zero head") {
  DanseModel m(TinyModelConfig(), 4);
  std::mt19937_64 rng(4);
  Tensor f = RandomNormal({6, 8}, rng, false, 5.0);
  Tape tape;
  Tensor p = m.discriminator().Discriminate(tape, f, 3.0, Mode::kTrain);
  CHECK(p.shape() == Shape{6});
  for (std::size_t i = 0; i < 6; ++i) CHECK((p[i] > 0 && p[i] < 1));
  for (double& v : m.discriminator().output().weight.mutable_data()) v = 0;
  for (double& v : m.discriminator().output().bias.mutable_data()) v = 0;
  Tensor q = m.discriminator().Discriminate(tape, f, 3.0, Mode::kTrain);
  for (std::size_t i = 0; i < 6; ++i) CHECK(q[i] == 0.5);
}

TEST_CASE("end-to-end gradient check on the tiny configuration") {
  DanseModel m(TinyModelConfig(), 11);
  std::mt19937_64 rng(11);
  Tensor x = RandomNormal({4, 4, 40}, rng, false);
  const std::vector<int> y{0, 1, 2, 1};
  std::vector<Tensor> params = testing::Tensors(m.ThetaF());
  for (const Tensor& t : testing::Tensors(m.ThetaY())) params.push_back(t);
  GradCheckResult r = GradCheckDetailed(
      [&](Tape& t) {
        Tensor emb = m.extractor().Forward(t, x, Mode::kTrain);
        return m.classifier().Loss(t, emb, y, Mode::kTrain, 0.6, 30.0);
      },
      params);
  INFO("worst param " << r.worst_param << " index " << r.worst_index);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("extractor gradient under the full objective decomposes") {
  DanseModel m(TinyModelConfig(), 12);
  std::mt19937_64 rng(12);
  Tensor x = RandomNormal({6, 4, 40}, rng, false);
  const std::vector<int> y{0, 1, 2};
  const std::vector<int> d{0, 0, 0, 1, 1, 1};
  const double lambda = 3.0;
  const ParamSet theta_f = m.ThetaF();

  ZeroGrad(theta_f);
  {
    Tape t;
    Tensor emb = m.extractor().Forward(t, x, Mode::kTrain);
    t.Backward(m.classifier().Loss(t, ops::SliceRows(t, emb, 0, 3), y,
                                   Mode::kTrain, 0.6, 30.0));
  }
  const auto gy = Grads(theta_f);

  ZeroGrad(theta_f);
  {
    Tape t;
    Tensor emb = m.extractor().Forward(t, x, Mode::kTrain);
    t.Backward(ops::BceWithLogits(
        t, m.discriminator().Head(t, emb, Mode::kTrain), d));
  }
  const auto gd = Grads(theta_f);

  ZeroGrad(theta_f);
  {
    Tape t;
    Tensor emb = m.extractor().Forward(t, x, Mode::kTrain);
    Tensor ly = m.classifier().Loss(t, ops::SliceRows(t, emb, 0, 3), y,
                                    Mode::kTrain, 0.6, 30.0);
    Tensor ld = ops::BceWithLogits(
        t, m.discriminator().Logits(t, emb, lambda, Mode::kTrain), d);
    t.Backward(ops::Add(t, ly, ld));
  }
  const auto total = Grads(theta_f);

  double worst = 0, norm_gd = 0;
  for (std::size_t p = 0; p < total.size(); ++p)
    for (std::size_t i = 0; i < total[p].size(); ++i) {
      worst = std::max(worst, std::fabs(total[p][i] -
                                        (gy[p][i] - lambda * gd[p][i])));
      norm_gd += gd[p][i] * gd[p][i];
    }
  CHECK(norm_gd > 0);
  CHECK(worst < 1e-10);
}

TEST_CASE("embeddings: size, determinism and time order") {
  DanseModel m(TinyModelConfig(), 13);
  std::mt19937_64 rng(13);
  Tensor rec = RandomNormal({4, 64}, rng, false);
  CHECK_THROWS_AS(m.EmbedRecording(rec), StateError);
  {
    Tape t;
    m.extractor().Forward(t, RandomNormal({4, 4, 64}, rng, false),
                          Mode::kTrain);
  }
  const auto a = m.EmbedRecording(rec);
  const auto b = m.EmbedRecording(rec);
  CHECK(a.size() == 8);
  CHECK(a == b);
  std::vector<double> rev(4 * 64);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t t = 0; t < 64; ++t) rev[c * 64 + t] = rec[c * 64 + 63 - t];
  CHECK(m.EmbedRecording(Tensor::FromData({4, 64}, rev)) != a);

  ModelConfig full;
  full.extractor.channel_widths = {2, 2, 2, 2};
  full.extractor.fc_hidden_dim = 4;
  full.extractor.attention_dim = 2;
  full.extractor.feature_dim = 3;
  DanseModel big(full, 1);
  Tape t;
  Tensor e = big.extractor().Forward(t, RandomNormal({2, 3, 40}, rng, false),
                                     Mode::kTrain);
  CHECK(e.shape() == Shape{2, 64});
}

TEST_CASE("checkpoint round trip is bit exact") {
  DanseModel m(TinyModelConfig(), 14);
  std::mt19937_64 rng(14);
  {
    Tape t;
    m.extractor().Forward(t, RandomNormal({3, 4, 40}, rng, false),
                          Mode::kTrain);
  }
  const std::string path = testing::TempDir("model_roundtrip.ckpt");
  std::filesystem::create_directories(DANSE_TEST_TMPDIR);
  SaveModel(path, m);
  const auto state = ReadCheckpoint(path);
  const auto want = m.State();
  REQUIRE(state.size() == want.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    CHECK(state[i].name == want[i].name);
    CHECK(state[i].tensor.shape() == want[i].tensor.shape());
    CHECK(std::equal(state[i].tensor.data().begin(),
                     state[i].tensor.data().end(),
                     want[i].tensor.data().begin()));
  }
  DanseModel other(TinyModelConfig(), 99);
  LoadModel(path, other, {"f."});
  Tensor rec = RandomNormal({4, 48}, rng, false);
  CHECK(other.EmbedRecording(rec) == m.EmbedRecording(rec));
  CHECK(other.ThetaY()[0].tensor.data()[0] !=
        m.ThetaY()[0].tensor.data()[0]);
}
