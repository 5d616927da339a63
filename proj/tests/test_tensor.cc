// tests/test_tensor.cc

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

#include <cmath>
#include <random>

#include "danse/error.h"
#include "danse/grad_check.h"
#include "danse/ops.h"
#include "doctest.h"
#include "test_util.h"

using namespace danse;
using danse::testing::RandomNormal;
using danse::testing::RandomUniform;

namespace {

constexpr int kSeeds = 20;
constexpr double kTol = 1e-4;

void CheckAcrossSeeds(const std::function<double(std::mt19937_64&)>& body) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const double err = body(rng);
    INFO("seed " << seed);
    CHECK(err < kTol);
  }
}

}  // namespace

TEST_CASE("tape records only when an input requires grad") {
  Tape tape;
  Tensor a = Tensor::FromData({2}, {1, 2});
  Tensor b = Tensor::FromData({2}, {3, 4});
  ops::Add(tape, a, b);
  CHECK(tape.size() == 0);
  b.set_requires_grad(true);
  Tensor c = ops::Add(tape, a, b);
  CHECK(tape.size() == 1);
  CHECK(c.requires_grad());
  tape.set_enabled(false);
  ops::Add(tape, a, b);
  CHECK(tape.size() == 1);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Tensor a = Tensor::FromData({2}, {1, 2}, true);
  Tensor y = ops::Scale(tape, a, 2.0);
  CHECK_THROWS_AS(tape.Backward(y), ConfigError);
}

TEST_CASE("fan-out accumulates gradients exactly") {
  Tape tape;
  Tensor x = Tensor::FromData({1}, {0.75}, true);
  // y = x*x + 3x + x -> dy/dx = 2x + 4
  Tensor y = ops::Add(tape, ops::Mul(tape, x, x),
                      ops::Add(tape, ops::Scale(tape, x, 3.0), x));
  tape.Backward(ops::Sum(tape, y));
  CHECK(x.grad()[0] == 2 * 0.75 + 4.0);
}

TEST_CASE("backward replays in reverse order over a chain") {
  Tape tape;
  Tensor x = Tensor::FromData({1}, {0.5}, true);
  Tensor h = ops::Tanh(tape, x);
  Tensor y = ops::Exp(tape, h);
  tape.Backward(ops::Sum(tape, y));
  const double t = std::tanh(0.5);
  CHECK(x.grad()[0] ==
        doctest::Approx(std::exp(t) * (1 - t * t)).epsilon(1e-14));
}

TEST_CASE("grad_check: elementwise arithmetic") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor a = RandomNormal({3, 4}, rng), b = RandomNormal({3, 4}, rng);
    return GradCheck(
        [&](Tape& t) {
          Tensor s = ops::Sub(t, ops::Add(t, a, b), ops::Scale(t, b, 0.3));
          return ops::Sum(t, ops::Mul(t, s, a));
        },
        {a, b});
  });
}

TEST_CASE("grad_check: bias, matmul and linear") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({5, 3}, rng), w = RandomNormal({3, 4}, rng),
           b = RandomNormal({4}, rng), w2 = RandomNormal({4, 2}, rng),
           c = RandomNormal({2}, rng);
    return GradCheck(
        [&](Tape& t) {
          Tensor h = ops::Linear(t, x, w, b);
          Tensor y = ops::AddBias(t, ops::MatMul(t, h, w2), c);
          return ops::Mean(t, ops::Mul(t, y, y));
        },
        {x, w, b, w2, c});
  });
}

TEST_CASE("grad_check: unary nonlinearities") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({2, 5}, rng);
    Tensor p = RandomUniform({2, 5}, rng, 0.2, 3.0);
    return GradCheck(
        [&](Tape& t) {
          Tensor u = ops::Add(t, ops::Tanh(t, x), ops::Sigmoid(t, x));
          u = ops::Add(t, u, ops::Elu(t, x));
          u = ops::Add(t, u, ops::Exp(t, ops::Scale(t, x, 0.5)));
          u = ops::Add(t, u, ops::Log(t, p));
          u = ops::Add(t, u, ops::Sqrt(t, p));
          return ops::Sum(t, ops::Mul(t, u, u));
        },
        {x, p});
  });
}

TEST_CASE("grad_check: clamp_min away from the kink") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({12}, rng);
    for (double& v : x.mutable_data())
      if (std::fabs(v - 0.1) < 1e-3) v += 0.01;
    return GradCheck(
        [&](Tape& t) {
          return ops::Sum(t, ops::Mul(t, ops::ClampMin(t, x, 0.1), x));
        },
        {x});
  });
}

TEST_CASE("grad_check: softmax, log-softmax and pick") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({4, 5}, rng);
    Tensor w = RandomNormal({4, 5}, rng, false);
    const std::vector<int> idx{0, 3, 4, 1};
    return GradCheck(
        [&](Tape& t) {
          Tensor s = ops::Mul(t, ops::Softmax(t, x), w);
          Tensor p = ops::Pick(t, ops::LogSoftmax(t, x), idx);
          return ops::Add(t, ops::Sum(t, s), ops::Sum(t, p));
        },
        {x});
  });
}

TEST_CASE("grad_check: l2 normalize along both axes") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({3, 4}, rng);
    Tensor w = RandomNormal({3, 4}, rng, false);
    return GradCheck(
        [&](Tape& t) {
          Tensor a = ops::L2Normalize(t, x, 0);
          Tensor b = ops::L2Normalize(t, x, 1);
          return ops::Sum(t, ops::Mul(t, ops::Add(t, a, b), w));
        },
        {x});
  });
}

TEST_CASE("grad_check: conv1d with stride and padding") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({2, 3, 11}, rng), k = RandomNormal({4, 3, 3}, rng),
           b = RandomNormal({4}, rng), k1 = RandomNormal({2, 4, 1}, rng),
           b1 = RandomNormal({2}, rng);
    return GradCheck(
        [&](Tape& t) {
          Tensor y = ops::Conv1d(t, x, k, b, 2, 1);
          Tensor z = ops::Conv1d(t, y, k1, b1, 1, 0);
          return ops::Mean(t, ops::Mul(t, z, z));
        },
        {x, k, b, k1, b1});
  });
}

TEST_CASE("grad_check: batch norm in train mode (3-d and 2-d)") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({3, 2, 5}, rng),
           g = RandomUniform({2}, rng, 0.5, 2), b = RandomNormal({2}, rng),
           y = RandomNormal({6, 3}, rng), g2 = RandomUniform({3}, rng, 0.5, 2),
           b2 = RandomNormal({3}, rng);
    Tensor w = RandomNormal({3, 2, 5}, rng, false);
    Tensor w2 = RandomNormal({6, 3}, rng, false);
    return GradCheck(
        [&](Tape& t) {
          ops::BatchNormState s1, s2;
          Tensor u = ops::BatchNorm1d(t, x, g, b, s1, ops::Mode::kTrain);
          Tensor v = ops::BatchNorm1d(t, y, g2, b2, s2, ops::Mode::kTrain);
          return ops::Add(t, ops::Sum(t, ops::Mul(t, ops::Tanh(t, u), w)),
                          ops::Sum(t, ops::Mul(t, ops::Tanh(t, v), w2)));
        },
        {x, g, b, y, g2, b2});
  });
}

TEST_CASE("grad_check: layout ops") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({2, 3, 4}, rng), a = RandomNormal({4, 2}, rng),
           b = RandomNormal({4, 3}, rng);
    Tensor w = RandomNormal({8, 3}, rng, false);
    Tensor w2 = RandomNormal({2, 5}, rng, false);
    return GradCheck(
        [&](Tape& t) {
          Tensor cl = ops::ChannelsLast(t, x);  // [8 x 3]
          Tensor r = ops::Reshape(t, ops::Transpose(t, cl), {24});
          Tensor cat = ops::ConcatCols(t, a, b);  // [4 x 5]
          Tensor sl = ops::SliceRows(t, cat, 1, 3);
          return ops::Add(
              t, ops::Add(t, ops::Sum(t, ops::Mul(t, cl, w)),
                          ops::Sum(t, ops::Mul(t, sl, w2))),
              ops::Sum(t, ops::Mul(t, r, r)));
        },
        {x, a, b});
  });
}

TEST_CASE("grad_check: weighted time sum") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({2, 3, 4}, rng), a = RandomNormal({2, 4}, rng);
    return GradCheck(
        [&](Tape& t) {
          Tensor s = ops::WeightedTimeSum(t, x, ops::Softmax(t, a));
          return ops::Sum(t, ops::Mul(t, s, s));
        },
        {x, a});
  });
}

TEST_CASE("grad_check: losses") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor z = RandomNormal({5, 3}, rng, true, 2.0);
    Tensor l = RandomNormal({6}, rng, true, 3.0);
    const std::vector<int> y{0, 2, 1, 1, 0}, d{0, 1, 1, 0, 1, 0};
    return GradCheck(
        [&](Tape& t) {
          return ops::Add(t, ops::SoftmaxCrossEntropy(t, z, y),
                          ops::BceWithLogits(t, l, d));
        },
        {z, l});
  });
}

TEST_CASE("grad_check: gradient reversal") {
  CheckAcrossSeeds([](std::mt19937_64& rng) {
    Tensor x = RandomNormal({3, 2}, rng);
    // The reversed gradient is the gradient of -lambda * f.
    Tensor probe = RandomNormal({3, 2}, rng, false);
    Tape tape;
    Tensor y = ops::GradReverse(tape, x, 2.5);
    tape.Backward(ops::Sum(tape, ops::Mul(tape, ops::Tanh(tape, y), probe)));
    const auto analytic = std::vector<double>(x.grad().begin(), x.grad().end());
    double worst = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      const double th = std::tanh(x[i]);
      const double want = -2.5 * probe[i] * (1 - th * th);
      worst = std::max(worst, std::fabs(analytic[i] - want));
    }
    return worst;
  });
}

TEST_CASE("grad_check reports the worst parameter") {
  Tensor a = Tensor::FromData({2}, {0.3, -0.2}, true);
  GradCheckResult r = GradCheckDetailed(
      [&](Tape& t) { return ops::Sum(t, ops::Mul(t, a, a)); }, {a});
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("clone and detach produce independent storage") {
  Tensor a = Tensor::FromData({2}, {1, 2}, true);
  Tensor c = a.Clone();
  Tensor d = a.Detach();
  CHECK_FALSE(c.same_storage(a));
  CHECK_FALSE(d.requires_grad());
  c.mutable_data()[0] = 7;
  CHECK(a[0] == 1);
}
