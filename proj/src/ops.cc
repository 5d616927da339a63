// src/ops.cc

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

#include "danse/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "danse/error.h"
#include "danse/kernels.h"

namespace danse::ops {

namespace {

void RequireSameShape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ConfigError(std::string(op) + ": shape mismatch " +
                      ShapeString(a.shape()) + " vs " +
                      ShapeString(b.shape()));
}

void RequireRank(const char* op, const Tensor& x, std::size_t rank) {
  if (x.rank() != rank)
    throw ConfigError(std::string(op) + ": expected rank " +
                      std::to_string(rank) + ", got " +
                      ShapeString(x.shape()));
}

// Elementwise op whose derivative is expressed through input and output.
template <typename F, typename DF>
Tensor Unary(Tape& tape, const char* name, const Tensor& x, F f, DF df) {
  std::vector<double> y(x.numel());
  const auto xs = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xs[i]);
  Tensor out = Tensor::FromData(x.shape(), std::move(y));
  if (tape.ShouldRecord({&x})) {
    tape.Record(name, {x}, out, [x, out, df]() mutable {
      if (!x.requires_grad()) return;
      auto gx = x.grad_buffer();
      const auto g = out.grad();
      const auto xv = x.data();
      const auto yv = out.data();
      for (std::size_t i = 0; i < gx.size(); ++i)
        gx[i] += g[i] * df(xv[i], yv[i]);
    });
  }
  return out;
}

double StableSigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Tensor Add(Tape& tape, const Tensor& a, const Tensor& b) {
  RequireSameShape("add", a, b);
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  Tensor out = Tensor::FromData(a.shape(), std::move(y));
  if (tape.ShouldRecord({&a, &b})) {
    tape.Record("add", {a, b}, out, [a, b, out]() mutable {
      const auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor Sub(Tape& tape, const Tensor& a, const Tensor& b) {
  RequireSameShape("sub", a, b);
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
  Tensor out = Tensor::FromData(a.shape(), std::move(y));
  if (tape.ShouldRecord({&a, &b})) {
    tape.Record("sub", {a, b}, out, [a, b, out]() mutable {
      const auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor Mul(Tape& tape, const Tensor& a, const Tensor& b) {
  RequireSameShape("mul", a, b);
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  Tensor out = Tensor::FromData(a.shape(), std::move(y));
  if (tape.ShouldRecord({&a, &b})) {
    tape.Record("mul", {a, b}, out, [a, b, out]() mutable {
      const auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      }
    });
  }
  return out;
}

Tensor Scale(Tape& tape, const Tensor& x, double factor) {
  return Unary(
      tape, "scale", x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Tensor AddBias(Tape& tape, const Tensor& x, const Tensor& bias) {
  if (x.rank() < 2 || bias.rank() != 1 || bias.dim(0) != x.dim(1))
    throw ConfigError("add_bias: cannot broadcast " +
                      ShapeString(bias.shape()) + " over axis 1 of " +
                      ShapeString(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1), inner = x.numel() / (n * c);
  std::vector<double> y(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      double* row = y.data() + (i * c + j) * inner;
      for (std::size_t t = 0; t < inner; ++t) row[t] += bias[j];
    }
  Tensor out = Tensor::FromData(x.shape(), std::move(y));
  if (tape.ShouldRecord({&x, &bias})) {
    tape.Record("add_bias", {x, bias}, out,
                [x, bias, out, n, c, inner]() mutable {
                  const auto g = out.grad();
                  if (x.requires_grad()) {
                    auto gx = x.grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                  }
                  if (bias.requires_grad()) {
                    auto gb = bias.grad_buffer();
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t j = 0; j < c; ++j) {
                        const double* row = g.data() + (i * c + j) * inner;
                        double acc = 0.0;
                        for (std::size_t t = 0; t < inner; ++t) acc += row[t];
                        gb[j] += acc;
                      }
                  }
                });
  }
  return out;
}

Tensor MatMul(Tape& tape, const Tensor& a, const Tensor& b) {
  RequireRank("matmul", a, 2);
  RequireRank("matmul", b, 2);
  if (a.dim(1) != b.dim(0))
    throw ConfigError("matmul: inner dimensions differ, " +
                      ShapeString(a.shape()) + " x " + ShapeString(b.shape()));
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor out = Tensor::Zeros({n, m});
  kernels::Gemm(false, false, n, m, k, a.data(), b.data(), out.mutable_data(),
                false);
  if (tape.ShouldRecord({&a, &b})) {
    tape.Record("matmul", {a, b}, out, [a, b, out, n, k, m]() mutable {
      const auto g = out.grad();
      if (a.requires_grad())
        kernels::Gemm(false, true, n, k, m, g, b.data(), a.grad_buffer(),
                      true);
      if (b.requires_grad())
        kernels::Gemm(true, false, k, m, n, a.data(), g, b.grad_buffer(),
                      true);
    });
  }
  return out;
}

Tensor Linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  return AddBias(tape, MatMul(tape, x, w), b);
}

Tensor Sum(Tape& tape, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::Scalar(acc);
  if (tape.ShouldRecord({&x})) {
    tape.Record("sum", {x}, out, [x, out]() mutable {
      const double g = out.grad()[0];
      for (double& v : x.grad_buffer()) v += g;
    });
  }
  return out;
}

Tensor Mean(Tape& tape, const Tensor& x) {
  const double n = static_cast<double>(x.numel());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::Scalar(acc / n);
  if (tape.ShouldRecord({&x})) {
    tape.Record("mean", {x}, out, [x, out, n]() mutable {
      const double g = out.grad()[0] / n;
      for (double& v : x.grad_buffer()) v += g;
    });
  }
  return out;
}

Tensor Exp(Tape& tape, const Tensor& x) {
  return Unary(
      tape, "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor Log(Tape& tape, const Tensor& x) {
  return Unary(
      tape, "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor Sqrt(Tape& tape, const Tensor& x) {
  return Unary(
      tape, "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor Tanh(Tape& tape, const Tensor& x) {
  return Unary(
      tape, "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor Sigmoid(Tape& tape, const Tensor& x) {
  return Unary(tape, "sigmoid", x, StableSigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

Tensor Elu(Tape& tape, const Tensor& x, double alpha) {
  return Unary(
      tape, "elu", x,
      [alpha](double v) { return v > 0 ? v : alpha * std::expm1(v); },
      [alpha](double v, double y) { return v > 0 ? 1.0 : y + alpha; });
}

Tensor ClampMin(Tape& tape, const Tensor& x, double floor) {
  return Unary(
      tape, "clamp_min", x, [floor](double v) { return std::max(v, floor); },
      [floor](double v, double) { return v > floor ? 1.0 : 0.0; });
}

Tensor L2Normalize(Tape& tape, const Tensor& x, int axis, double min_norm) {
  RequireRank("l2_normalize", x, 2);
  if (axis != 0 && axis != 1)
    throw ConfigError("l2_normalize: axis must be 0 or 1");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  // Vectors are rows (axis 1) or columns (axis 0); index(v, e) addresses
  // element e of vector v.
  const std::size_t count = axis == 1 ? rows : cols;
  const std::size_t len = axis == 1 ? cols : rows;
  auto index = [=](std::size_t v, std::size_t e) {
    return axis == 1 ? v * cols + e : e * cols + v;
  };
  std::vector<double> norms(count);
  std::vector<double> y(x.numel());
  for (std::size_t v = 0; v < count; ++v) {
    double ss = 0.0;
    for (std::size_t e = 0; e < len; ++e) ss += x[index(v, e)] * x[index(v, e)];
    norms[v] = std::sqrt(ss);
    if (!(norms[v] >= min_norm))
      throw NumericError("l2_normalize: degenerate norm " +
                         std::to_string(norms[v]) + " for " +
                         (axis == 1 ? "row " : "column ") + std::to_string(v));
    for (std::size_t e = 0; e < len; ++e)
      y[index(v, e)] = x[index(v, e)] / norms[v];
  }
  Tensor out = Tensor::FromData(x.shape(), std::move(y));
  if (tape.ShouldRecord({&x})) {
    tape.Record("l2_normalize", {x}, out,
                [x, out, norms, count, len, index]() mutable {
                  const auto g = out.grad();
                  auto gx = x.grad_buffer();
                  for (std::size_t v = 0; v < count; ++v) {
                    double dot = 0.0;
                    for (std::size_t e = 0; e < len; ++e)
                      dot += out[index(v, e)] * g[index(v, e)];
                    for (std::size_t e = 0; e < len; ++e) {
                      const std::size_t i = index(v, e);
                      gx[i] += (g[i] - out[i] * dot) / norms[v];
                    }
                  }
                });
  }
  return out;
}

Tensor Softmax(Tape& tape, const Tensor& x) {
  const std::size_t n = x.shape().back(), rows = x.numel() / n;
  std::vector<double> y(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * n;
    double* o = y.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  Tensor out = Tensor::FromData(x.shape(), std::move(y));
  if (tape.ShouldRecord({&x})) {
    tape.Record("softmax", {x}, out, [x, out, n, rows]() mutable {
      const auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          dot += g[r * n + j] * out[r * n + j];
        for (std::size_t j = 0; j < n; ++j)
          gx[r * n + j] += out[r * n + j] * (g[r * n + j] - dot);
      }
    });
  }
  return out;
}

Tensor LogSoftmax(Tape& tape, const Tensor& x) {
  const std::size_t n = x.shape().back(), rows = x.numel() / n;
  std::vector<double> y(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data().data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(in[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] = in[j] - lse;
  }
  Tensor out = Tensor::FromData(x.shape(), std::move(y));
  if (tape.ShouldRecord({&x})) {
    tape.Record("log_softmax", {x}, out, [x, out, n, rows]() mutable {
      const auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        double gs = 0.0;
        for (std::size_t j = 0; j < n; ++j) gs += g[r * n + j];
        for (std::size_t j = 0; j < n; ++j)
          gx[r * n + j] += g[r * n + j] - std::exp(out[r * n + j]) * gs;
      }
    });
  }
  return out;
}

Tensor Pick(Tape& tape, const Tensor& x, std::span<const int> index) {
  RequireRank("pick", x, 2);
  const std::size_t n = x.dim(0), m = x.dim(1);
  if (index.size() != n)
    throw ConfigError("pick: " + std::to_string(index.size()) +
                      " indices for " + std::to_string(n) + " rows");
  std::vector<int> idx(index.begin(), index.end());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= m)
      throw ConfigError("pick: index " + std::to_string(idx[i]) +
                        " out of range [0, " + std::to_string(m) + ")");
    y[i] = x[i * m + idx[i]];
  }
  Tensor out = Tensor::FromData({n}, std::move(y));
  if (tape.ShouldRecord({&x})) {
    tape.Record("pick", {x}, out, [x, out, idx, m]() mutable {
      const auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i) gx[i * m + idx[i]] += g[i];
    });
  }
  return out;
}

Tensor Conv1d(Tape& tape, const Tensor& input, const Tensor& kernels,
              const Tensor& bias, std::size_t stride, std::size_t padding) {
  if (input.rank() != 2 && input.rank() != 3)
    throw ConfigError("conv1d: input must be [C_in x T] or [N x C_in x T], "
                      "got " + ShapeString(input.shape()));
  RequireRank("conv1d", kernels, 3);
  const bool batched = input.rank() == 3;
  kernels::Conv1dGeometry g;
  g.batch = batched ? input.dim(0) : 1;
  g.in_channels = input.dim(batched ? 1 : 0);
  g.in_length = input.dim(batched ? 2 : 1);
  g.out_channels = kernels.dim(0);
  g.kernel = kernels.dim(2);
  g.stride = stride;
  g.padding = padding;
  if (kernels.dim(1) != g.in_channels)
    throw ConfigError("conv1d: input " + ShapeString(input.shape()) +
                      " has " + std::to_string(g.in_channels) +
                      " channels but kernels " +
                      ShapeString(kernels.shape()) + " expect " +
                      std::to_string(kernels.dim(1)));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.out_channels))
    throw ConfigError("conv1d: bias " + ShapeString(bias.shape()) +
                      " does not match kernels " +
                      ShapeString(kernels.shape()));
  if (stride == 0) throw ConfigError("conv1d: stride must be positive");
  if (g.kernel > g.in_length + 2 * padding)
    throw ConfigError("conv1d: kernel width " + std::to_string(g.kernel) +
                      " exceeds padded length " +
                      std::to_string(g.in_length + 2 * padding));
  const std::size_t t_out = g.out_length();
  Shape out_shape = batched ? Shape{g.batch, g.out_channels, t_out}
                            : Shape{g.out_channels, t_out};
  Tensor out = Tensor::Zeros(out_shape);
  kernels::Conv1dForward(
      g, input.data(), kernels.data(),
      bias.defined() ? bias.data() : std::span<const double>(),
      out.mutable_data());
  if (tape.ShouldRecord({&input, &kernels, &bias})) {
    tape.Record("conv1d", {input, kernels, bias}, out,
                [input, kernels, bias, out, g]() mutable {
                  const auto go = out.grad();
                  if (input.requires_grad())
                    kernels::Conv1dBackwardInput(g, go, kernels.data(),
                                                 input.grad_buffer());
                  const bool want_b = bias.defined() && bias.requires_grad();
                  if (kernels.requires_grad() || want_b) {
                    // Weight gradient is computed even when only the bias
                    // needs it; the scratch buffer absorbs it.
                    std::vector<double> scratch;
                    std::span<double> gw;
                    if (kernels.requires_grad()) {
                      gw = kernels.grad_buffer();
                    } else {
                      scratch.assign(kernels.numel(), 0.0);
                      gw = scratch;
                    }
                    kernels::Conv1dBackwardWeight(
                        g, go, input.data(), gw,
                        want_b ? bias.grad_buffer() : std::span<double>());
                  }
                });
  }
  return out;
}

Tensor BatchNorm1d(Tape& tape, const Tensor& input, const Tensor& gamma,
                   const Tensor& beta, BatchNormState& state, Mode mode,
                   double eps, double momentum) {
  if (input.rank() != 2 && input.rank() != 3)
    throw ConfigError(
        "batchnorm1d: input must be [N x C] or [N x C x T], got " +
        ShapeString(input.shape()));
  const std::size_t n = input.dim(0), c = input.dim(1);
  const std::size_t t = input.rank() == 3 ? input.dim(2) : 1;
  if (gamma.numel() != c || beta.numel() != c)
    throw ConfigError("batchnorm1d: affine parameters do not match " +
                      std::to_string(c) + " channels");
  const double count = static_cast<double>(n * t);
  std::vector<double> mean(c), inv_std(c);
  if (mode == Mode::kTrain) {
    if (!state.populated || state.running_mean.size() != c) {
      state.running_mean.assign(c, 0.0);
      state.running_var.assign(c, 1.0);
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = input.data().data() + (i * c + ch) * t;
        for (std::size_t k = 0; k < t; ++k) s += row[k];
      }
      const double mu = s / count;
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = input.data().data() + (i * c + ch) * t;
        for (std::size_t k = 0; k < t; ++k) ss += (row[k] - mu) * (row[k] - mu);
      }
      const double var = ss / count;
      mean[ch] = mu;
      inv_std[ch] = 1.0 / std::sqrt(var + eps);
      const double unbiased = count > 1 ? ss / (count - 1) : var;
      state.running_mean[ch] =
          (1 - momentum) * state.running_mean[ch] + momentum * mu;
      state.running_var[ch] =
          (1 - momentum) * state.running_var[ch] + momentum * unbiased;
    }
    state.populated = true;
  } else {
    if (!state.populated || state.running_mean.size() != c)
      throw StateError(
          "batchnorm1d: eval mode requires populated running statistics");
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = state.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + eps);
    }
  }
  std::vector<double> xhat(input.numel()), y(input.numel());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (i * c + ch) * t;
      for (std::size_t k = 0; k < t; ++k) {
        xhat[base + k] = (input[base + k] - mean[ch]) * inv_std[ch];
        y[base + k] = gamma[ch] * xhat[base + k] + beta[ch];
      }
    }
  Tensor out = Tensor::FromData(input.shape(), std::move(y));
  if (tape.ShouldRecord({&input, &gamma, &beta})) {
    const bool train = mode == Mode::kTrain;
    tape.Record(
        "batchnorm1d", {input, gamma, beta}, out,
        [input, gamma, beta, out, xhat = std::move(xhat), inv_std, n, c, t,
         count, train]() mutable {
          const auto g = out.grad();
          std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t base = (i * c + ch) * t;
              for (std::size_t k = 0; k < t; ++k) {
                sum_g[ch] += g[base + k];
                sum_gx[ch] += g[base + k] * xhat[base + k];
              }
            }
          if (gamma.requires_grad()) {
            auto gg = gamma.grad_buffer();
            for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += sum_gx[ch];
          }
          if (beta.requires_grad()) {
            auto gb = beta.grad_buffer();
            for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += sum_g[ch];
          }
          if (!input.requires_grad()) return;
          auto gx = input.grad_buffer();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t base = (i * c + ch) * t;
              const double scale = gamma[ch] * inv_std[ch];
              if (train) {
                const double mg = sum_g[ch] / count, mgx = sum_gx[ch] / count;
                for (std::size_t k = 0; k < t; ++k)
                  gx[base + k] +=
                      scale * (g[base + k] - mg - xhat[base + k] * mgx);
              } else {
                for (std::size_t k = 0; k < t; ++k)
                  gx[base + k] += scale * g[base + k];
              }
            }
        });
  }
  return out;
}

Tensor ChannelsLast(Tape& tape, const Tensor& x) {
  RequireRank("channels_last", x, 3);
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2);
  std::vector<double> y(x.numel());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t k = 0; k < t; ++k)
        y[(i * t + k) * c + ch] = x[(i * c + ch) * t + k];
  Tensor out = Tensor::FromData({n * t, c}, std::move(y));
  if (tape.ShouldRecord({&x})) {
    tape.Record("channels_last", {x}, out, [x, out, n, c, t]() mutable {
      const auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t k = 0; k < t; ++k)
            gx[(i * c + ch) * t + k] += g[(i * t + k) * c + ch];
    });
  }
  return out;
}

Tensor Reshape(Tape& tape, const Tensor& x, const Shape& shape) {
  if (NumElements(shape) != x.numel())
    throw ConfigError("reshape: cannot view " + ShapeString(x.shape()) +
                      " as " + ShapeString(shape));
  Tensor out = Tensor::FromData(
      shape, std::vector<double>(x.data().begin(), x.data().end()));
  if (tape.ShouldRecord({&x})) {
    tape.Record("reshape", {x}, out, [x, out]() mutable {
      const auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor Transpose(Tape& tape, const Tensor& x) {
  RequireRank("transpose", x, 2);
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<double> y(x.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[j * r + i] = x[i * c + j];
  Tensor out = Tensor::FromData({c, r}, std::move(y));
  if (tape.ShouldRecord({&x})) {
    tape.Record("transpose", {x}, out, [x, out, r, c]() mutable {
      const auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    });
  }
  return out;
}

Tensor SliceRows(Tape& tape, const Tensor& x, std::size_t begin,
                 std::size_t end) {
  if (x.rank() < 1 || begin >= end || end > x.dim(0))
    throw ConfigError("slice_rows: invalid range [" + std::to_string(begin) +
                      ", " + std::to_string(end) + ") for " +
                      ShapeString(x.shape()));
  const std::size_t row = x.numel() / x.dim(0);
  Shape shape = x.shape();
  shape[0] = end - begin;
  Tensor out = Tensor::FromData(
      shape, std::vector<double>(x.data().begin() + begin * row,
                                 x.data().begin() + end * row));
  if (tape.ShouldRecord({&x})) {
    tape.Record("slice_rows", {x}, out, [x, out, begin, row]() mutable {
      const auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[begin * row + i] += g[i];
    });
  }
  return out;
}

Tensor ConcatCols(Tape& tape, const Tensor& a, const Tensor& b) {
  RequireRank("concat_cols", a, 2);
  RequireRank("concat_cols", b, 2);
  if (a.dim(0) != b.dim(0))
    throw ConfigError("concat_cols: row counts differ, " +
                      ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  std::vector<double> y(n * (ca + cb));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.data().begin() + i * ca, ca, y.begin() + i * (ca + cb));
    std::copy_n(b.data().begin() + i * cb, cb, y.begin() + i * (ca + cb) + ca);
  }
  Tensor out = Tensor::FromData({n, ca + cb}, std::move(y));
  if (tape.ShouldRecord({&a, &b})) {
    tape.Record("concat_cols", {a, b}, out, [a, b, out, n, ca, cb]() mutable {
      const auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < ca; ++j)
            ga[i * ca + j] += g[i * (ca + cb) + j];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < cb; ++j)
            gb[i * cb + j] += g[i * (ca + cb) + ca + j];
      }
    });
  }
  return out;
}

Tensor WeightedTimeSum(Tape& tape, const Tensor& x, const Tensor& weights) {
  RequireRank("weighted_time_sum", x, 3);
  RequireRank("weighted_time_sum", weights, 2);
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2);
  if (weights.dim(0) != n || weights.dim(1) != t)
    throw ConfigError("weighted_time_sum: weights " +
                      ShapeString(weights.shape()) + " do not match " +
                      ShapeString(x.shape()));
  std::vector<double> y(n * c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* row = x.data().data() + (i * c + ch) * t;
      const double* w = weights.data().data() + i * t;
      double acc = 0.0;
      for (std::size_t k = 0; k < t; ++k) acc += w[k] * row[k];
      y[i * c + ch] = acc;
    }
  Tensor out = Tensor::FromData({n, c}, std::move(y));
  if (tape.ShouldRecord({&x, &weights})) {
    tape.Record("weighted_time_sum", {x, weights}, out,
                [x, weights, out, n, c, t]() mutable {
                  const auto g = out.grad();
                  if (x.requires_grad()) {
                    auto gx = x.grad_buffer();
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t ch = 0; ch < c; ++ch)
                        for (std::size_t k = 0; k < t; ++k)
                          gx[(i * c + ch) * t + k] +=
                              g[i * c + ch] * weights[i * t + k];
                  }
                  if (weights.requires_grad()) {
                    auto gw = weights.grad_buffer();
                    for (std::size_t i = 0; i < n; ++i)
                      for (std::size_t ch = 0; ch < c; ++ch) {
                        const double gi = g[i * c + ch];
                        const double* row = x.data().data() + (i * c + ch) * t;
                        for (std::size_t k = 0; k < t; ++k)
                          gw[i * t + k] += gi * row[k];
                      }
                  }
                });
  }
  return out;
}

Tensor GradReverse(Tape& tape, const Tensor& x, double lambda) {
  if (!(lambda >= 0))
    throw ConfigError("grad_reverse: lambda must be non-negative");
  Tensor out = Tensor::FromData(
      x.shape(), std::vector<double>(x.data().begin(), x.data().end()));
  if (tape.ShouldRecord({&x})) {
    tape.Record("grad_reverse", {x}, out, [x, out, lambda]() mutable {
      const auto g = out.grad();
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += -lambda * g[i];
    });
  }
  return out;
}

Tensor SoftmaxCrossEntropy(Tape& tape, const Tensor& logits,
                           std::span<const int> labels) {
  Tensor picked = Pick(tape, LogSoftmax(tape, logits), labels);
  return Scale(tape, Mean(tape, picked), -1.0);
}

Tensor BceWithLogits(Tape& tape, const Tensor& logits,
                     std::span<const int> labels) {
  const std::size_t n = logits.numel();
  if (labels.size() != n)
    throw ConfigError("bce: " + std::to_string(labels.size()) +
                      " labels for " + std::to_string(n) + " logits");
  std::vector<int> d(labels.begin(), labels.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] != 0 && d[i] != 1)
      throw ConfigError("bce: labels must be 0 or 1");
    const double z = logits[i];
    acc += std::max(z, 0.0) - z * d[i] + std::log1p(std::exp(-std::abs(z)));
  }
  Tensor out = Tensor::Scalar(acc / static_cast<double>(n));
  if (tape.ShouldRecord({&logits})) {
    tape.Record("bce_with_logits", {logits}, out, [logits, out, d]() mutable {
      const double g = out.grad()[0] / static_cast<double>(d.size());
      auto gz = logits.grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i)
        gz[i] += g * (StableSigmoid(logits[i]) - d[i]);
    });
  }
  return out;
}

}  // namespace danse::ops
