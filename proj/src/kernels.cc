// src/kernels.cc

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

#include "danse/kernels.h"

#include <omp.h>

#include <algorithm>
#include <cstdint>

namespace danse::kernels {

namespace {

// Range of output positions t for which t * stride + k - padding lands
// inside [0, in_length).
struct ValidRange {
  std::ptrdiff_t lo, hi;  // half-open
};

ValidRange Valid(const Conv1dGeometry& g, std::size_t k) {
  const auto s = static_cast<std::ptrdiff_t>(g.stride);
  const auto off = static_cast<std::ptrdiff_t>(k) -
                   static_cast<std::ptrdiff_t>(g.padding);
  const auto len = static_cast<std::ptrdiff_t>(g.in_length);
  const auto out_len = static_cast<std::ptrdiff_t>(g.out_length());
  std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
  std::ptrdiff_t hi = (len - 1 - off) >= 0 ? (len - 1 - off) / s + 1 : 0;
  lo = std::min(lo, out_len);
  hi = std::clamp(hi, lo, out_len);
  return {lo, hi};
}

}  // namespace

void Conv1dForward(const Conv1dGeometry& g, std::span<const double> input,
                   std::span<const double> weight,
                   std::span<const double> bias, std::span<double> output) {
  const std::size_t t_out = g.out_length();
  const auto rows = static_cast<std::int64_t>(g.batch * g.out_channels);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t n = r / g.out_channels, co = r % g.out_channels;
    double* out = output.data() + r * t_out;
    const double b = bias.empty() ? 0.0 : bias[co];
    std::fill(out, out + t_out, b);
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      const double* in =
          input.data() + (n * g.in_channels + ci) * g.in_length;
      const double* w = weight.data() + (co * g.in_channels + ci) * g.kernel;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const double wk = w[k];
        const auto [lo, hi] = Valid(g, k);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) -
                                   static_cast<std::ptrdiff_t>(g.padding);
        if (g.stride == 1) {
          for (std::ptrdiff_t t = lo; t < hi; ++t) out[t] += wk * in[t + off];
        } else {
          const auto s = static_cast<std::ptrdiff_t>(g.stride);
          for (std::ptrdiff_t t = lo; t < hi; ++t)
            out[t] += wk * in[t * s + off];
        }
      }
    }
  }
}

void Conv1dBackwardInput(const Conv1dGeometry& g,
                         std::span<const double> grad_output,
                         std::span<const double> weight,
                         std::span<double> grad_input) {
  const std::size_t t_out = g.out_length();
  const auto rows = static_cast<std::int64_t>(g.batch * g.in_channels);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t n = r / g.in_channels, ci = r % g.in_channels;
    double* gin = grad_input.data() + r * g.in_length;
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      const double* gout =
          grad_output.data() + (n * g.out_channels + co) * t_out;
      const double* w = weight.data() + (co * g.in_channels + ci) * g.kernel;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const double wk = w[k];
        const auto [lo, hi] = Valid(g, k);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) -
                                   static_cast<std::ptrdiff_t>(g.padding);
        if (g.stride == 1) {
          for (std::ptrdiff_t t = lo; t < hi; ++t) gin[t + off] += wk * gout[t];
        } else {
          const auto s = static_cast<std::ptrdiff_t>(g.stride);
          for (std::ptrdiff_t t = lo; t < hi; ++t)
            gin[t * s + off] += wk * gout[t];
        }
      }
    }
  }
}

void Conv1dBackwardWeight(const Conv1dGeometry& g,
                          std::span<const double> grad_output,
                          std::span<const double> input,
                          std::span<double> grad_weight,
                          std::span<double> grad_bias) {
  const std::size_t t_out = g.out_length();
  const auto pairs = static_cast<std::int64_t>(g.out_channels * g.in_channels);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < pairs; ++r) {
    const std::size_t co = r / g.in_channels, ci = r % g.in_channels;
    for (std::size_t k = 0; k < g.kernel; ++k) {
      const auto [lo, hi] = Valid(g, k);
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) -
                                 static_cast<std::ptrdiff_t>(g.padding);
      const auto s = static_cast<std::ptrdiff_t>(g.stride);
      // Four interleaved partial sums in a fixed order.
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      for (std::size_t n = 0; n < g.batch; ++n) {
        const double* gout =
            grad_output.data() + (n * g.out_channels + co) * t_out;
        const double* in =
            input.data() + (n * g.in_channels + ci) * g.in_length;
        std::ptrdiff_t t = lo;
        if (s == 1) {
          for (; t + 4 <= hi; t += 4) {
            acc[t & 3] += gout[t] * in[t + off];
            acc[(t + 1) & 3] += gout[t + 1] * in[t + 1 + off];
            acc[(t + 2) & 3] += gout[t + 2] * in[t + 2 + off];
            acc[(t + 3) & 3] += gout[t + 3] * in[t + 3 + off];
          }
        }
        for (; t < hi; ++t) acc[t & 3] += gout[t] * in[t * s + off];
      }
      grad_weight[(co * g.in_channels + ci) * g.kernel + k] +=
          (acc[0] + acc[1]) + (acc[2] + acc[3]);
    }
  }
  if (grad_bias.empty()) return;
#pragma omp parallel for schedule(static)
  for (std::int64_t co = 0; co < static_cast<std::int64_t>(g.out_channels);
       ++co) {
    double acc = 0.0;
    for (std::size_t n = 0; n < g.batch; ++n) {
      const double* gout =
          grad_output.data() + (n * g.out_channels + co) * t_out;
      for (std::size_t t = 0; t < t_out; ++t) acc += gout[t];
    }
    grad_bias[co] += acc;
  }
}

void Gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(m); ++ii) {
    const std::size_t i = ii;
    double* crow = c.data() + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    if (!trans_b) {
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? a[p * m + i] : a[i * k + p];
        const double* brow = b.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b.data() + j * k;
        double acc = 0.0;
        if (!trans_a) {
          const double* arow = a.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        } else {
          for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * brow[p];
        }
        crow[j] += acc;
      }
    }
  }
}

int MaxThreads() { return omp_get_max_threads(); }

void SetNumThreads(int n) { omp_set_num_threads(n); }

}  // namespace danse::kernels
