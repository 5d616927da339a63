// src/kernels_serial.cc

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

namespace danse::kernels::serial {

namespace {

// Value of the zero-padded input at position pos, or 0 outside the signal.
double Padded(const Conv1dGeometry& g, std::span<const double> input,
              std::size_t n, std::size_t ci, std::ptrdiff_t pos) {
  if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(g.in_length)) return 0.0;
  return input[(n * g.in_channels + ci) * g.in_length + pos];
}

std::ptrdiff_t Tap(const Conv1dGeometry& g, std::size_t t, std::size_t k) {
  return static_cast<std::ptrdiff_t>(t * g.stride + k) -
         static_cast<std::ptrdiff_t>(g.padding);
}

}  // namespace

void Conv1dForward(const Conv1dGeometry& g, std::span<const double> input,
                   std::span<const double> weight,
                   std::span<const double> bias, std::span<double> output) {
  const std::size_t t_out = g.out_length();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t t = 0; t < t_out; ++t) {
        double acc = bias.empty() ? 0.0 : bias[co];
        for (std::size_t ci = 0; ci < g.in_channels; ++ci)
          for (std::size_t k = 0; k < g.kernel; ++k)
            acc += weight[(co * g.in_channels + ci) * g.kernel + k] *
                   Padded(g, input, n, ci, Tap(g, t, k));
        output[(n * g.out_channels + co) * t_out + t] = acc;
      }
}

void Conv1dBackwardInput(const Conv1dGeometry& g,
                         std::span<const double> grad_output,
                         std::span<const double> weight,
                         std::span<double> grad_input) {
  const std::size_t t_out = g.out_length();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t t = 0; t < t_out; ++t) {
        const double go = grad_output[(n * g.out_channels + co) * t_out + t];
        for (std::size_t ci = 0; ci < g.in_channels; ++ci)
          for (std::size_t k = 0; k < g.kernel; ++k) {
            const std::ptrdiff_t pos = Tap(g, t, k);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(g.in_length))
              continue;
            grad_input[(n * g.in_channels + ci) * g.in_length + pos] +=
                weight[(co * g.in_channels + ci) * g.kernel + k] * go;
          }
      }
}

void Conv1dBackwardWeight(const Conv1dGeometry& g,
                          std::span<const double> grad_output,
                          std::span<const double> input,
                          std::span<double> grad_weight,
                          std::span<double> grad_bias) {
  const std::size_t t_out = g.out_length();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t t = 0; t < t_out; ++t) {
        const double go = grad_output[(n * g.out_channels + co) * t_out + t];
        if (!grad_bias.empty()) grad_bias[co] += go;
        for (std::size_t ci = 0; ci < g.in_channels; ++ci)
          for (std::size_t k = 0; k < g.kernel; ++k)
            grad_weight[(co * g.in_channels + ci) * g.kernel + k] +=
                go * Padded(g, input, n, ci, Tap(g, t, k));
      }
}

void Gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? a[p * m + i] : a[i * k + p];
        const double bv = trans_b ? b[j * k + p] : b[p * n + j];
        acc += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
}

}  // namespace danse::kernels::serial
