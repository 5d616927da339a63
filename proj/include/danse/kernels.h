// include/danse/kernels.h

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

#ifndef DANSE_KERNELS_H_
#define DANSE_KERNELS_H_

#include <cstddef>
#include <span>

namespace danse::kernels {

// Batched 1-D cross-correlation geometry. Input is [batch x in x in_length],
// weight [out x in x kernel], output [batch x out x out_length].
struct Conv1dGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t in_length = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_length() const {
    return (in_length + 2 * padding - kernel) / stride + 1;
  }
};

// The kernels below are OpenMP-parallel over output elements. Each output
// element is accumulated by exactly one thread in a fixed order, so results
// are bit-identical for every thread count.

void Conv1dForward(const Conv1dGeometry& g, std::span<const double> input,
                   std::span<const double> weight,
                   std::span<const double> bias, std::span<double> output);

// grad_input += d(out)/d(input)^T grad_output
void Conv1dBackwardInput(const Conv1dGeometry& g,
                         std::span<const double> grad_output,
                         std::span<const double> weight,
                         std::span<double> grad_input);

// grad_weight += ..., grad_bias += ... (grad_bias may be empty).
void Conv1dBackwardWeight(const Conv1dGeometry& g,
                          std::span<const double> grad_output,
                          std::span<const double> input,
                          std::span<double> grad_weight,
                          std::span<double> grad_bias);

// c[m x n] (+)= op(a)[m x k] * op(b)[k x n]; a is stored [k x m] when
// trans_a, b is stored [n x k] when trans_b.
void Gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);

int MaxThreads();
void SetNumThreads(int n);

// Straightforward loop-nest implementations with the same contracts, kept as
// the reference the parallel kernels are tested and benchmarked against.
namespace serial {

void Conv1dForward(const Conv1dGeometry& g, std::span<const double> input,
                   std::span<const double> weight,
                   std::span<const double> bias, std::span<double> output);
void Conv1dBackwardInput(const Conv1dGeometry& g,
                         std::span<const double> grad_output,
                         std::span<const double> weight,
                         std::span<double> grad_input);
void Conv1dBackwardWeight(const Conv1dGeometry& g,
                          std::span<const double> grad_output,
                          std::span<const double> input,
                          std::span<double> grad_weight,
                          std::span<double> grad_bias);
void Gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate);

}  // namespace serial

}  // namespace danse::kernels

#endif  // DANSE_KERNELS_H_
