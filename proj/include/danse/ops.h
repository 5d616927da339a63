// include/danse/ops.h

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

#ifndef DANSE_OPS_H_
#define DANSE_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "danse/tensor.h"

// Differentiable operations. Every op records its backward rule on the tape
// when at least one input requires a gradient and the tape is enabled.
namespace danse::ops {

enum class Mode { kTrain, kEval };

// Elementwise, same-shape operands.
Tensor Add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor Sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor Mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor Scale(Tape& tape, const Tensor& x, double factor);

// x[N x C (x T)] + bias[C], broadcast along axis 1.
Tensor AddBias(Tape& tape, const Tensor& x, const Tensor& bias);

// [N x K] * [K x M].
Tensor MatMul(Tape& tape, const Tensor& a, const Tensor& b);
// x[N x K] * w[K x M] + b[M].
Tensor Linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

Tensor Sum(Tape& tape, const Tensor& x);
Tensor Mean(Tape& tape, const Tensor& x);

Tensor Exp(Tape& tape, const Tensor& x);
Tensor Log(Tape& tape, const Tensor& x);
Tensor Sqrt(Tape& tape, const Tensor& x);
Tensor Tanh(Tape& tape, const Tensor& x);
Tensor Sigmoid(Tape& tape, const Tensor& x);
Tensor Elu(Tape& tape, const Tensor& x, double alpha = 1.0);
// max(x, floor); the gradient is zero where the floor is active.
Tensor ClampMin(Tape& tape, const Tensor& x, double floor);

// Divides each row (axis 1) or column (axis 0) of a matrix by its L2 norm.
// Throws NumericError when a norm falls below min_norm.
Tensor L2Normalize(Tape& tape, const Tensor& x, int axis,
                   double min_norm = 1e-12);

// Along the last axis, max-subtracted.
Tensor Softmax(Tape& tape, const Tensor& x);
Tensor LogSoftmax(Tape& tape, const Tensor& x);

// out[i] = x[i, index[i]] for x[N x M].
Tensor Pick(Tape& tape, const Tensor& x, std::span<const int> index);

// Cross-correlation. input [N x C_in x T] or [C_in x T], kernels
// [C_out x C_in x K], bias [C_out].
Tensor Conv1d(Tape& tape, const Tensor& input, const Tensor& kernels,
              const Tensor& bias, std::size_t stride, std::size_t padding);

struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  bool populated = false;
};

// input [N x C x T] or [N x C]; statistics are per channel over all other
// axes. Train mode normalizes with biased batch statistics and folds them
// into `state` with the given momentum (running variance uses the unbiased
// estimate); eval mode uses `state` only.
Tensor BatchNorm1d(Tape& tape, const Tensor& input, const Tensor& gamma,
                   const Tensor& beta, BatchNormState& state, Mode mode,
                   double eps = 1e-5, double momentum = 0.1);

// [N x C x T] -> [N*T x C]
Tensor ChannelsLast(Tape& tape, const Tensor& x);
Tensor Reshape(Tape& tape, const Tensor& x, const Shape& shape);
// Matrix transpose.
Tensor Transpose(Tape& tape, const Tensor& x);
// Rows [begin, end) along axis 0.
Tensor SliceRows(Tape& tape, const Tensor& x, std::size_t begin,
                 std::size_t end);
// [N x A], [N x B] -> [N x (A+B)]
Tensor ConcatCols(Tape& tape, const Tensor& a, const Tensor& b);

// out[n, c] = sum_t weights[n, t] * x[n, c, t] for x [N x C x T].
Tensor WeightedTimeSum(Tape& tape, const Tensor& x, const Tensor& weights);

// Identity forward; backward multiplies the upstream gradient by -lambda.
Tensor GradReverse(Tape& tape, const Tensor& x, double lambda);

// Mean over rows of -log softmax(logits)[label].
Tensor SoftmaxCrossEntropy(Tape& tape, const Tensor& logits,
                           std::span<const int> labels);

// Mean binary cross-entropy of sigmoid(logits) against labels in {0, 1},
// evaluated as max(z, 0) - z*d + log1p(exp(-|z|)).
Tensor BceWithLogits(Tape& tape, const Tensor& logits,
                     std::span<const int> labels);

}  // namespace danse::ops

#endif  // DANSE_OPS_H_
