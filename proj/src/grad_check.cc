// src/grad_check.cc

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

#include "danse/grad_check.h"

#include <algorithm>
#include <cmath>

#include "danse/error.h"

namespace danse {

namespace {

double Evaluate(const ScalarFn& fn) {
  Tape tape;
  tape.set_enabled(false);
  const double v = fn(tape).item();
  if (!std::isfinite(v))
    throw NumericError("grad_check: objective is not finite");
  return v;
}

}  // namespace

GradCheckResult GradCheckDetailed(const ScalarFn& fn,
                                  std::vector<Tensor> params, double step) {
  for (Tensor& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = fn(tape);
    if (!std::isfinite(loss.item()))
      throw NumericError("grad_check: objective is not finite");
    tape.Backward(loss);
    for (Tensor& p : params) {
      if (p.has_grad())
        analytic.emplace_back(p.grad().begin(), p.grad().end());
      else
        analytic.emplace_back(p.numel(), 0.0);
      p.zero_grad();
    }
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto values = params[pi].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = Evaluate(fn);
      values[i] = saved - step;
      const double down = Evaluate(fn);
      values[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double a = analytic[pi][i];
      const double err = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
      if (err > result.max_rel_error || (pi == 0 && i == 0)) {
        result = {err, pi, i, a, numeric};
      }
    }
  }
  return result;
}

double GradCheck(const ScalarFn& fn, std::vector<Tensor> params, double step) {
  return GradCheckDetailed(fn, std::move(params), step).max_rel_error;
}

}  // namespace danse
