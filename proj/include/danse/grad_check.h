// include/danse/grad_check.h

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

#ifndef DANSE_GRAD_CHECK_H_
#define DANSE_GRAD_CHECK_H_

#include <functional>
#include <vector>

#include "danse/tensor.h"

namespace danse {

// Builds a scalar objective on the given tape. Must be deterministic for
// fixed parameter values.
using ScalarFn = std::function<Tensor(Tape&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares reverse-mode gradients of fn against central differences
//   (fn(x + h) - fn(x - h)) / 2h
// for every entry of every parameter. The error of an entry is
// |analytic - numeric| / max(1, |analytic|, |numeric|). Throws NumericError
// if fn produces a non-finite value.
GradCheckResult GradCheckDetailed(const ScalarFn& fn,
                                  std::vector<Tensor> params,
                                  double step = 1e-5);

double GradCheck(const ScalarFn& fn, std::vector<Tensor> params,
                 double step = 1e-5);

}  // namespace danse

#endif  // DANSE_GRAD_CHECK_H_
