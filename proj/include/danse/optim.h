// include/danse/optim.h

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

#ifndef DANSE_OPTIM_H_
#define DANSE_OPTIM_H_

#include <span>
#include <string>
#include <vector>

#include "danse/model.h"

namespace danse {

// theta <- theta - lr * g. Throws NumericError naming `name` if any gradient
// is non-finite; nothing is updated in that case.
void SgdStep(std::span<double> params, std::span<const double> grads,
             double lr, const std::string& name = "parameter");

// v <- rho v + (1 - rho) g^2; theta <- theta - lr g / (sqrt(v) + eps).
void RmsPropStep(std::span<double> params, std::span<const double> grads,
                 std::span<double> second_moment, double lr, double rho,
                 double eps, const std::string& name = "parameter");

enum class OptimizerKind { kSgd, kRmsProp };

class Optimizer {
 public:
  static Optimizer Sgd(double lr);
  static Optimizer RmsProp(double lr, double rho = 0.9, double eps = 1e-8);

  // Applies one update to every parameter from its accumulated gradient
  // (a missing gradient counts as zero). All gradients are checked for
  // finiteness before any parameter changes.
  void Step(const ParamSet& params);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr);
  const std::vector<std::vector<double>>& second_moments() const {
    return second_moments_;
  }

 private:
  Optimizer(OptimizerKind kind, double lr, double rho, double eps);

  OptimizerKind kind_;
  double lr_, rho_, eps_;
  std::vector<std::vector<double>> second_moments_;
};

void ZeroGrad(const ParamSet& params);

}  // namespace danse

#endif  // DANSE_OPTIM_H_
