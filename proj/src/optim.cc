// src/optim.cc

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

#include "danse/optim.h"

#include <cmath>

#include "danse/error.h"

namespace danse {

namespace {

void CheckFinite(std::span<const double> grads, const std::string& name) {
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw NumericError("non-finite gradient in " + name + " at index " +
                         std::to_string(i) + " (value " +
                         std::to_string(grads[i]) + ")");
}

void CheckSizes(std::size_t a, std::size_t b, const std::string& name) {
  if (a != b)
    throw ConfigError("gradient size " + std::to_string(b) +
                      " does not match parameter " + name + " of size " +
                      std::to_string(a));
}

}  // namespace

void SgdStep(std::span<double> params, std::span<const double> grads,
             double lr, const std::string& name) {
  CheckSizes(params.size(), grads.size(), name);
  CheckFinite(grads, name);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void RmsPropStep(std::span<double> params, std::span<const double> grads,
                 std::span<double> second_moment, double lr, double rho,
                 double eps, const std::string& name) {
  CheckSizes(params.size(), grads.size(), name);
  CheckSizes(params.size(), second_moment.size(), name);
  CheckFinite(grads, name);
  for (std::size_t i = 0; i < params.size(); ++i) {
    second_moment[i] =
        rho * second_moment[i] + (1 - rho) * grads[i] * grads[i];
    params[i] -= lr * grads[i] / (std::sqrt(second_moment[i]) + eps);
  }
}

Optimizer::Optimizer(OptimizerKind kind, double lr, double rho, double eps)
    : kind_(kind), lr_(lr), rho_(rho), eps_(eps) {
  set_learning_rate(lr);
}

Optimizer Optimizer::Sgd(double lr) {
  return Optimizer(OptimizerKind::kSgd, lr, 0.0, 0.0);
}

Optimizer Optimizer::RmsProp(double lr, double rho, double eps) {
  if (rho < 0 || rho >= 1) throw ConfigError("rmsprop rho must be in [0, 1)");
  if (!(eps > 0)) throw ConfigError("rmsprop epsilon must be positive");
  return Optimizer(OptimizerKind::kRmsProp, lr, rho, eps);
}

void Optimizer::set_learning_rate(double lr) {
  if (!(lr > 0)) throw ConfigError("learning rate must be positive");
  lr_ = lr;
}

void Optimizer::Step(const ParamSet& params) {
  for (const auto& p : params)
    if (p.tensor.has_grad()) CheckFinite(p.tensor.grad(), p.name);
  if (kind_ == OptimizerKind::kRmsProp && second_moments_.empty()) {
    for (const auto& p : params)
      second_moments_.emplace_back(p.tensor.numel(), 0.0);
  }
  if (kind_ == OptimizerKind::kRmsProp &&
      second_moments_.size() != params.size())
    throw ConfigError(
        "optimizer was initialized for a different parameter set");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    std::vector<double> zeros;
    std::span<const double> g = t.grad();
    if (!t.has_grad()) {
      zeros.assign(t.numel(), 0.0);
      g = zeros;
    }
    if (kind_ == OptimizerKind::kSgd)
      SgdStep(t.mutable_data(), g, lr_, params[i].name);
    else
      RmsPropStep(t.mutable_data(), g, second_moments_[i], lr_, rho_, eps_,
                  params[i].name);
  }
}

void ZeroGrad(const ParamSet& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

}  // namespace danse
