// src/tensor.cc

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

#include "danse/tensor.h"

#include <sstream>

#include "danse/error.h"

namespace danse {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

static void CheckShape(const Shape& shape) {
  for (std::size_t d : shape)
    if (d == 0)
      throw ConfigError("tensor dimensions must be positive, got " +
                        ShapeString(shape));
}

Tensor Tensor::Zeros(const Shape& shape, bool requires_grad) {
  return Full(shape, 0.0, requires_grad);
}

Tensor Tensor::Full(const Shape& shape, double value, bool requires_grad) {
  CheckShape(shape);
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data.assign(NumElements(shape), value);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::FromData(const Shape& shape, std::vector<double> data,
                        bool requires_grad) {
  CheckShape(shape);
  if (NumElements(shape) != data.size())
    throw ConfigError("data length " + std::to_string(data.size()) +
                      " does not match shape " + ShapeString(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return Full({1}, value, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1)
    throw ConfigError("item() on tensor of shape " + ShapeString(shape()));
  return impl_->data[0];
}

std::span<double> Tensor::grad_buffer() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

Tensor Tensor::Clone() const {
  auto impl = std::make_shared<TensorImpl>(*impl_);
  return Tensor(std::move(impl));
}

Tensor Tensor::Detach() const {
  return FromData(shape(), impl_->data, false);
}

bool Tape::ShouldRecord(std::initializer_list<const Tensor*> inputs) const {
  if (!enabled_) return false;
  for (const Tensor* t : inputs)
    if (t && t->defined() && t->requires_grad()) return true;
  return false;
}

void Tape::Record(std::string op, std::vector<Tensor> inputs, Tensor output,
                  Rule rule) {
  output.set_requires_grad(true);
  entries_.push_back(
      {std::move(op), std::move(inputs), std::move(output), std::move(rule)});
}

void Tape::Backward(Tensor loss) {
  if (loss.numel() != 1)
    throw ConfigError("Backward() needs a scalar loss, got " +
                      ShapeString(loss.shape()));
  if (!loss.requires_grad())
    throw StateError("Backward() on a loss that does not require grad");
  loss.grad_buffer()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->rule();
  }
}

}  // namespace danse
