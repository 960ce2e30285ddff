// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "flowclip/error.hpp"

namespace flowclip {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

namespace detail {

std::vector<double>& Node::grad_buffer() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

}  // namespace detail

namespace {

void check_shape(const Shape& shape) {
  for (auto extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) {
  check_shape(shape);
  node_ = std::make_shared<detail::Node>();
  node_->data.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " holds " + std::to_string(shape_numel(shape)) +
                         " values, got " + std::to_string(values.size()));
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->data = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw Error("use of an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::numel() const { return values().size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_to_string(s));
  return s[axis];
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("expected a matrix, got " + shape_to_string(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("expected a matrix, got " + shape_to_string(shape()));
  return shape()[1];
}

std::span<const double> Tensor::values() const {
  if (!node_) throw Error("use of an undefined tensor");
  return node_->data;
}

std::span<double> Tensor::mutable_values() {
  if (!node_) throw Error("use of an undefined tensor");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t i) const { return values()[i]; }

double Tensor::at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  if (!node_) throw Error("use of an undefined tensor");
  if (!is_leaf()) throw Error("requires_grad can only be set on leaf tensors");
  node_->requires_grad = on;
  return *this;
}

bool Tensor::is_leaf() const { return node_ && node_->inputs.empty(); }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::vector<double> Tensor::grad() const {
  if (!node_) throw Error("use of an undefined tensor");
  if (node_->grad.empty()) return std::vector<double>(node_->data.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const { return Tensor(shape(), std::vector<double>(values().begin(), values().end())); }

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward, const char* op) {
  Tensor out(std::move(shape), std::move(data));
  if (!g_grad_enabled) return out;
  bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return out;
  auto* node = out.node();
  node->requires_grad = true;
  node->op = op;
  node->inputs.reserve(inputs.size());
  for (auto& t : inputs) node->inputs.push_back(t.node_ptr());
  node->backward_fn = std::move(backward);
  return out;
}

Tape Tape::record(const Tensor& root) {
  Tape tape;
  tape.root_ = root;
  if (!root.requires_grad()) return tape;

  // Iterative post-order DFS; each node is emitted once, after its inputs.
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    tape.order_.push_back(node);
    stack.pop_back();
  }
  return tape;
}

void Tape::backward() {
  if (!root_.defined()) throw Error("backward on an undefined tensor");
  if (root_.numel() != 1) {
    throw DimensionError("backward needs a scalar loss, got shape " + shape_to_string(root_.shape()));
  }
  if (order_.empty()) return;
  root_.node()->grad_buffer()[0] += 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw Error("backward on an undefined tensor");
  if (loss.numel() != 1) {
    throw DimensionError("backward needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  Tape::record(loss).backward();
}

}  // namespace flowclip
