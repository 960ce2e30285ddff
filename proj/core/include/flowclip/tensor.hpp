// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace flowclip {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until the first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& grad_buffer();
  bool needs_grad(std::size_t input) const { return inputs[input]->requires_grad; }
};

}  // namespace detail

/// Dense row-major tensor of doubles with an optional autodiff history.
///
/// A Tensor is a handle: copies share storage and graph position. Results of
/// differentiable ops record their inputs when gradient recording is enabled
/// and at least one input requires a gradient.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t dim(std::size_t axis) const;
  /// Rows/cols of a rank-2 tensor.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  /// In-place access. Only meaningful for leaves; mutating an interior node
  /// invalidates the recorded backward rules.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const;

  bool has_grad() const;
  /// Gradient buffer; zeros when nothing has been accumulated yet.
  std::vector<double> grad() const;
  void zero_grad();

  /// Copy of the values with no history.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const noexcept { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

bool grad_enabled() noexcept;

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. `backward` receives the output node and must push
/// gradient into the inputs that require it.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward, const char* op);

/// Recorded operations reachable from a root, in topological order
/// (every node after all of its inputs).
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t size() const noexcept { return order_.size(); }
  const std::vector<detail::Node*>& nodes() const noexcept { return order_; }

  /// Seeds d(root)/d(root) = 1 and runs every backward rule once in reverse
  /// order. Gradients accumulate additively into existing buffers.
  void backward();

 private:
  Tensor root_;
  std::vector<detail::Node*> order_;
};

/// Reverse-mode sweep from a scalar loss.
void backward(const Tensor& loss);

}  // namespace flowclip
