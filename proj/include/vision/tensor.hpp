// Copyright 2026 The Vision Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VISION_TENSOR_HPP_
#define VISION_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "vision/errors.hpp"

namespace vision {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
class Tensor;

namespace detail {

// One vertex of the recorded computation. Parents are the op inputs; the
// backward closure reads this node's grad and accumulates into the parents.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Node&)> backward;
};

}  // namespace detail

/**
 * Dense row-major N-dimensional array with an optional gradient buffer.
 *
 * A Tensor is a shared handle: copies alias the same storage, which is what
 * lets the recorded graph reach parameters owned by a network. Use clone()
 * for an independent copy.
 */
template <typename T = float>
class Tensor {
 public:
  using value_type = T;
  using NodeType = detail::Node<T>;

  Tensor() = default;

  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false) : node_(std::make_shared<NodeType>()) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    for (auto d : shape)
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
    if (shape_numel(shape) != data.size())
      throw ShapeError("shape " + shape_str(shape) + " needs " + std::to_string(shape_numel(shape)) +
                       " values, got " + std::to_string(data.size()));
    node_->shape = std::move(shape);
    node_->value = std::move(data);
    set_requires_grad(requires_grad);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, T{0}), requires_grad);
  }

  static Tensor full(Shape shape, T v, bool requires_grad = false) {
    auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, v), requires_grad);
  }

  static Tensor scalar(T v, bool requires_grad = false) { return Tensor({1}, {v}, requires_grad); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  std::span<T> data() { return node_->value; }

  T item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
  }

  T operator[](std::size_t i) const { return node_->value[i]; }

  /// Element at a multi-index, row-major.
  template <typename... Idx>
  T at(Idx... idx) const {
    return node_->value[offset({static_cast<std::size_t>(idx)...})];
  }

  template <typename... Idx>
  T& at(Idx... idx) {
    return node_->value[offset({static_cast<std::size_t>(idx)...})];
  }

  bool requires_grad() const { return node_->requires_grad; }

  void set_requires_grad(bool on) {
    node_->requires_grad = on;
    if (on) {
      node_->grad.assign(node_->value.size(), T{0});
    } else {
      node_->grad.clear();
    }
  }

  std::span<const T> grad() const { return node_->grad; }
  std::span<T> grad() { return node_->grad; }

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), T{0}); }

  /// Independent copy of the values, outside any graph.
  Tensor clone() const { return Tensor(shape(), node_->value, requires_grad()); }

  /// Copy of the values with no gradient tracking.
  Tensor detach() const { return Tensor(shape(), node_->value, false); }

  bool all_finite() const {
    return std::all_of(node_->value.begin(), node_->value.end(), [](T v) { return std::isfinite(v); });
  }

  const std::shared_ptr<NodeType>& node() const { return node_; }

  /// Builds an op result. Gradient tracking is recorded only when some input tracks it.
  static Tensor from_op(Shape shape, std::vector<T> value, std::vector<Tensor> inputs,
                        std::function<void(const NodeType&)> backward) {
    Tensor out(std::move(shape), std::move(value), false);
    bool track = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (track) {
      out.set_requires_grad(true);
      for (auto& in : inputs) out.node_->parents.push_back(in.node_);
      out.node_->backward = std::move(backward);
    }
    return out;
  }

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    const auto& s = node_->shape;
    if (idx.size() != s.size()) throw ShapeError("index rank does not match " + shape_str(s));
    std::size_t off = 0;
    std::size_t i = 0;
    for (auto v : idx) {
      if (v >= s[i]) throw ShapeError("index out of range for " + shape_str(s));
      off = off * s[i++] + v;
    }
    return off;
  }

  std::shared_ptr<NodeType> node_;
};

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": shape " + shape_str(a) + " does not match " + shape_str(b));
}

template <typename T>
void require_finite(const Tensor<T>& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite value in input");
}

/// Set of graph vertices visited by one backward pass.
template <typename T>
using GraphTrace = std::unordered_set<const detail::Node<T>*>;

/**
 * Reverse-mode differentiation from a scalar. Gradients accumulate into every
 * reachable tensor that tracks them; the recorded graph is released afterwards,
 * so each forward pass supports exactly one backward.
 */
template <typename T>
GraphTrace<T> backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) throw ShapeError("backward() needs a scalar, got " + shape_str(loss.shape()));
  GraphTrace<T> seen;
  if (!loss.requires_grad()) return seen;

  using NodePtr = detail::Node<T>*;
  std::vector<NodePtr> order;
  std::vector<std::pair<NodePtr, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodePtr parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodePtr node = *it;
    if (node->backward) node->backward(*node);
  }
  for (NodePtr node : order) {
    if (!node->backward) continue;
    node->backward = nullptr;
    node->parents.clear();
    node->grad.assign(node->grad.size(), T{0});
  }
  return seen;
}

}  // namespace vision

#endif  // VISION_TENSOR_HPP_
