// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so the
// append order is a topological order and backward is a single reverse sweep.

#pragma once

#include "tff/nn/tensor.hpp"

#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tff::nn {

template <typename Scalar>
class Graph;

/// Handle to a node of a Graph.
template <typename Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  const Matrix<Scalar>& value() const { return graph->value(id); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const { return graph->requires_grad(id); }
};

template <typename Scalar>
class Graph {
 public:
  using Mat = Matrix<Scalar>;
  /// Receives the graph and the id of the node being differentiated; reads
  /// grad(self) and accumulates into grad(input) for inputs that require it.
  using BackwardFn = std::function<void(Graph&, int self)>;

  /// With record = false no backward closures are kept (inference).
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var<Scalar> constant(Mat value) {
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Var<Scalar> param(Parameter<Scalar>& p) {
    Node n;
    n.ref = &p.value;
    n.param = &p;
    n.requires_grad = record_ && p.trainable;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  /// Appends an op result. `fn` is dropped when no input requires a gradient.
  Var<Scalar> emit(Mat value, std::initializer_list<Var<Scalar>> inputs, BackwardFn fn) {
    Node n;
    n.owned = std::move(value);
    for (const auto& in : inputs) {
      if (in.graph != this) throw std::invalid_argument("op inputs belong to a different graph");
      if (nodes_[in.id].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  /// Same as emit, for a runtime-sized input list.
  Var<Scalar> emit(Mat value, const std::vector<Var<Scalar>>& inputs, BackwardFn fn) {
    Node n;
    n.owned = std::move(value);
    for (const auto& in : inputs) {
      if (in.graph != this) throw std::invalid_argument("op inputs belong to a different graph");
      if (nodes_[in.id].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  const Mat& value(int id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.owned;
  }

  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, zero-allocated on first access.
  Mat& grad(int id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
      const Mat& v = value(id);
      n.grad = Mat::Zero(v.rows(), v.cols());
      n.has_grad = true;
    }
    return n.grad;
  }

  bool has_grad(int id) const { return nodes_[id].has_grad; }

  /// Accumulates d(loss)/d(param) into Parameter::grad for every trainable
  /// parameter reachable from `loss`, which must be a 1x1 node.
  void backward(Var<Scalar> loss) {
    const Mat& v = value(loss.id);
    if (v.rows() != 1 || v.cols() != 1)
      throw std::invalid_argument("backward needs a scalar loss, got " + shape_string(v));
    backward(loss, Mat::Ones(1, 1));
  }

  /// Reverse sweep seeded with an arbitrary upstream gradient for `out`.
  void backward(Var<Scalar> out, const Mat& seed) {
    if (!record_) throw std::logic_error("backward on a non-recording graph");
    const Mat& v = value(out.id);
    if (seed.rows() != v.rows() || seed.cols() != v.cols())
      throw std::invalid_argument("seed gradient shape " + shape_string(seed) + " != " + shape_string(v));
    if (!nodes_[out.id].requires_grad) return;
    grad(out.id) += seed;
    for (int id = out.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.has_grad || !n.requires_grad) continue;
      if (n.backward) {
        n.backward(*this, id);
      } else if (n.param) {
        n.param->grad += n.grad;
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat owned;
    const Mat* ref = nullptr;
    Parameter<Scalar>* param = nullptr;
    Mat grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace tff::nn
