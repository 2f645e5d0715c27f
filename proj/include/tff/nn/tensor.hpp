// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tff::nn {

/// Dense row-major storage. Feature maps are channels x frames; vectors are n x 1.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;
using Shape = std::vector<std::int64_t>;

inline std::string shape_string(Index rows, Index cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

inline std::int64_t element_count(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

/// A named learnable (or buffer) tensor with its accumulated gradient.
template <typename Scalar>
struct Parameter {
  std::string name;
  Shape shape;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool trainable = true;

  Index size() const { return value.size(); }
};

/// Owns every parameter of a model. Addresses are stable for the store's lifetime.
template <typename Scalar>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  /// Registers a zero-filled tensor. Shapes of rank 1 are stored as n x 1.
  Parameter<Scalar>& add(const std::string& name, Shape shape, bool trainable = true) {
    if (shape.empty() || shape.size() > 2) throw std::invalid_argument("parameter '" + name + "': rank must be 1 or 2");
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    auto p = std::make_unique<Parameter<Scalar>>();
    p->name = name;
    p->shape = shape;
    const Index rows = shape[0];
    const Index cols = shape.size() == 2 ? shape[1] : 1;
    p->value = Matrix<Scalar>::Zero(rows, cols);
    p->grad = Matrix<Scalar>::Zero(rows, cols);
    p->trainable = trainable;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Parameter<Scalar>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return *params_[it->second];
  }
  const Parameter<Scalar>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return *params_[it->second];
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  Parameter<Scalar>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<Scalar>& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad() {
    for (auto& p : params_) p->grad.setZero();
  }

  /// Number of trainable scalars.
  std::int64_t trainable_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_)
      if (p->trainable) n += p->value.size();
    return n;
  }

  /// Deep copy into another scalar type, e.g. for double-precision gradient checks.
  template <typename Other>
  ParameterStore<Other> cast() const {
    ParameterStore<Other> out;
    for (const auto& p : params_) {
      auto& q = out.add(p->name, p->shape, p->trainable);
      q.value = p->value.template cast<Other>();
    }
    return out;
  }

 private:
  std::vector<std::unique_ptr<Parameter<Scalar>>> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace tff::nn
