// Copyright 2026 The DiMoSR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dimosr/tensor.hpp"

namespace dimosr {

/// Named trainable tensors in registration order. The order is the
/// checkpoint manifest order and the iteration order of the optimizer.
template <typename T>
class ParameterStore {
 public:
  using Entry = std::pair<std::string, BasicTensor<T>>;

  void add(std::string name, BasicTensor<T> value) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(value));
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  BasicTensor<T>& at(const std::string& name) { return entries_[lookup(name)].second; }
  const BasicTensor<T>& at(const std::string& name) const {
    return entries_[lookup(name)].second;
  }

  std::size_t size() const { return entries_.size(); }

  /// Total number of trainable scalars.
  std::int64_t element_count() const {
    std::int64_t total = 0;
    for (const auto& [name, t] : entries_) total += t.numel();
    return total;
  }

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& [name, t] : entries_) out.add(name, t.template cast<U>());
    return out;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

template <typename T>
using GradientMap = std::map<std::string, BasicTensor<T>>;

}  // namespace dimosr
