#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "marlsig/contract.hpp"

namespace marlsig::rl {

// Fixed-capacity ring buffer; the oldest entry is overwritten once full.
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    MARLSIG_EXPECTS(capacity > 0);
    data_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t total_pushed() const { return pushed_; }

  void push(T item) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(item));
    } else {
      data_[head_] = std::move(item);
    }
    head_ = (head_ + 1) % capacity_;
    ++pushed_;
  }

  // i-th oldest retained entry.
  const T& at_age(std::size_t i) const {
    MARLSIG_EXPECTS(i < data_.size());
    const std::size_t start = data_.size() < capacity_ ? 0 : head_;
    return data_[(start + i) % capacity_];
  }

  // Uniform sampling with replacement.
  std::vector<const T*> sample(std::size_t n, std::mt19937_64& rng) const {
    MARLSIG_EXPECTS(!data_.empty());
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<const T*> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(&data_[pick(rng)]);
    return out;
  }

  void clear() {
    data_.clear();
    head_ = 0;
  }

 private:
  std::size_t capacity_;
  std::vector<T> data_;
  std::size_t head_ = 0;
  std::size_t pushed_ = 0;
};

}  // namespace marlsig::rl
