#pragma once

// Experience storage: proportional prioritized replay over a sum tree, plus a uniform ring buffer.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fwa/core.hpp"

namespace fwa::rl {

using State = std::array<double, 3>;

struct Experience {
  State state{};
  int action = 0;
  double n_step_reward = 0;  // discounted sum over the window
  State bootstrap_state{};
  double discount = 1.0;  // gamma^k for the window length k
  bool done = false;
  double priority = 1.0;
};

class SumTree {
 public:
  explicit SumTree(std::size_t capacity = 1) { reset(capacity); }

  void reset(std::size_t capacity) {
    leaves_ = 1;
    while (leaves_ < capacity) leaves_ <<= 1;
    tree_.assign(2 * leaves_, 0.0);
  }
  std::size_t capacity() const { return leaves_; }
  double total() const { return tree_[1]; }
  double leaf(std::size_t i) const { return tree_[leaves_ + i]; }

  void set(std::size_t i, double value) {
    std::size_t n = leaves_ + i;
    tree_[n] = value;
    for (n >>= 1; n >= 1; n >>= 1) tree_[n] = tree_[2 * n] + tree_[2 * n + 1];
  }

  // Leaf whose cumulative interval contains mass in [0, total()).
  std::size_t find(double mass) const {
    std::size_t n = 1;
    while (n < leaves_) {
      const double left = tree_[2 * n];
      if (mass < left || tree_[2 * n + 1] <= 0.0) {
        n = 2 * n;
      } else {
        mass -= left;
        n = 2 * n + 1;
      }
    }
    return n - leaves_;
  }

 private:
  std::size_t leaves_ = 1;
  std::vector<double> tree_;
};

struct Sample {
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // importance weights, max-normalized within the batch
};

class PrioritizedReplay {
 public:
  PrioritizedReplay(std::size_t capacity = 50'000, double alpha = 0.6, double priority_eps = 1e-6)
      : capacity_(capacity), alpha_(alpha), eps_(priority_eps), tree_(capacity) {
    require(capacity > 0, ErrorCode::InvalidArgument, "replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  double alpha() const { return alpha_; }
  const Experience& at(std::size_t i) const { return data_[i]; }

  // Non-positive priority means "use the current maximum".
  void add(Experience e, double priority = 0.0) {
    if (!(priority > 0)) priority = max_priority_;
    e.priority = priority;
    max_priority_ = std::max(max_priority_, priority);
    if (data_.size() < capacity_) {
      data_.push_back(e);
      tree_.set(data_.size() - 1, std::pow(priority, alpha_));
    } else {
      data_[next_] = e;
      tree_.set(next_, std::pow(priority, alpha_));
    }
    next_ = (next_ + 1) % capacity_;
  }

  double probability(std::size_t i) const { return tree_.leaf(i) / tree_.total(); }

  std::size_t draw(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, tree_.total());
    std::size_t i = tree_.find(u(rng));
    return std::min(i, data_.size() - 1);
  }

  Sample sample(std::size_t batch, double beta, Rng& rng) const {
    require(!data_.empty(), ErrorCode::InvalidArgument, "sample from empty replay");
    Sample s;
    s.indices.resize(batch);
    s.weights.resize(batch);
    double wmax = 0;
    const double n = static_cast<double>(data_.size());
    for (std::size_t b = 0; b < batch; ++b) {
      s.indices[b] = draw(rng);
      s.weights[b] = std::pow(n * probability(s.indices[b]), -beta);
      wmax = std::max(wmax, s.weights[b]);
    }
    for (auto& w : s.weights) w /= wmax;
    return s;
  }

  void update_priority(std::size_t i, double td_abs) {
    const double p = td_abs + eps_;
    data_[i].priority = p;
    max_priority_ = std::max(max_priority_, p);
    tree_.set(i, std::pow(p, alpha_));
  }

 private:
  std::size_t capacity_;
  double alpha_;
  double eps_;
  double max_priority_ = 1.0;
  std::size_t next_ = 0;
  std::vector<Experience> data_;
  SumTree tree_;
};

class UniformReplay {
 public:
  explicit UniformReplay(std::size_t capacity = 50'000) : capacity_(capacity) {
    require(capacity > 0, ErrorCode::InvalidArgument, "replay capacity must be positive");
  }
  std::size_t size() const { return data_.size(); }
  const Experience& at(std::size_t i) const { return data_[i]; }

  void add(const Experience& e) {
    if (data_.size() < capacity_)
      data_.push_back(e);
    else
      data_[next_] = e;
    next_ = (next_ + 1) % capacity_;
  }

  Sample sample(std::size_t batch, Rng& rng) const {
    require(!data_.empty(), ErrorCode::InvalidArgument, "sample from empty replay");
    std::uniform_int_distribution<std::size_t> u(0, data_.size() - 1);
    Sample s;
    for (std::size_t b = 0; b < batch; ++b) s.indices.push_back(u(rng));
    s.weights.assign(batch, 1.0);
    return s;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Experience> data_;
};

}  // namespace fwa::rl
