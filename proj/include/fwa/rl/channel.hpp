#pragma once

// Actor -> learner plumbing: an ordered, closable queue and versioned parameter snapshots.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>

namespace fwa::rl {

// capacity 0 means unbounded; otherwise send blocks while the queue is full.
template <typename T>
class Channel {
 public:
  explicit Channel(std::size_t capacity = 0) : capacity_(capacity) {}

  void send(T item) {
    {
      std::unique_lock<std::mutex> lk(m_);
      if (capacity_ > 0) space_.wait(lk, [&] { return closed_ || q_.size() < capacity_; });
      if (closed_) return;
      q_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  // Blocks until an item arrives or the channel is closed and drained.
  std::optional<T> receive() {
    std::unique_lock<std::mutex> lk(m_);
    cv_.wait(lk, [&] { return closed_ || !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    lk.unlock();
    space_.notify_one();
    return v;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lk(m_);
      closed_ = true;
    }
    cv_.notify_all();
    space_.notify_all();
  }

  bool closed() const {
    std::lock_guard<std::mutex> lk(m_);
    return closed_;
  }

 private:
  mutable std::mutex m_;
  std::condition_variable cv_, space_;
  std::deque<T> q_;
  std::size_t capacity_ = 0;
  bool closed_ = false;
};

template <typename T>
class SnapshotBoard {
 public:
  void publish(T value) {
    auto p = std::make_shared<const T>(std::move(value));
    std::lock_guard<std::mutex> lk(m_);
    current_ = std::move(p);
    ++version_;
  }
  std::pair<std::shared_ptr<const T>, std::uint64_t> latest() const {
    std::lock_guard<std::mutex> lk(m_);
    return {current_, version_};
  }

 private:
  mutable std::mutex m_;
  std::shared_ptr<const T> current_;
  std::uint64_t version_ = 0;
};

}  // namespace fwa::rl
