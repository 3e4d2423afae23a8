#pragma once

// n-step discounted returns and the squared TD loss.

#include <cmath>
#include <deque>
#include <vector>

#include "fwa/core.hpp"
#include "fwa/rl/replay.hpp"

namespace fwa::rl {

// G = sum_{i<n} gamma^i r_{j+1+i} + gamma^n * bootstrap (bootstrap dropped when terminal).
inline double n_step_return(const std::vector<double>& rewards, double gamma, double bootstrap_q, bool terminal = false) {
  require(!rewards.empty(), ErrorCode::InvalidArgument, "n_step_return: empty reward window");
  require(gamma >= 0 && gamma < 1, ErrorCode::InvalidArgument, "n_step_return: gamma outside [0,1)");
  double g = 0, d = 1;
  for (double r : rewards) {
    g += d * r;
    d *= gamma;
  }
  return terminal ? g : g + d * bootstrap_q;
}

inline double td_loss(double target, double q) { return 0.5 * (target - q) * (target - q); }
inline double td_loss_grad(double target, double q) { return q - target; }

// Turns one actor's (s, a, r) stream into n-step experiences.
class NStepBuffer {
 public:
  NStepBuffer(int n = 3, double gamma = 0.99) : n_(n), gamma_(gamma) {
    require(n >= 1, ErrorCode::InvalidArgument, "NStepBuffer: n must be >= 1");
  }

  // Records the transition s --a--> s_next with reward r; returns completed windows.
  std::vector<Experience> push(const State& s, int a, double r, const State& s_next, bool done = false) {
    window_.push_back({s, a, r});
    last_next_ = s_next;
    std::vector<Experience> out;
    if (done) {
      while (!window_.empty()) {
        out.push_back(emit(true));
        window_.pop_front();
      }
    } else if (static_cast<int>(window_.size()) == n_) {
      out.push_back(emit(false));
      window_.pop_front();
    }
    return out;
  }

  // Emits the remaining partial windows, bootstrapping from the last observed state.
  std::vector<Experience> flush() {
    std::vector<Experience> out;
    while (!window_.empty()) {
      out.push_back(emit(false));
      window_.pop_front();
    }
    return out;
  }

  bool empty() const { return window_.empty(); }

 private:
  struct Step {
    State s;
    int a;
    double r;
  };

  Experience emit(bool done) const {
    Experience e;
    e.state = window_.front().s;
    e.action = window_.front().a;
    double d = 1;
    for (const auto& st : window_) {
      e.n_step_reward += d * st.r;
      d *= gamma_;
    }
    e.discount = d;
    e.bootstrap_state = last_next_;
    e.done = done;
    return e;
  }

  int n_;
  double gamma_;
  std::deque<Step> window_;
  State last_next_{};
};

}  // namespace fwa::rl
