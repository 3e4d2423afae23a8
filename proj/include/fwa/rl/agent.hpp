#pragma once

// Value learner (prioritized n-step double-Q, or the plain DQN baseline), exploration and state encoding.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "fwa/core.hpp"
#include "fwa/nn.hpp"
#include "fwa/rl/replay.hpp"
#include "fwa/rl/returns.hpp"

namespace fwa::rl {

enum class Algorithm { ApeX, Dqn };

struct RlConfig {
  std::vector<int> layer_sizes{3, 64, 64, 4};
  double gamma = 0.99;
  int n_step = 3;
  int batch_size = 32;
  double lr = 1e-3;
  double grad_clip = 10.0;
  int target_sync = 1000;
  double alpha = 0.6;
  double beta_start = 0.4;
  double beta_end = 1.0;
  long beta_anneal_steps = 100'000;
  double eps_start = 1.0;
  double eps_end = 0.05;
  long eps_anneal_steps = 50'000;
  int replay_capacity = 50'000;
  int learn_start = 1'000;
  int train_interval = 4;  // environment transitions per learner step
  double priority_eps = 1e-6;
  double actor_eps_base = 0.4;  // actor i of n explores with base^(1 + alpha i / (n - 1))
  double actor_eps_alpha = 7.0;
};

inline double linear_anneal(double from, double to, long step, long over) {
  if (over <= 0 || step >= over) return to;
  return from + (to - from) * static_cast<double>(step) / static_cast<double>(over);
}

inline int argmax(const std::vector<double>& q) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(q.size()); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

inline int act(const nn::Mlp& net, const State& s, double eps, Rng& rng) {
  require(eps >= 0 && eps <= 1, ErrorCode::InvalidArgument, "act: epsilon outside [0,1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (eps > 0 && u(rng) < eps) return std::uniform_int_distribution<int>(0, net.outputs() - 1)(rng);
  return argmax(net.predict(s.data()));
}

inline double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

struct Loop1Obs {
  double demand_rbs = 0;
  double pool_rbs = 0;
  double omega = 1;
  double omega_max = 1.25;
  double psi = 0;
  double B = 0;
  double B_cap = 1;
};

struct Loop2Obs {
  double free_rbs = 0;
  double total_rbs = 1;
  double mean_util = 0;
  double grant_rbs = 0;
  double vodu_budget = 1;
};

inline State encode_state(const Loop1Obs& o) {
  const double demand = o.pool_rbs > 0 ? o.demand_rbs / o.pool_rbs : (o.demand_rbs > 0 ? 1.0 : 0.0);
  return {clamp01(demand), clamp01(o.omega / o.omega_max), clamp01((o.psi - o.B) / (o.B_cap - o.B))};
}

inline State encode_state(const Loop2Obs& o) {
  return {clamp01(o.free_rbs / o.total_rbs), clamp01(o.mean_util), clamp01(o.grant_rbs / o.vodu_budget)};
}

struct LearnStats {
  double loss = 0;
  double grad_norm = 0;
};

// One learner: owns online and target networks and its replay memory.
class QLearner {
 public:
  QLearner(const RlConfig& cfg, Algorithm algo, Rng& init_rng)
      : cfg_(cfg),
        algo_(algo),
        online_(cfg.layer_sizes, nn::Activation::Relu, init_rng),
        target_(online_),
        per_(static_cast<std::size_t>(cfg.replay_capacity), cfg.alpha, cfg.priority_eps),
        uni_(static_cast<std::size_t>(cfg.replay_capacity)) {
    require(online_.outputs() == 4 && online_.inputs() == 3, ErrorCode::InvalidArgument, "Q-network must map 3 inputs to 4 actions");
  }

  Algorithm algorithm() const { return algo_; }
  const RlConfig& config() const { return cfg_; }
  const nn::Mlp& online() const { return online_; }
  const nn::Mlp& target() const { return target_; }
  nn::Mlp& online_mut() { return online_; }
  long steps() const { return steps_; }
  std::size_t memory_size() const { return algo_ == Algorithm::ApeX ? per_.size() : uni_.size(); }
  const PrioritizedReplay& prioritized() const { return per_; }

  void set_online(const nn::Mlp& m) {
    online_ = m;
    target_ = m;
  }

  // Bootstrap target: double-Q for ApeX, max over the target network for DQN.
  double target_value(const Experience& e) const {
    if (e.done) return e.n_step_reward;
    const auto qt = target_.predict(e.bootstrap_state.data());
    double boot;
    if (algo_ == Algorithm::ApeX) {
      boot = qt[argmax(online_.predict(e.bootstrap_state.data()))];
    } else {
      boot = *std::max_element(qt.begin(), qt.end());
    }
    return e.n_step_reward + e.discount * boot;
  }

  double td_error(const Experience& e) const { return target_value(e) - online_.predict(e.state.data())[e.action]; }

  void add(const Experience& e) {
    if (algo_ == Algorithm::ApeX)
      per_.add(e, std::abs(td_error(e)) + cfg_.priority_eps);
    else
      uni_.add(e);
  }

  bool ready() const { return memory_size() >= static_cast<std::size_t>(std::max(1, cfg_.learn_start)); }

  LearnStats learner_step(Rng& rng) {
    require(memory_size() > 0, ErrorCode::InvalidArgument, "learner_step: empty memory");
    const std::size_t batch = static_cast<std::size_t>(cfg_.batch_size);
    const double beta = linear_anneal(cfg_.beta_start, cfg_.beta_end, steps_, cfg_.beta_anneal_steps);
    Sample s = algo_ == Algorithm::ApeX ? per_.sample(batch, beta, rng) : uni_.sample(batch, rng);
    grad_.assign(online_.params().size(), 0.0);
    double loss = 0;
    nn::Mlp::Trace tr;
    std::vector<double> dout(4);
    std::vector<double> td(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      const Experience& e = algo_ == Algorithm::ApeX ? per_.at(s.indices[b]) : uni_.at(s.indices[b]);
      const double g = target_value(e);
      online_.forward(e.state.data(), tr);
      const double q = tr.a.back()[e.action];
      td[b] = g - q;
      loss += s.weights[b] * td_loss(g, q);
      std::fill(dout.begin(), dout.end(), 0.0);
      dout[e.action] = s.weights[b] * td_loss_grad(g, q) / static_cast<double>(batch);
      online_.backward(tr, dout.data(), grad_);
    }
    LearnStats st;
    st.loss = loss / static_cast<double>(batch);
    st.grad_norm = online_.sgd_step(grad_, cfg_.lr, cfg_.grad_clip);
    if (algo_ == Algorithm::ApeX)
      for (std::size_t b = 0; b < batch; ++b) per_.update_priority(s.indices[b], std::abs(td[b]));
    ++steps_;
    if (cfg_.target_sync > 0 && steps_ % cfg_.target_sync == 0) target_ = online_;
    if (!std::isfinite(st.loss) || !online_.finite()) fail(ErrorCode::Divergence, "learner diverged: non-finite loss or parameters");
    return st;
  }

 private:
  RlConfig cfg_;
  Algorithm algo_;
  nn::Mlp online_;
  nn::Mlp target_;
  PrioritizedReplay per_;
  UniformReplay uni_;
  std::vector<double> grad_;
  long steps_ = 0;
};

inline constexpr const char* kQnetMagic = "fwa-qnet-v1";

// A checkpoint holds one network per actor role, loop 1 first.
inline void save_checkpoint(const std::string& path, const std::array<const nn::Mlp*, 2>& nets) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::Io, "cannot write '" + path + "'");
  for (const auto* n : nets) n->save(os, kQnetMagic);
}

inline std::array<nn::Mlp, 2> load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), ErrorCode::Io, "cannot open '" + path + "'");
  std::array<nn::Mlp, 2> out;
  out[0] = nn::Mlp::load(is, kQnetMagic);
  std::string rest;
  std::getline(is, rest);  // end of the last parameter line
  out[1] = nn::Mlp::load(is, kQnetMagic);
  return out;
}

}  // namespace fwa::rl
