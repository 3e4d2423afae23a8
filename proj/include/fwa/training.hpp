#pragma once

// Training loops (single-threaded deterministic, or concurrent actors) and policy evaluation.

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <thread>
#include <tuple>
#include <vector>

#include "fwa/rl/agent.hpp"
#include "fwa/rl/channel.hpp"
#include "fwa/scenario.hpp"
#include "fwa/simulation.hpp"

namespace fwa {

struct TrainOptions {
  long steps = 100'000;  // environment transitions, both roles together
  int log_interval = 1'000;
  rl::Algorithm algorithm = rl::Algorithm::ApeX;
  int actors = 1;
  bool deterministic = true;
};

struct CurveRow {
  long step = 0;
  double epsilon = 0;
  double loss = 0;         // mean learner loss since the previous row
  double reward = 0;       // mean transition reward since the previous row
  double loop2_reward = 0; // mean r_s since the previous row
  long learner_steps = 0;
};

struct TrainResult {
  std::array<nn::Mlp, 2> nets;  // loop 1, loop 2
  std::vector<CurveRow> curve;
  long transitions = 0;
  long learner_steps = 0;
  double wall_s = 0;
};

inline const char* algorithm_name(rl::Algorithm a) { return a == rl::Algorithm::ApeX ? "apex" : "dqn"; }

// Per-actor exploration ladder used when several actors feed one learner.
inline double actor_epsilon(const rl::RlConfig& c, int i, int n) {
  if (n <= 1) return c.eps_end;
  return std::pow(c.actor_eps_base, 1.0 + c.actor_eps_alpha * i / (n - 1));
}

namespace detail {

// Learner side shared by both schedules: n-step folding per trajectory, replay insertion, SGD and logging.
class LearnerHub {
 public:
  LearnerHub(const ScenarioSpec& spec, std::uint64_t seed, const TrainOptions& opt)
      : opt_(opt), cfg_(spec.rl), replay_rng_(make_stream(seed, "replay")) {
    if (opt.algorithm == rl::Algorithm::Dqn) cfg_.n_step = 1;
    for (int r = 0; r < 2; ++r) {
      Rng init = make_stream(seed, "rl-init", static_cast<std::uint64_t>(r));
      learners_[r] = std::make_unique<rl::QLearner>(cfg_, opt.algorithm, init);
    }
  }

  double epsilon() const { return rl::linear_anneal(cfg_.eps_start, cfg_.eps_end, transitions_, cfg_.eps_anneal_steps); }
  bool done() const { return transitions_ >= opt_.steps; }
  long transitions() const { return transitions_; }
  const rl::QLearner& learner(int r) const { return *learners_[r]; }

  void consume(const Transition& t, int actor = 0) {
    if (done()) return;
    const int r = static_cast<int>(t.role);
    auto key = std::make_tuple(actor, r, t.key);
    auto it = buffers_.find(key);
    if (it == buffers_.end()) it = buffers_.emplace(key, rl::NStepBuffer(cfg_.n_step, cfg_.gamma)).first;
    for (const auto& e : it->second.push(t.s, t.action, t.reward, t.s2, false)) learners_[r]->add(e);
    ++transitions_;
    ++since_[r];
    reward_sum_ += t.reward;
    ++reward_n_;
    if (t.role == Role::Loop2) {
      l2_sum_ += t.reward;
      ++l2_n_;
    }
    if (since_[r] >= cfg_.train_interval && learners_[r]->ready()) {
      since_[r] = 0;
      const auto st = learners_[r]->learner_step(replay_rng_);
      loss_sum_ += st.loss;
      ++loss_n_;
      ++learner_steps_;
    }
    if (opt_.log_interval > 0 && transitions_ % opt_.log_interval == 0) {
      curve_.push_back({transitions_, epsilon(), loss_n_ ? loss_sum_ / loss_n_ : 0.0, reward_n_ ? reward_sum_ / reward_n_ : 0.0,
                        l2_n_ ? l2_sum_ / l2_n_ : 0.0, learner_steps_});
      loss_sum_ = reward_sum_ = l2_sum_ = 0;
      loss_n_ = reward_n_ = l2_n_ = 0;
    }
  }

  long learner_steps() const { return learner_steps_; }

  TrainResult result(double wall) {
    TrainResult out;
    out.nets = {learners_[0]->online(), learners_[1]->online()};
    out.curve = std::move(curve_);
    out.transitions = transitions_;
    out.learner_steps = learner_steps_;
    out.wall_s = wall;
    return out;
  }

 private:
  TrainOptions opt_;
  rl::RlConfig cfg_;
  Rng replay_rng_;
  std::array<std::unique_ptr<rl::QLearner>, 2> learners_;
  std::map<std::tuple<int, int, int>, rl::NStepBuffer> buffers_;
  long transitions_ = 0;
  long learner_steps_ = 0;
  std::array<long, 2> since_{0, 0};
  double loss_sum_ = 0, reward_sum_ = 0, l2_sum_ = 0;
  long loss_n_ = 0, reward_n_ = 0, l2_n_ = 0;
  std::vector<CurveRow> curve_;
};

}  // namespace detail

inline TrainResult train(const ScenarioSpec& spec, std::uint64_t seed, const TrainOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::LearnerHub hub(spec, seed, opt);
  SimOptions so;
  so.energy = false;
  so.forecast = false;
  if (opt.deterministic || opt.actors <= 1) {
    // Fixed interleaving: actors take one tick each in turn, all acting on the current learner parameters.
    const int n = std::max(1, opt.actors);
    std::vector<std::unique_ptr<QController>> ctls;
    std::vector<std::unique_ptr<Simulation>> sims;
    for (int a = 0; a < n; ++a) {
      std::function<double()> eps = [&hub] { return hub.epsilon(); };
      if (n > 1) eps = [e = actor_epsilon(spec.rl, a, n)] { return e; };
      ctls.push_back(std::make_unique<QController>(
          std::array<const nn::Mlp*, 2>{&hub.learner(0).online(), &hub.learner(1).online()},
          n > 1 ? make_stream(seed, "exploration", static_cast<std::uint64_t>(a)) : make_stream(seed, "exploration"), eps,
          [&hub, a](const Transition& t) { hub.consume(t, a); }));
      sims.push_back(std::make_unique<Simulation>(spec, seed + static_cast<std::uint64_t>(a), *ctls.back(), so));
    }
    while (!hub.done())
      for (auto& sim : sims) {
        if (hub.done()) break;
        sim->step();
      }
  } else {
    // Actors run their own simulations and act on the latest published parameters.
    using Snapshot = std::array<nn::Mlp, 2>;
    rl::Channel<std::pair<int, Transition>> channel(4096);
    rl::SnapshotBoard<Snapshot> board;
    board.publish({hub.learner(0).online(), hub.learner(1).online()});
    std::atomic<bool> stop{false};
    std::vector<std::thread> actors;
    for (int a = 0; a < opt.actors; ++a) {
      actors.emplace_back([&, a] {
        auto [snap, version] = board.latest();
        QController ctl({&(*snap)[0], &(*snap)[1]}, make_stream(seed, "exploration", static_cast<std::uint64_t>(a)),
                        [e = actor_epsilon(spec.rl, a, opt.actors)] { return e; },
                        [&](const Transition& t) { channel.send({a, t}); });
        Simulation sim(spec, seed + static_cast<std::uint64_t>(a), ctl, so);
        while (!stop.load()) {
          sim.step();
          auto [s2, v2] = board.latest();
          if (v2 != version) {
            snap = s2;
            version = v2;
            ctl.set_nets({&(*snap)[0], &(*snap)[1]});
          }
        }
      });
    }
    long last_publish = 0;
    while (!hub.done()) {
      auto item = channel.receive();
      if (!item) break;
      hub.consume(item->second, item->first);
      if (hub.learner_steps() - last_publish >= 50) {
        last_publish = hub.learner_steps();
        board.publish({hub.learner(0).online(), hub.learner(1).online()});
      }
    }
    stop.store(true);
    channel.close();
    for (auto& t : actors) t.join();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return hub.result(wall);
}

// Untrained networks, identical to the learner initialization for the same seed.
inline std::array<nn::Mlp, 2> initial_nets(const ScenarioSpec& spec, std::uint64_t seed) {
  std::array<nn::Mlp, 2> out;
  for (int r = 0; r < 2; ++r) {
    Rng init = make_stream(seed, "rl-init", static_cast<std::uint64_t>(r));
    out[r] = nn::Mlp(spec.rl.layer_sizes, nn::Activation::Relu, init);
  }
  return out;
}

struct EvalResult {
  double mean_reward = 0;  // r_s over loop-2 decisions
  double satisfaction = 0;
  long decisions = 0;
};

inline EvalResult evaluate(const ScenarioSpec& spec, std::uint64_t eval_seed, Controller& ctl, int hours = 1) {
  SimOptions so;
  so.energy = false;
  so.forecast = false;
  Simulation sim(spec, eval_seed, ctl, so);
  sim.run_hours(hours);
  const auto& m = sim.metrics();
  return {m.mean_loop2_reward(), m.aggregate_satisfaction(), static_cast<long>(m.loop2_rewards.size())};
}

inline EvalResult evaluate_nets(const ScenarioSpec& spec, std::uint64_t eval_seed, const std::array<nn::Mlp, 2>& nets, int hours = 1) {
  QController ctl({&nets[0], &nets[1]}, make_stream(eval_seed, "exploration"));
  return evaluate(spec, eval_seed, ctl, hours);
}

inline EvalResult evaluate_rules(const ScenarioSpec& spec, std::uint64_t eval_seed, int hours = 1) {
  RulesController ctl;
  return evaluate(spec, eval_seed, ctl, hours);
}

inline EvalResult evaluate_random(const ScenarioSpec& spec, std::uint64_t eval_seed, int hours = 1) {
  RandomController ctl(make_stream(eval_seed, "exploration"));
  return evaluate(spec, eval_seed, ctl, hours);
}

}  // namespace fwa
