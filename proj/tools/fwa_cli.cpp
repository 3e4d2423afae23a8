// fwa_cli: run, train, predict and report for the three-loop FWA slicing simulator.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "fwa/cl_predictor.hpp"
#include "fwa/report.hpp"
#include "fwa/rl/agent.hpp"
#include "fwa/scenario.hpp"
#include "fwa/simulation.hpp"
#include "fwa/training.hpp"

namespace fs = std::filesystem;
using namespace fwa;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("fwa");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("FWA_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

struct Common {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string out = "out";
  bool deterministic = false;
  int actors = 1;
  long steps = 100'000;
  int log_interval = 1'000;
};

ScenarioSpec load_spec(const Common& c) {
  if (c.scenario.empty()) return paper_scenario(1);
  spdlog::debug("loading scenario {}", c.scenario);
  return load_scenario(c.scenario);
}

TrainOptions train_options(const Common& c, rl::Algorithm algo) {
  TrainOptions o;
  o.steps = c.steps;
  o.log_interval = c.log_interval;
  o.algorithm = algo;
  o.actors = std::max(1, c.actors);
  o.deterministic = c.deterministic || c.actors <= 1;
  return o;
}

TrainResult train_logged(const ScenarioSpec& spec, const Common& c, rl::Algorithm algo) {
  const auto o = train_options(c, algo);
  spdlog::info("training {} for {} steps ({} actor{}, {})", algorithm_name(algo), o.steps, o.actors, o.actors > 1 ? "s" : "",
               o.deterministic ? "deterministic" : "threaded");
  auto r = train(spec, c.seed, o);
  for (const auto& n : r.nets)
    if (!n.finite()) fail(ErrorCode::Divergence, std::string(algorithm_name(algo)) + ": non-finite network parameters");
  for (const auto& row : r.curve)
    if (!std::isfinite(row.loss))
      fail(ErrorCode::Divergence, std::string(algorithm_name(algo)) + ": non-finite loss at step " + std::to_string(row.step));
  spdlog::info("{}: {} transitions, {} learner steps, {:.1f} s", algorithm_name(algo), r.transitions, r.learner_steps, r.wall_s);
  return r;
}

// ---- run ----

struct RunArgs {
  int hours = 0;
  std::string policy = "rules";
  std::string checkpoint;
  int tau = 24;
  bool no_forecast = false;
};

int cmd_run(const Common& c, const RunArgs& a) {
  const ScenarioSpec spec = load_spec(c);
  const int hours = a.hours > 0 ? a.hours : std::max(1, spec.sim.hours);
  report::ensure_dir(c.out);

  std::array<nn::Mlp, 2> nets;
  std::unique_ptr<Controller> ctl;
  if (a.policy == "rules") {
    ctl = std::make_unique<RulesController>();
  } else if (a.policy == "random") {
    ctl = std::make_unique<RandomController>(make_stream(c.seed, "exploration"));
  } else {
    const std::string ckpt = !a.checkpoint.empty() ? a.checkpoint : spec.resolve(spec.rl_checkpoint);
    if (!ckpt.empty()) {
      spdlog::info("loading checkpoint {}", ckpt);
      nets = rl::load_checkpoint(ckpt);
    } else {
      const auto algo = a.policy == "dqn" ? rl::Algorithm::Dqn : rl::Algorithm::ApeX;
      nets = train_logged(spec, c, algo).nets;
      rl::save_checkpoint((fs::path(c.out) / (a.policy + ".qnet")).string(), {&nets[0], &nets[1]});
    }
    ctl = std::make_unique<QController>(std::array<const nn::Mlp*, 2>{&nets[0], &nets[1]}, make_stream(c.seed, "exploration"));
  }

  std::ofstream l1(fs::path(c.out) / "loop1.csv", std::ios::binary), l2(fs::path(c.out) / "loop2.csv", std::ios::binary);
  require(l1.good() && l2.good(), ErrorCode::Io, "cannot write loop CSVs under '" + c.out + "'");
  SimOptions so;
  so.forecast = !a.no_forecast;
  so.forecast_tau = a.tau;
  so.loop1_csv = &l1;
  so.loop2_csv = &l2;

  spdlog::info("run: policy {}, seed {}, {} h ({} ticks per hour)", a.policy, c.seed, hours,
               spec.sim.loop2_period_ticks * spec.sim.loop2_epochs_per_hour);
  const auto t0 = std::chrono::steady_clock::now();
  Simulation sim(spec, c.seed, *ctl, so);
  for (int h = 0; h < hours; ++h) {
    sim.run_hours(1);
    spdlog::debug("hour {} done, satisfaction so far {:.4f}", h, sim.metrics().aggregate_satisfaction());
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& m = sim.metrics();
  report::write_run(c.out, m, c.seed, a.policy, hours);
  auto summary = report::summary_json(m, c.seed, a.policy, hours);
  summary["wall_s"] = wall;
  report::write_json(fs::path(c.out) / "summary.json", summary);

  std::cout << "aggregate satisfaction " << csv::num(m.aggregate_satisfaction()) << " (" << m.total_satisfied() << "/"
            << m.total_samples() << ")\n";
  for (const auto& s : m.slices) std::cout << "  slice " << s.slice << " 5QI " << s.fiveqi << " phi " << csv::num(s.phi()) << '\n';
  std::cout << "mean r_s " << csv::num(m.mean_loop2_reward()) << ", capacity violations " << m.capacity_violations << ", wall "
            << csv::num(wall) << " s\n";
  if (m.capacity_violations > 0) spdlog::warn("{} capacity violations recorded", m.capacity_violations);
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string algorithm = "both";
  std::uint64_t eval_seed = 0;
  int eval_hours = 1;
};

int cmd_train(const Common& c, const TrainArgs& a) {
  const ScenarioSpec spec = load_spec(c);
  report::ensure_dir(c.out);
  const std::uint64_t eval_seed = a.eval_seed ? a.eval_seed : c.seed + 1000;
  csv::Writer cmp((fs::path(c.out) / "comparison.csv").string(), "policy,mean_r_s,satisfaction,decisions");
  report::json js;
  js["seed"] = c.seed;
  js["steps"] = c.steps;
  js["eval_seed"] = eval_seed;
  auto record = [&](const std::string& name, const EvalResult& e) {
    cmp.line(csv::row(name, e.mean_reward, e.satisfaction, e.decisions));
    js["evaluation"][name] = {{"mean_r_s", e.mean_reward}, {"satisfaction", e.satisfaction}};
    std::cout << name << ": mean r_s " << csv::num(e.mean_reward) << ", satisfaction " << csv::num(e.satisfaction) << '\n';
  };
  for (auto algo : {rl::Algorithm::ApeX, rl::Algorithm::Dqn}) {
    const std::string name = algorithm_name(algo);
    if (a.algorithm != "both" && a.algorithm != name) continue;
    const auto r = train_logged(spec, c, algo);
    report::write_curve(fs::path(c.out) / ("curve_" + name + ".csv"), r.curve);
    rl::save_checkpoint((fs::path(c.out) / (name + ".qnet")).string(), {&r.nets[0], &r.nets[1]});
    js["training"][name] = {{"transitions", r.transitions}, {"learner_steps", r.learner_steps}, {"wall_s", r.wall_s}};
    record(name, evaluate_nets(spec, eval_seed, r.nets, a.eval_hours));
  }
  record("random", evaluate_random(spec, eval_seed, a.eval_hours));
  record("rules", evaluate_rules(spec, eval_seed, a.eval_hours));
  report::write_json(fs::path(c.out) / "train_summary.json", js);
  return 0;
}

// ---- predict ----

struct PredictArgs {
  std::string input;
  std::string column = "F";
  int tau = 24;
  int window = 0;
  int epochs = 0;
};

int cmd_predict(const Common& c, const PredictArgs& a) {
  cl::ClConfig cfg = c.scenario.empty() ? cl::ClConfig{} : load_spec(c).cl;
  cfg.seed = c.seed;
  if (a.window > 0) cfg.window = a.window;
  if (a.epochs > 0) cfg.epochs = cfg.increment_epochs = a.epochs;
  require(a.tau <= cfg.max_tau, ErrorCode::InvalidArgument, "tau " + std::to_string(a.tau) + " exceeds maximum " + std::to_string(cfg.max_tau));

  const auto t = csv::read(a.input);
  const int col = t.column(a.column), hour_col = t.column("hour");
  require(col >= 0, ErrorCode::Parse, a.input + ": no column '" + a.column + "'");
  std::vector<double> series;
  for (const auto& r : t.rows) series.push_back(r[col].empty() ? std::nan("") : csv::to_double(r[col], a.input));
  if (const int filled = cl::forward_fill(series); filled > 0) spdlog::warn("{} gaps forward-filled", filled);
  require(static_cast<int>(series.size()) >= cfg.window + 1, ErrorCode::InsufficientData,
          "insufficient history: " + std::to_string(series.size()) + " records, need at least " + std::to_string(cfg.window + 1));
  require(all_finite(series), ErrorCode::InsufficientData, "history starts with missing values");
  report::ensure_dir(c.out);

  cl::Forecaster model(cfg);
  model.fit_initial(series);
  const auto f = model.predict(series, a.tau);
  const long last = hour_col >= 0 ? static_cast<long>(csv::to_double(t.rows.back()[hour_col], a.input))
                                  : static_cast<long>(series.size()) - 1;
  {
    csv::Writer w((fs::path(c.out) / "forecast.csv").string(), report::kForecastHeader);
    for (int h = 0; h < a.tau; ++h) w.line(csv::row(last + h + 1, h + 1, f[h], "", ""));
  }
  model.save((fs::path(c.out) / "forecaster.clnet").string());

  // Backtest: fit on the leading part, then score rolling origins over the rest with the model frozen.
  csv::Writer b((fs::path(c.out) / "baseline.csv").string(), "model,tau,origins,mse");
  const std::size_t n = series.size();
  const std::size_t split = std::max<std::size_t>(cfg.window + 1, n * 7 / 10);
  if (split + a.tau <= n) {
    cl::Forecaster bt(cfg);
    bt.fit_initial(std::vector<double>(series.begin(), series.begin() + static_cast<long>(split)));
    const std::size_t origins = n - a.tau - split + 1;
    const double mse_cl = cl::rolling_mse(series, split, a.tau, [&](const auto& h, int k) { return bt.predict(h, k); });
    const double mse_p = cl::rolling_mse(series, split, a.tau, [](const auto& h, int k) { return cl::persistence_forecast(h, k); });
    const double mse_ma =
        cl::rolling_mse(series, split, a.tau, [](const auto& h, int k) { return cl::moving_average_forecast(h, k); });
    b.line(csv::row("cl", a.tau, static_cast<long>(origins), mse_cl));
    b.line(csv::row("persistence", a.tau, static_cast<long>(origins), mse_p));
    b.line(csv::row("moving_average", a.tau, static_cast<long>(origins), mse_ma));
    std::cout << "backtest over " << origins << " origins: mse cl " << csv::num(mse_cl) << ", persistence " << csv::num(mse_p)
              << ", moving average " << csv::num(mse_ma) << '\n';
  } else {
    spdlog::warn("history too short for a backtest at tau {}", a.tau);
  }
  std::cout << "forecast " << a.tau << " h ahead written to " << (fs::path(c.out) / "forecast.csv").string() << '\n';
  return 0;
}

// ---- report ----

int cmd_report(const std::string& run_dir) {
  const auto r = report::build_report(run_dir);
  std::cout << r.text;
  spdlog::info("report written to {}", (fs::path(run_dir) / "report").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"FWA network slicing simulator with three closed control loops"};
  app.require_subcommand(1);
  Common c;
  RunArgs ra;
  TrainArgs ta;
  PredictArgs pa;
  std::string run_dir;

  auto add_common = [&](CLI::App* s, bool rl_flags) {
    s->add_option("--scenario", c.scenario, "Scenario JSON (default: built-in defaults)")->check(CLI::ExistingFile);
    s->add_option("--seed", c.seed, "Run seed")->capture_default_str();
    s->add_option("--out", c.out, "Output directory")->capture_default_str();
    if (!rl_flags) return;
    s->add_flag("--deterministic", c.deterministic, "Single-threaded training schedule");
    s->add_option("--parallel-actors", c.actors, "Number of RL actors")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--steps", c.steps, "Training transitions")->check(CLI::NonNegativeNumber)->capture_default_str();
    s->add_option("--log-interval", c.log_interval, "Transitions per training-curve row")->check(CLI::PositiveNumber)->capture_default_str();
  };

  auto* run = app.add_subcommand("run", "Simulate the loop hierarchy and write CSV outputs");
  add_common(run, true);
  run->add_option("--hours", ra.hours, "Simulated hours (default: scenario sim.hours)")->check(CLI::PositiveNumber);
  run->add_option("--policy", ra.policy, "Controller")->check(CLI::IsMember({"rules", "rl", "dqn", "random"}))->capture_default_str();
  run->add_option("--checkpoint", ra.checkpoint, "Q-network checkpoint for rl/dqn (otherwise trained first)")->check(CLI::ExistingFile);
  run->add_option("--tau", ra.tau, "Forecast horizon in hours")->check(CLI::PositiveNumber)->capture_default_str();
  run->add_flag("--no-forecast", ra.no_forecast, "Skip the hourly forecaster");

  auto* tr = app.add_subcommand("train", "Train Ape-X and the DQN baseline, write curves and checkpoints");
  add_common(tr, true);
  tr->add_option("--algorithm", ta.algorithm, "apex, dqn or both")->check(CLI::IsMember({"apex", "dqn", "both"}))->capture_default_str();
  tr->add_option("--eval-seed", ta.eval_seed, "Evaluation seed (default: seed + 1000)");
  tr->add_option("--eval-hours", ta.eval_hours, "Evaluation length")->check(CLI::PositiveNumber)->capture_default_str();

  auto* pr = app.add_subcommand("predict", "Forecast a solution series tau hours ahead");
  add_common(pr, false);
  pr->add_option("--input", pa.input, "Solution CSV (e.g. solutions.csv)")->required()->check(CLI::ExistingFile);
  pr->add_option("--column", pa.column, "Series column")->capture_default_str();
  pr->add_option("--tau", pa.tau, "Horizon in hours")->check(CLI::PositiveNumber)->capture_default_str();
  pr->add_option("--window", pa.window, "Input window (default from scenario)")->check(CLI::PositiveNumber);
  pr->add_option("--epochs", pa.epochs, "Training epochs (default from scenario)")->check(CLI::PositiveNumber);

  auto* rp = app.add_subcommand("report", "Summarize a run directory with tables and SVG charts");
  rp->add_option("run_dir,--run", run_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*run) return cmd_run(c, ra);
    if (*tr) return cmd_train(c, ta);
    if (*pr) return cmd_predict(c, pa);
    if (*rp) return cmd_report(run_dir);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected: {}", e.what());
    return 1;
  }
  return 0;
}
