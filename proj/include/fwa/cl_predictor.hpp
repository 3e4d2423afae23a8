#pragma once

// Continual-learning forecaster over solver output series, and the naive baselines it is compared to.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "fwa/core.hpp"
#include "fwa/nn.hpp"

namespace fwa::cl {

struct ClConfig {
  int window = 100;
  int hidden = 100;
  int epochs = 100;
  int increment = 60;
  int increment_epochs = 100;
  int replay = 500;
  int batch = 32;
  double lr = 0.01;
  int max_tau = 168;
  std::uint64_t seed = 1;
};

// Gaps are forward-filled; the returned count says how many values were filled.
inline int forward_fill(std::vector<double>& series) {
  int filled = 0;
  double last = std::numeric_limits<double>::quiet_NaN();
  for (auto& v : series) {
    if (std::isfinite(v)) {
      last = v;
    } else if (std::isfinite(last)) {
      v = last;
      ++filled;
    }
  }
  return filled;
}

// Window-relative MLP: inputs are the last `window` values minus the latest one, the output is the
// next increment, both divided by a fixed scale.
class Forecaster {
 public:
  Forecaster() = default;
  explicit Forecaster(ClConfig cfg) : cfg_(cfg) {}

  const ClConfig& config() const { return cfg_; }
  const nn::Mlp& net() const { return net_; }
  bool trained() const { return trained_; }
  double scale() const { return scale_; }
  std::size_t history_size() const { return history_.size(); }

  void fit_initial(const std::vector<double>& series) {
    require(static_cast<int>(series.size()) >= cfg_.window + 1, ErrorCode::InsufficientData,
            "fit_initial: need at least window+1 records, got " + std::to_string(series.size()));
    require(all_finite(series), ErrorCode::InvalidArgument, "fit_initial: non-finite values");
    Rng rng = make_stream(cfg_.seed, "cl-init");
    net_ = nn::Mlp({cfg_.window, cfg_.hidden, 1}, nn::Activation::Tanh, rng);
    history_ = series;
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / series.size();
    double var = 0;
    for (double v : series) var += (v - mean) * (v - mean);
    var /= series.size();
    scale_ = var > 0 ? std::sqrt(var) : 1.0;
    flat_ = var == 0;
    std::vector<std::size_t> targets;
    for (std::size_t t = cfg_.window; t < history_.size(); ++t) targets.push_back(t);
    train_rng_ = make_stream(cfg_.seed, "cl-train");
    train(targets, cfg_.epochs);
    reservoir_.clear();
    seen_ = 0;
    for (auto t : targets) offer(t);
    trained_ = true;
  }

  // Trains on windows ending in the new records plus the replay reservoir.
  void update_increment(const std::vector<double>& records) {
    require(trained_, ErrorCode::InvalidArgument, "update_increment: model not trained");
    if (records.empty()) return;
    require(all_finite(records), ErrorCode::InvalidArgument, "update_increment: non-finite values");
    const std::size_t first = history_.size();
    history_.insert(history_.end(), records.begin(), records.end());
    if (flat_)
      for (double v : records) flat_ = flat_ && v == history_.front();
    std::vector<std::size_t> fresh, targets;
    for (std::size_t t = first; t < history_.size(); ++t) fresh.push_back(t);
    targets = fresh;
    targets.insert(targets.end(), reservoir_.begin(), reservoir_.end());
    train(targets, cfg_.increment_epochs);
    for (auto t : fresh) offer(t);
  }

  double predict_next(const std::vector<double>& context) const {
    require(static_cast<int>(context.size()) >= cfg_.window, ErrorCode::InsufficientData, "predict: context shorter than window");
    std::vector<double> x(static_cast<std::size_t>(cfg_.window));
    if (flat_) return context.back();
    encode(context, context.size(), x);
    return context.back() + scale_ * net_.predict(x)[0];
  }

  // Recursive forecast for T+1..T+tau, feeding predictions back as inputs.
  std::vector<double> predict(const std::vector<double>& series, int tau) const {
    require(tau >= 1, ErrorCode::InvalidArgument, "predict: tau must be >= 1");
    require(tau <= cfg_.max_tau, ErrorCode::InvalidArgument, "predict: tau exceeds configured maximum " + std::to_string(cfg_.max_tau));
    require(static_cast<int>(series.size()) >= cfg_.window, ErrorCode::InsufficientData, "predict: history shorter than window");
    std::vector<double> ctx(series.end() - cfg_.window, series.end());
    std::vector<double> out;
    for (int h = 0; h < tau; ++h) {
      const double next = predict_next(ctx);
      out.push_back(next);
      ctx.erase(ctx.begin());
      ctx.push_back(next);
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), ErrorCode::Io, "cannot write '" + path + "'");
    net_.save(os, "fwa-clnet-v1");
    os << "scale " << std::setprecision(17) << scale_ << '\n';
  }

 private:
  // Inputs for predicting value `end` from the `window` values before it.
  void encode(const std::vector<double>& s, std::size_t end, std::vector<double>& x) const {
    const double last = s[end - 1];
    const std::size_t start = end - cfg_.window;
    for (int i = 0; i < cfg_.window; ++i) x[i] = (s[start + i] - last) / scale_;
  }

  void train(std::vector<std::size_t> targets, int epochs) {
    if (targets.empty()) return;
    std::vector<double> x(static_cast<std::size_t>(cfg_.window)), grad;
    nn::Mlp::Trace tr;
    for (int ep = 0; ep < epochs; ++ep) {
      std::shuffle(targets.begin(), targets.end(), train_rng_);
      for (std::size_t b0 = 0; b0 < targets.size(); b0 += cfg_.batch) {
        const std::size_t b1 = std::min(targets.size(), b0 + static_cast<std::size_t>(cfg_.batch));
        grad.assign(net_.params().size(), 0.0);
        for (std::size_t b = b0; b < b1; ++b) {
          const std::size_t t = targets[b];
          encode(history_, t, x);
          net_.forward(x.data(), tr);
          const double y = (history_[t] - history_[t - 1]) / scale_;
          const double d = (tr.a.back()[0] - y) / static_cast<double>(b1 - b0);
          net_.backward(tr, &d, grad);
        }
        net_.sgd_step(grad, cfg_.lr, 0.0);
      }
    }
    if (!net_.finite()) fail(ErrorCode::Divergence, "forecaster diverged");
  }

  void offer(std::size_t t) {
    ++seen_;
    if (static_cast<int>(reservoir_.size()) < cfg_.replay) {
      reservoir_.push_back(t);
      return;
    }
    std::uniform_int_distribution<std::uint64_t> u(0, seen_ - 1);
    const auto j = u(train_rng_);
    if (j < reservoir_.size()) reservoir_[j] = t;
  }

  ClConfig cfg_;
  nn::Mlp net_;
  std::vector<double> history_;
  std::vector<std::size_t> reservoir_;
  std::uint64_t seen_ = 0;
  double scale_ = 1.0;
  bool trained_ = false;
  bool flat_ = false;  // constant history so far: forecast repeats the last value
  Rng train_rng_;
};

inline std::vector<double> persistence_forecast(const std::vector<double>& series, int tau) {
  require(!series.empty(), ErrorCode::InsufficientData, "persistence: empty history");
  return std::vector<double>(static_cast<std::size_t>(tau), series.back());
}

inline std::vector<double> moving_average_forecast(const std::vector<double>& series, int tau, int window = 24) {
  require(!series.empty(), ErrorCode::InsufficientData, "moving average: empty history");
  const std::size_t n = std::min<std::size_t>(series.size(), static_cast<std::size_t>(std::max(1, window)));
  const double m = std::accumulate(series.end() - n, series.end(), 0.0) / n;
  return std::vector<double>(static_cast<std::size_t>(tau), m);
}

// Mean squared error over all horizons 1..tau for forecast origins in [origin_begin, series.size() - tau].
template <typename ForecastFn>
double rolling_mse(const std::vector<double>& series, std::size_t origin_begin, int tau, ForecastFn&& forecast, std::size_t stride = 1) {
  double se = 0;
  std::size_t n = 0;
  for (std::size_t T = origin_begin; T + tau <= series.size(); T += stride) {
    std::vector<double> hist(series.begin(), series.begin() + T);
    const auto f = forecast(hist, tau);
    for (int h = 0; h < tau; ++h) {
      const double e = f[h] - series[T + h];
      se += e * e;
      ++n;
    }
  }
  require(n > 0, ErrorCode::InsufficientData, "rolling_mse: no forecast origins");
  return se / n;
}

struct PatchEntry {
  int vodu = 0;
  int slice = 0;
  int grant = 0;
};

struct ForecastPatch {
  std::vector<PatchEntry> grants;
  double expected_cost = 0;
  bool has_cost = false;
  std::vector<std::string> warnings;
  bool empty() const { return grants.empty() && !has_cost; }
};

struct GrantForecast {
  int vodu = 0;
  int slice = 0;
  double predicted = 0;
  int current = 0;
  int budget = 0;
};

// Turns forecasts into grant updates. Grants are clamped to [0, budget] and the per-vO-DU total
// is kept within budget by trimming the largest forecast first.
inline ForecastPatch apply_forecast(const std::vector<GrantForecast>& grants, const std::vector<double>& cost_forecast = {}) {
  ForecastPatch p;
  std::vector<PatchEntry> all;
  for (const auto& g : grants) {
    require(std::isfinite(g.predicted), ErrorCode::InvalidArgument,
            "apply_forecast: non-finite forecast for slice " + std::to_string(g.slice));
    double v = g.predicted;
    if (v < 0) {
      p.warnings.push_back("slice " + std::to_string(g.slice) + ": negative forecast clamped to 0");
      v = 0;
    }
    if (v > g.budget) {
      p.warnings.push_back("slice " + std::to_string(g.slice) + ": forecast " + std::to_string(v) + " clamped to budget " +
                           std::to_string(g.budget));
      v = g.budget;
    }
    all.push_back({g.vodu, g.slice, static_cast<int>(std::floor(v + 0.5))});
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    int total = 0;
    for (const auto& e : all)
      if (e.vodu == all[i].vodu) total += e.grant;
    const int budget = grants[i].budget;
    while (total > budget) {
      auto it = std::max_element(all.begin(), all.end(), [&](const auto& a, const auto& b) {
        const int ka = a.vodu == all[i].vodu ? a.grant : -1, kb = b.vodu == all[i].vodu ? b.grant : -1;
        return ka < kb;
      });
      --it->grant;
      --total;
    }
  }
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i].grant != grants[i].current) p.grants.push_back(all[i]);
  if (!cost_forecast.empty()) {
    for (double c : cost_forecast) require(std::isfinite(c), ErrorCode::InvalidArgument, "apply_forecast: non-finite cost forecast");
    p.expected_cost = std::accumulate(cost_forecast.begin(), cost_forecast.end(), 0.0);
    p.has_cost = true;
  }
  return p;
}

}  // namespace fwa::cl
