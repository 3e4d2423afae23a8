#pragma once

// Small dense network with manual backprop, shared by the Q-network and the forecaster.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include "fwa/core.hpp"

namespace fwa::nn {

enum class Activation { Relu, Tanh };

inline const char* activation_name(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation act, Rng& rng) : sizes_(std::move(sizes)), act_(act) {
    require(sizes_.size() >= 2, ErrorCode::InvalidArgument, "Mlp: need at least input and output layer");
    layout();
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double lim = act_ == Activation::Relu ? std::sqrt(6.0 / in) : std::sqrt(6.0 / (in + out));
      std::uniform_real_distribution<double> u(-lim, lim);
      double* w = &params_[w_off_[l]];
      for (int i = 0; i < in * out; ++i) w[i] = u(rng);
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return act_; }
  int inputs() const { return sizes_.front(); }
  int outputs() const { return sizes_.back(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Per-sample activations kept for the backward pass.
  struct Trace {
    std::vector<std::vector<double>> a;  // a[0] = input, a[L] = output
  };

  void forward(const double* x, Trace& t) const {
    const std::size_t L = sizes_.size() - 1;
    t.a.resize(L + 1);
    t.a[0].assign(x, x + sizes_[0]);
    for (std::size_t l = 0; l < L; ++l) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double* w = &params_[w_off_[l]];
      const double* b = &params_[b_off_[l]];
      const double* prev = t.a[l].data();
      auto& cur = t.a[l + 1];
      cur.resize(static_cast<std::size_t>(out));
      const bool hidden = l + 1 < L;
      for (int o = 0; o < out; ++o) {
        const double* row = w + static_cast<std::size_t>(o) * in;
        double s = b[o];
        for (int i = 0; i < in; ++i) s += row[i] * prev[i];
        if (hidden) s = act_ == Activation::Relu ? (s > 0 ? s : 0.0) : std::tanh(s);
        cur[o] = s;
      }
    }
  }

  std::vector<double> predict(const double* x) const {
    Trace t;
    forward(x, t);
    return t.a.back();
  }
  std::vector<double> predict(const std::vector<double>& x) const { return predict(x.data()); }

  // Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
  void backward(const Trace& t, const double* dout, std::vector<double>& grad) const {
    const std::size_t L = sizes_.size() - 1;
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    std::vector<double> delta(dout, dout + sizes_.back());
    std::vector<double> prev_delta;
    for (std::size_t l = L; l-- > 0;) {
      const int in = sizes_[l], out = sizes_[l + 1];
      const double* w = &params_[w_off_[l]];
      double* gw = &grad[w_off_[l]];
      double* gb = &grad[b_off_[l]];
      const double* a_in = t.a[l].data();
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        gb[o] += d;
        if (d == 0.0) continue;
        double* grow = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) grow[i] += d * a_in[i];
      }
      if (l == 0) break;
      prev_delta.assign(static_cast<std::size_t>(in), 0.0);
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* row = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) prev_delta[i] += d * row[i];
      }
      const auto& a_hidden = t.a[l];
      for (int i = 0; i < in; ++i) {
        const double a = a_hidden[i];
        prev_delta[i] *= act_ == Activation::Relu ? (a > 0 ? 1.0 : 0.0) : (1.0 - a * a);
      }
      delta.swap(prev_delta);
    }
  }

  // Plain SGD step with gradient-norm clipping; returns the pre-clip norm.
  double sgd_step(const std::vector<double>& grad, double lr, double clip_norm) {
    double n2 = 0;
    for (double g : grad) n2 += g * g;
    const double norm = std::sqrt(n2);
    const double scale = (clip_norm > 0 && norm > clip_norm) ? clip_norm / norm : 1.0;
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] -= lr * scale * grad[i];
    return norm;
  }

  bool finite() const { return all_finite(params_); }

  bool operator==(const Mlp& o) const { return sizes_ == o.sizes_ && act_ == o.act_ && params_ == o.params_; }

  void save(std::ostream& os, const std::string& magic) const {
    os.imbue(std::locale::classic());
    os << magic << '\n' << "layers";
    for (int s : sizes_) os << ' ' << s;
    os << '\n' << "activation " << activation_name(act_) << '\n';
    os << std::setprecision(17);
    for (double p : params_) os << p << '\n';
  }

  static Mlp load(std::istream& is, const std::string& magic) {
    is.imbue(std::locale::classic());
    std::string line;
    std::getline(is, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == magic, ErrorCode::Parse, "checkpoint: expected header '" + magic + "', got '" + line + "'");
    Mlp m;
    std::getline(is, line);
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    require(tag == "layers", ErrorCode::Parse, "checkpoint: missing layers line");
    for (int s; ls >> s;) m.sizes_.push_back(s);
    require(m.sizes_.size() >= 2, ErrorCode::Parse, "checkpoint: bad layer sizes");
    std::getline(is, line);
    std::istringstream as(line);
    std::string act;
    as >> tag >> act;
    require(tag == "activation" && (act == "relu" || act == "tanh"), ErrorCode::Parse, "checkpoint: bad activation line");
    m.act_ = act == "relu" ? Activation::Relu : Activation::Tanh;
    m.layout();
    for (auto& p : m.params_) {
      require(static_cast<bool>(is >> p), ErrorCode::Parse, "checkpoint: truncated parameter list");
    }
    return m;
  }

  void save(const std::string& path, const std::string& magic) const {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), ErrorCode::Io, "cannot write '" + path + "'");
    save(os, magic);
  }
  static Mlp load(const std::string& path, const std::string& magic) {
    std::ifstream is(path);
    require(is.good(), ErrorCode::Io, "cannot open '" + path + "'");
    return load(is, magic);
  }

 private:
  void layout() {
    w_off_.clear();
    b_off_.clear();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      w_off_.push_back(off);
      off += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
      b_off_.push_back(off);
      off += static_cast<std::size_t>(sizes_[l + 1]);
    }
    params_.assign(off, 0.0);
  }

  std::vector<int> sizes_;
  Activation act_ = Activation::Relu;
  std::vector<double> params_;
  std::vector<std::size_t> w_off_, b_off_;
};

}  // namespace fwa::nn
