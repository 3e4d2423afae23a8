#include <gtest/gtest.h>

#include <sstream>

#include "fwa/nn.hpp"
#include "fwa/rl/returns.hpp"

using namespace fwa;

namespace {

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i] + b[i] * b[i];
  }
  return den > 0 ? std::sqrt(num) / std::sqrt(den) : 0.0;
}

// Central differences of f over every parameter.
template <typename F>
std::vector<double> numeric_grad(nn::Mlp& net, F&& f, double h = 1e-6) {
  std::vector<double> g(net.params().size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double keep = net.params()[i];
    net.params()[i] = keep + h;
    const double up = f();
    net.params()[i] = keep - h;
    const double dn = f();
    net.params()[i] = keep;
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Mlp, ShapesAndInit) {
  Rng rng = make_stream(1, "init");
  nn::Mlp m({3, 64, 64, 4}, nn::Activation::Relu, rng);
  EXPECT_EQ(m.inputs(), 3);
  EXPECT_EQ(m.outputs(), 4);
  EXPECT_EQ(m.params().size(), 3u * 64 + 64 + 64 * 64 + 64 + 64 * 4 + 4);
  EXPECT_TRUE(m.finite());
  Rng again = make_stream(1, "init");
  EXPECT_TRUE(m == nn::Mlp({3, 64, 64, 4}, nn::Activation::Relu, again));
  EXPECT_THROW(nn::Mlp({3}, nn::Activation::Relu, rng), Error);
}

TEST(Mlp, ForwardMatchesHandComputation) {
  Rng rng = make_stream(1, "init");
  nn::Mlp m({2, 2, 1}, nn::Activation::Relu, rng);
  // Layout per layer: row-major weights, then biases.
  m.params() = {1, -1, 0.5, 2, 0.1, -0.2, 3, -1, 0.25};
  const double x[2] = {1.0, 2.0};
  const double h0 = std::max(0.0, 1 * 1 - 1 * 2 + 0.1), h1 = std::max(0.0, 0.5 * 1 + 2 * 2 - 0.2);
  EXPECT_DOUBLE_EQ(m.predict(x)[0], 3 * h0 - 1 * h1 + 0.25);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng = make_stream(2, "fd");
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto act = trial % 2 ? nn::Activation::Tanh : nn::Activation::Relu;
    const int in = 1 + trial % 5, hid = 2 + trial % 7, out = 1 + trial % 4;
    nn::Mlp m({in, hid, hid, out}, act, rng);
    // Zero biases put ReLU units of a dead layer exactly on the kink, so every parameter is redrawn.
    for (auto& p : m.params()) p = u(rng);
    std::vector<double> x(in), c(out);
    for (auto& v : x) v = u(rng);
    for (auto& v : c) v = u(rng);
    auto loss = [&] {
      auto y = m.predict(x);
      double s = 0;
      for (int k = 0; k < out; ++k) s += c[k] * y[k];
      return s;
    };
    nn::Mlp::Trace t;
    m.forward(x.data(), t);
    std::vector<double> g;
    m.backward(t, c.data(), g);
    EXPECT_LT(rel_err(g, numeric_grad(m, loss)), 1e-4) << "trial " << trial;
  }
}

TEST(Mlp, TdLossGradientMatchesFiniteDifferences) {
  Rng rng = make_stream(3, "td-fd");
  std::uniform_real_distribution<double> u(-1, 1);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    nn::Mlp m({3, 8, 8, 4}, trial % 3 ? nn::Activation::Relu : nn::Activation::Tanh, rng);
    for (auto& p : m.params()) p = u(rng);
    double s[3] = {u(rng), u(rng), u(rng)};
    const int a = trial % 4;
    const double G = 3 * u(rng);
    auto loss = [&] { return rl::td_loss(G, m.predict(s)[a]); };
    nn::Mlp::Trace t;
    m.forward(s, t);
    std::vector<double> dout(4, 0.0), g;
    dout[a] = rl::td_loss_grad(G, t.a.back()[a]);
    m.backward(t, dout.data(), g);
    const auto fd = numeric_grad(m, loss);
    EXPECT_LT(rel_err(g, fd), 1e-4) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(Mlp, SgdStepClipsNorm) {
  Rng rng = make_stream(4, "sgd");
  nn::Mlp m({2, 3, 1}, nn::Activation::Tanh, rng);
  const auto before = m.params();
  std::vector<double> g(before.size(), 0.0);
  g[0] = 30;
  g[1] = 40;
  EXPECT_DOUBLE_EQ(m.sgd_step(g, 0.1, 10.0), 50.0);
  EXPECT_NEAR(m.params()[0], before[0] - 0.1 * 6.0, 1e-12);
  EXPECT_NEAR(m.params()[1], before[1] - 0.1 * 8.0, 1e-12);
  EXPECT_EQ(m.params()[2], before[2]);
}

TEST(Mlp, SaveLoadRoundTrip) {
  Rng rng = make_stream(5, "io");
  nn::Mlp m({3, 5, 4}, nn::Activation::Tanh, rng);
  std::stringstream ss;
  m.save(ss, "fwa-qnet-v1");
  EXPECT_EQ(ss.str().rfind("fwa-qnet-v1\nlayers 3 5 4\nactivation tanh\n", 0), 0u);
  auto back = nn::Mlp::load(ss, "fwa-qnet-v1");
  EXPECT_TRUE(back == m);
  std::stringstream wrong(ss.str());
  EXPECT_THROW(nn::Mlp::load(wrong, "fwa-clnet-v1"), Error);
  std::stringstream cut("fwa-qnet-v1\nlayers 3 5 4\nactivation tanh\n0.5\n");
  EXPECT_THROW(nn::Mlp::load(cut, "fwa-qnet-v1"), Error);
  std::stringstream act("fwa-qnet-v1\nlayers 3 5 4\nactivation sigmoid\n");
  EXPECT_THROW(nn::Mlp::load(act, "fwa-qnet-v1"), Error);
}
