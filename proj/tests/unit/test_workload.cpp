#include <gtest/gtest.h>

#include "fwa/scenario.hpp"
#include "fwa/workload.hpp"
#include "test_support.hpp"

using namespace fwa;

namespace {
TrafficProfile single(double mean) { return {{{0, 0, mean, 1e6, 2e6}}}; }
}  // namespace

TEST(Arrivals, ZeroMeanIsEmpty) {
  for (int t = 0; t < 100; ++t) EXPECT_TRUE(generate_arrivals(1, t, single(0.0)).empty());
}

TEST(Arrivals, SameSeedSameStream) {
  auto s = paper_scenario(1);
  auto p = make_traffic_profile(s.topology, s.services, 1.0, 50.0);
  long n = 0;
  for (int t = 0; t < 500; ++t) {
    auto a = generate_arrivals(42, t, p), b = generate_arrivals(42, t, p);
    EXPECT_EQ(a, b);
    n += static_cast<long>(a.size());
  }
  EXPECT_GT(n, 0);
  bool differ = false;
  for (int t = 0; t < 500 && !differ; ++t) differ = !(generate_arrivals(42, t, p) == generate_arrivals(43, t, p));
  EXPECT_TRUE(differ);
}

TEST(Arrivals, PoissonMeanWithinThreeSigma) {
  const auto p = single(5.0);
  const int ticks = 10'000;
  double sum = 0, sum2 = 0;
  for (int t = 0; t < ticks; ++t) {
    const double k = static_cast<double>(generate_arrivals(9, t, p).size());
    sum += k;
    sum2 += k * k;
  }
  const double mean = sum / ticks;
  EXPECT_NEAR(mean, 5.0, 3.0 * std::sqrt(5.0 / ticks));
  EXPECT_NEAR(sum2 / ticks - mean * mean, 5.0, 0.5);  // Poisson: variance equals the mean
}

TEST(Arrivals, PacketSizesInRange) {
  auto p = single(3.0);
  for (int t = 0; t < 1000; ++t)
    for (const auto& e : generate_arrivals(4, t, p)) {
      EXPECT_GE(e.bits, 1e6);
      EXPECT_LE(e.bits, 2e6);
      EXPECT_EQ(e.tick_ms, t);
    }
}

TEST(Traffic, ProfileScalesWithTickAndLoad) {
  auto s = paper_scenario(1);
  auto p = make_traffic_profile(s.topology, s.services, 1.0, 2.0);
  ASSERT_EQ(p.sources.size(), 65u);
  const auto& c = s.topology.cpes[0];
  EXPECT_DOUBLE_EQ(p.sources[0].mean_per_tick, 2.0 * s.services[c.service].arrival_rate_pps * 1e-3);
  s.topology.cpes[0].service = 99;
  EXPECT_THROW(make_traffic_profile(s.topology, s.services), Error);
}

TEST(QueueStatus, Examples) {
  QueueState q;
  q.buffer_capacity_pkts = 100;
  q.buffer_threshold_pkts = 50;
  q.expected_arrivals_pkts = 0;
  EXPECT_EQ(queue_status(q), 100);
  q.expected_arrivals_pkts = 100;
  EXPECT_EQ(queue_status(q), 50);
  q.expected_arrivals_pkts = 30;
  EXPECT_EQ(queue_status(q), 70);
}

TEST(QueueStatus, AlwaysWithinThresholdAndCapacity) {
  Rng rng = make_stream(8, "psi");
  for (int i = 0; i < 10'000; ++i) {
    QueueState q;
    q.buffer_threshold_pkts = std::uniform_real_distribution<double>(1, 50)(rng);
    q.buffer_capacity_pkts = q.buffer_threshold_pkts + std::uniform_real_distribution<double>(0.1, 50)(rng);
    q.expected_arrivals_pkts = std::uniform_real_distribution<double>(0, 200)(rng);
    const double psi = queue_status(q);
    EXPECT_GE(psi, q.buffer_threshold_pkts);
    EXPECT_LE(psi, q.buffer_capacity_pkts);
  }
}

TEST(QueueingDelay, Examples) {
  QueueState q;
  q.service_rate_pps = 2;
  q.arrival_rate_pps = 1;
  EXPECT_DOUBLE_EQ(queueing_delay(q), 1.0);
  q.service_rate_pps = 11;
  EXPECT_DOUBLE_EQ(queueing_delay(q), 0.1);
  EXPECT_DOUBLE_EQ(queueing_delay(q, QueueMode::PaperLiteral), -0.1);
  q.service_rate_pps = 1;
  try {
    queueing_delay(q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CriticalQueue);
  }
  q.service_rate_pps = 0.5;
  EXPECT_THROW(queueing_delay(q), Error);
  EXPECT_DOUBLE_EQ(queueing_delay(q, QueueMode::PaperLiteral), 2.0);
}

TEST(ArrivalWindow, SlidingSum) {
  ArrivalWindow w(3);
  w.push(1);
  w.push(2);
  w.push(3);
  EXPECT_EQ(w.expected(), 6);
  w.push(4);
  EXPECT_EQ(w.expected(), 9);
  EXPECT_DOUBLE_EQ(w.rate_pps(), 9 / 3e-3);
  ArrivalWindow z(0);
  EXPECT_EQ(z.window(), 1);
}

TEST(RequiredRate, SolvesDelayTarget) {
  Rng rng = make_stream(6, "rate");
  for (int i = 0; i < 500; ++i) {
    const double mean = std::uniform_real_distribution<double>(1e6, 1e7)(rng);
    const double mx = mean * std::uniform_real_distribution<double>(1, 3)(rng);
    const double lam = std::uniform_real_distribution<double>(0, 5)(rng);
    const double target = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    const double R = required_rate_bps(mean, mx, lam, target);
    EXPECT_GT(R, lam * mean);
    EXPECT_NEAR(mean / (R - lam * mean) + mx / R, target, 1e-9 * target);
  }
}

TEST(ArrivalTrace, RoundTripAndSizeCheck) {
  fwa::testing::TempDir d("arrivals");
  std::vector<ArrivalEvent> ev{{5, 1, 0, 1.5e6}, {2, 3, 1, 2e6}, {2, 0, 1, 1e6}};
  trace::write_arrivals((d / "a.csv").string(), ev);
  auto back = trace::read_arrivals((d / "a.csv").string());
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0], ev[1]);  // stable sort by tick
  EXPECT_EQ(back[1], ev[2]);
  EXPECT_EQ(back[2], ev[0]);
  {
    std::ofstream o(d / "b.csv");
    o << "tick_ms,cpe_id,service_id,bits\n0,0,0,10\n";
  }
  EXPECT_THROW(trace::read_arrivals((d / "b.csv").string()), Error);
  {
    std::ofstream o(d / "c.csv");
    o << "tick,cpe\n0,0\n";
  }
  EXPECT_THROW(trace::read_arrivals((d / "c.csv").string()), Error);
}
