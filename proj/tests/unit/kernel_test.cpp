#include "qnetsim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "stats.hpp"

using namespace qnet;

TEST_CASE("time conversion round trips") {
  CHECK(time_from_seconds(1.0) == kSecond);
  CHECK(time_from_seconds(0.25e-3) == 250 * kMicrosecond);
  CHECK(time_to_seconds(kMillisecond) == doctest::Approx(1e-3));
  CHECK(time_from_seconds(0.0) == 0);
}

TEST_CASE("events execute in time order with FIFO tie-break") {
  Timeline tl(1);
  std::vector<int> order;
  tl.schedule(10, "t", [&] { order.push_back(1); });
  tl.schedule(5, "t", [&] { order.push_back(2); });
  tl.schedule(10, "t", [&] { order.push_back(3); });
  tl.schedule(10, "t", [&] { order.push_back(4); });
  tl.run(20);
  CHECK(order == std::vector<int>{2, 1, 3, 4});
}

TEST_CASE("scheduling at the current instant is allowed") {
  Timeline tl(1);
  bool ran = false;
  tl.schedule(5, "t", [&] {
    // An event may schedule another event at its own timestamp.
    tl.schedule(5, "t", [&] { ran = true; });
  });
  tl.run(5);
  CHECK(ran);
}

TEST_CASE("scheduling into the past is a causality error") {
  Timeline tl(1);
  tl.schedule(10, "t", [] {});
  tl.run(10);
  CHECK_THROWS_AS(tl.schedule(9, "offender", [] {}), SimulationError);
  try {
    tl.schedule(3, "offender", [] {});
    FAIL("expected throw");
  } catch (const SimulationError& e) {
    CHECK(std::string(e.what()).find("offender") != std::string::npos);
  }
}

TEST_CASE("run advances now to the stop time") {
  Timeline tl(1);
  SUBCASE("empty queue") {
    auto s = tl.run(10 * kSecond);
    CHECK(s.now == 10 * kSecond);
    CHECK(s.executed == 0);
  }
  SUBCASE("events after stop stay pending") {
    int ran = 0;
    tl.schedule(1 * kSecond, "t", [&] { ++ran; });
    tl.schedule(2 * kSecond, "t", [&] { ++ran; });
    tl.schedule(3 * kSecond, "t", [&] { ++ran; });
    auto s = tl.run(2 * kSecond);
    CHECK(ran == 2);
    CHECK(s.now == 2 * kSecond);
    CHECK(s.pending == 1);
    // A later run picks up the remainder.
    s = tl.run(5 * kSecond);
    CHECK(ran == 3);
    CHECK(s.pending == 0);
  }
}

TEST_CASE("cancellation is lazy and idempotent") {
  Timeline tl(1);
  int ran = 0;
  auto h = tl.schedule_cancellable(10, "t", [&] { ++ran; });
  auto h2 = tl.schedule_cancellable(20, "t", [&] { ++ran; });
  CHECK(tl.cancel(h));
  CHECK_FALSE(tl.cancel(h));  // double cancel
  tl.run(30);
  CHECK(ran == 1);
  CHECK_FALSE(tl.cancel(h2));  // already executed
  auto s = tl.stats();
  CHECK(s.scheduled == 2);
  CHECK(s.executed == 1);
  CHECK(s.cancelled == 1);
  CHECK(s.pending == 0);
}

TEST_CASE("conservation law holds through a random schedule/cancel workload") {
  Timeline tl(99);
  Rng driver(123);
  std::vector<EventHandle> handles;
  for (int round = 0; round < 50; ++round) {
    const SimTime base = tl.now();
    for (int i = 0; i < 40; ++i) {
      const SimTime when = base + driver.uniform_int(0, 1000);
      if (driver.bernoulli(0.5)) {
        handles.push_back(tl.schedule_cancellable(when, "w", [] {}));
      } else {
        tl.schedule(when, "w", [] {});
      }
    }
    for (auto& h : handles)
      if (driver.bernoulli(0.3)) tl.cancel(h);
    handles.clear();
    tl.run(base + driver.uniform_int(0, 1200));
    CHECK(tl.conservation_holds());
  }
  tl.run(tl.now() + 2000);
  auto s = tl.stats();
  CHECK(s.scheduled == 50 * 40);
  CHECK(s.pending == 0);
  CHECK(s.scheduled == s.executed + s.cancelled);
}

TEST_CASE("execution timestamps never decrease") {
  Timeline tl(7);
  Rng driver(5);
  std::vector<SimTime> seen;
  std::function<void()> spawn = [&] {
    seen.push_back(tl.now());
    if (seen.size() < 500)
      tl.schedule(tl.now() + driver.uniform_int(0, 100), "t", spawn);
  };
  for (int i = 0; i < 20; ++i)
    tl.schedule(driver.uniform_int(0, 50), "t", spawn);
  tl.run(1'000'000);
  CHECK(std::is_sorted(seen.begin(), seen.end()));
}

TEST_CASE("handler failures abort the run naming the event") {
  Timeline tl(1);
  tl.schedule(4, "flaky-entity", [] { throw std::runtime_error("boom"); });
  try {
    tl.run(10);
    FAIL("expected throw");
  } catch (const SimulationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("flaky-entity") != std::string::npos);
    CHECK(msg.find("boom") != std::string::npos);
  }
}

TEST_CASE("identical seeds give identical event traces") {
  auto trace = [](std::uint64_t seed) {
    Timeline tl(seed);
    std::vector<std::pair<SimTime, double>> out;
    std::function<void()> step = [&] {
      const double draw = tl.rng().uniform01();
      out.emplace_back(tl.now(), draw);
      if (out.size() < 300)
        tl.schedule(tl.now() + 1 + tl.rng().uniform_int(0, 20), "t", step);
    };
    tl.schedule(0, "t", step);
    tl.run(100'000);
    return out;
  };
  CHECK(trace(42) == trace(42));
  CHECK(trace(42) != trace(43));
}

TEST_CASE("rng distribution edge cases and parameter validation") {
  Timeline tl(11);
  Rng& rng = tl.rng();
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(rng.bernoulli(0.0));
    CHECK(rng.bernoulli(1.0));
  }
  CHECK_THROWS_AS(rng.bernoulli(1.5), SimulationError);
  CHECK_THROWS_AS(rng.bernoulli(-0.1), SimulationError);
  CHECK_THROWS_AS(rng.exponential(0.0), SimulationError);
  CHECK_THROWS_AS(rng.exponential(-2.0), SimulationError);
  CHECK_THROWS_AS(rng.uniform(2.0, 1.0), SimulationError);
  CHECK_THROWS_AS(rng.uniform_int(3, 2), SimulationError);
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.uniform_int(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    const double u = rng.uniform(2.0, 5.0);
    CHECK(u >= 2.0);
    CHECK(u < 5.0);
  }
}

TEST_CASE("rng sample means match the distributions") {
  Rng rng(2024);
  const int n = 100'000;
  double sum_u = 0, sum_e = 0;
  std::int64_t heads = 0, sum_i = 0;
  for (int i = 0; i < n; ++i) {
    sum_u += rng.uniform(0.0, 2.0);
    sum_e += rng.exponential(4.0);
    heads += rng.bernoulli(0.3) ? 1 : 0;
    sum_i += rng.uniform_int(1, 6);
  }
  // uniform(0,2): mean 1, sd 2/sqrt(12)
  CHECK(within_3sigma_mean(sum_u / n, 1.0, 2.0 / std::sqrt(12.0), n));
  // exponential(rate 4): mean 0.25, sd 0.25
  CHECK(within_3sigma_mean(sum_e / n, 0.25, 0.25, n));
  CHECK(within_3sigma_binomial(heads, n, 0.3));
  // die roll: mean 3.5, sd sqrt(35/12)
  CHECK(within_3sigma_mean(static_cast<double>(sum_i) / n, 3.5,
                           std::sqrt(35.0 / 12.0), n));
}
