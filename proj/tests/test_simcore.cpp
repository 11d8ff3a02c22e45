#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"
#include "tenantsim/error.hpp"
#include "tenantsim/simcore.hpp"

using namespace tenantsim;

namespace {

AllocationState two_model_alloc(int wa, int xa, int wb, int xb) {
  AllocationState a;
  a.models["alpha"] = {wa, xa};
  a.models["gamma"] = {wb, xb};
  return a;
}

// Lindley recursion for one FIFO server with deterministic service, written
// independently of the engine. Returns the nearest-rank p95 of sojourn times.
double md1_p95_ms(double rate, double service_s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(rate);
  const int n = 200000;
  std::vector<double> sojourn;
  sojourn.reserve(n);
  double t = 0.0, free_at = 0.0;
  for (int i = 0; i < n; ++i) {
    t += gap(rng);
    const double start = std::max(t, free_at);
    free_at = start + service_s;
    if (i >= n / 10) sojourn.push_back((free_at - t) * 1e3);
  }
  std::sort(sojourn.begin(), sojourn.end());
  return sojourn[static_cast<std::size_t>(std::ceil(0.95 * sojourn.size())) - 1];
}

}  // namespace

TEST_CASE("percentile uses nearest rank") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(percentile(v, 95) == 95.0);
  std::vector<double> one{7.5};
  CHECK(percentile(one, 0) == 7.5);
  CHECK(percentile(one, 100) == 7.5);
  std::vector<double> three{5, 1, 3};
  CHECK(percentile(three, 50) == 3.0);
  std::vector<double> empty;
  CHECK_THROWS_AS(percentile(empty, 50), Error);
}

TEST_CASE("compute_emu sums load fractions") {
  std::vector<double> load{50, 80}, iso{100, 100};
  CHECK(compute_emu(load, iso) == doctest::Approx(130.0));
  std::vector<double> half{25, 40}, iso2{50, 80};
  CHECK(compute_emu(half, iso2) == doctest::Approx(100.0));
  std::vector<double> zero{0.0};
  std::vector<double> single{3.0};
  CHECK_THROWS_AS(compute_emu(single, zero), Error);
}

TEST_CASE("zero arrival rate yields empty metrics") {
  const Zoo zoo = testing::toy_zoo();
  NodeConfig node;
  AllocationState a;
  a.models["alpha"] = {4, 11};
  auto r = run_sim(zoo, node, a, LoadSchedule::constant({{"alpha", 0.0}}), 10.0, 1);
  const auto& s = r.summary.at("alpha");
  CHECK(s.arrived == 0);
  CHECK(s.p95_ms == 0.0);
  CHECK(s.violation_frac == 0.0);
  CHECK(r.summary.mean_core_util == 0.0);
  for (const auto& w : r.windows) CHECK(w.violation_frac == 0.0);
}

TEST_CASE("light traffic latency equals service time") {
  Zoo zoo = testing::toy_zoo();
  zoo.batch.fixed = 100;
  NodeConfig node;
  AllocationState a;
  a.models["alpha"] = {1, 11};
  const double svc = service_time(zoo, "alpha", 100, a, node);
  auto r = run_sim(zoo, node, a, LoadSchedule::constant({{"alpha", 0.5}}), 200.0, 3);
  CHECK(r.summary.at("alpha").p50_ms == doctest::Approx(svc * 1e3).epsilon(1e-9));
  CHECK(r.summary.at("alpha").p95_ms <= svc * 1e3 * 1.5);
}

TEST_CASE("OOM allocation refuses to start") {
  Zoo zoo = testing::toy_zoo();
  NodeConfig node;
  node.mem_capacity_gb = 10.0;
  auto a = two_model_alloc(4, 5, 4, 6);  // 4*1 + 4*4 = 20 GB
  CHECK_THROWS_AS(
      run_sim(zoo, node, a, LoadSchedule::constant({{"alpha", 1.0}}), 1.0, 1),
      Error);
}

TEST_CASE("fast engine matches the event-queue engine query by query") {
  const Zoo zoo = testing::toy_zoo();
  NodeConfig node;
  struct Case {
    AllocationState alloc;
    double ra, rg;
  };
  std::vector<Case> cases{
      {two_model_alloc(8, 6, 8, 5), 400.0, 300.0},
      {two_model_alloc(2, 1, 12, 10), 250.0, 900.0},  // contended bandwidth
      {two_model_alloc(1, 5, 1, 6), 150.0, 200.0},    // overloaded
  };
  AllocationState shared = two_model_alloc(10, 0, 6, 0);
  shared.partitioning_enabled = false;
  cases.push_back({shared, 600.0, 500.0});

  std::uint64_t seed = 11;
  for (const auto& c : cases) {
    const auto sched = LoadSchedule::constant({{"alpha", c.ra}, {"gamma", c.rg}});
    SimOptions opt;
    opt.measure_from = 0.0;
    auto fast = run_sim(zoo, node, c.alloc, sched, 30.0, seed, opt);
    auto ref = run_sim_reference(zoo, node, c.alloc, sched, 30.0, seed);
    for (const auto& id : {"alpha", "gamma"}) {
      const auto& a = fast.measured_latencies_ms.at(id);
      const auto& b = ref.measured_latencies_ms.at(id);
      REQUIRE(a.size() == b.size());
      CHECK(a == b);
      CHECK(fast.summary.at(id).p95_ms == ref.summary.at(id).p95_ms);
    }
    CHECK(fast.conservation_ok);
    ++seed;
  }
}

TEST_CASE("latency never undercuts service time") {
  Zoo zoo = testing::toy_zoo();
  zoo.batch.fixed = 64;
  NodeConfig node;
  auto a = two_model_alloc(3, 5, 5, 6);
  SimOptions opt;
  opt.measure_from = 0.0;
  auto r = run_sim(zoo, node, a,
                   LoadSchedule::constant({{"alpha", 300.0}, {"gamma", 400.0}}),
                   20.0, 5, opt);
  for (const auto& id : {"alpha", "gamma"}) {
    const double svc = service_time(zoo, id, 64, a, node) * 1e3;
    for (double l : r.measured_latencies_ms.at(id)) CHECK(l >= svc * (1 - 1e-12));
  }
}

TEST_CASE("same seed gives bit-identical traces") {
  const Zoo zoo = testing::toy_zoo();
  NodeConfig node;
  auto a = two_model_alloc(6, 5, 6, 6);
  auto sched = LoadSchedule::constant({{"alpha", 500.0}, {"gamma", 300.0}});
  auto r1 = run_sim(zoo, node, a, sched, 20.0, 42);
  auto r2 = run_sim(zoo, node, a, sched, 20.0, 42);
  auto r3 = run_sim(zoo, node, a, sched, 20.0, 43);
  CHECK(r1.trace_hash == r2.trace_hash);
  CHECK(r1.trace_hash != r3.trace_hash);
  REQUIRE(r1.windows.size() == r2.windows.size());
  for (std::size_t i = 0; i < r1.windows.size(); ++i) {
    CHECK(r1.windows[i].p95_ms == r2.windows[i].p95_ms);
    CHECK(r1.windows[i].qps == r2.windows[i].qps);
  }
}

TEST_CASE("window metrics stay within their ranges") {
  const Zoo zoo = testing::toy_zoo();
  NodeConfig node;
  auto a = two_model_alloc(2, 5, 10, 6);
  auto r = run_sim(zoo, node, a,
                   LoadSchedule::constant({{"alpha", 260.0}, {"gamma", 700.0}}),
                   30.0, 9);
  CHECK(r.windows.size() == 60);
  for (const auto& w : r.windows) {
    CHECK(w.violation_frac >= 0.0);
    CHECK(w.violation_frac <= 1.0);
    CHECK(w.core_util >= 0.0);
    CHECK(w.core_util <= 1.0 + 1e-12);
    CHECK(w.bw_util >= 0.0);
    CHECK(w.bw_util <= 1.0 + 1e-12);
  }
  for (const auto& m : r.summary.models) {
    CHECK(m.p95_ms >= m.p50_ms);
    CHECK(m.p50_ms >= 0.0);
  }
  CHECK(r.conservation_ok);
}

TEST_CASE("max load: zero workers and SLA monotonicity") {
  Zoo zoo = testing::toy_zoo();
  NodeConfig node;
  auto none = measure_max_load(zoo, node, "alpha", 0, 11, 1);
  CHECK(none.max_scale == 0.0);

  auto base = measure_max_load(zoo, node, "beta", 3, 11, 7);
  zoo.models[1].sla_ms *= 2;
  auto relaxed = measure_max_load(zoo, node, "beta", 3, 11, 7);
  CHECK(base.max_scale > 0.0);
  CHECK(relaxed.max_scale >= base.max_scale);
}

TEST_CASE("max load is reproducible with a fixed seed") {
  const Zoo zoo = testing::toy_zoo();
  NodeConfig node;
  auto a = measure_max_load(zoo, node, "gamma", 5, 4, 99);
  auto b = measure_max_load(zoo, node, "gamma", 5, 4, 99);
  CHECK(a.max_scale == b.max_scale);
  REQUIRE(!a.trace.empty());
  // Bracket property: the next probe above the result failed.
  double lowest_fail = 1e300;
  for (const auto& p : a.trace)
    if (!p.pass) lowest_fail = std::min(lowest_fail, p.scale);
  CHECK(lowest_fail <= a.max_scale * 1.02 * (1 + 1e-9));
}

TEST_CASE("max load of a deterministic single server matches brute force") {
  Zoo zoo;
  zoo.batch.fixed = 1;
  zoo.models.push_back(testing::toy_model("toy", 10000.0, 100.0));  // 10 ms
  NodeConfig node;
  const double measured = measure_max_load(zoo, node, "toy", 1, 11, 5).max_scale;

  double oracle = 0.0;
  for (int rate = 1; rate < 100; ++rate) {
    if (md1_p95_ms(rate, 0.010, 1234) <= 100.0)
      oracle = rate;
    else
      break;
  }
  REQUIRE(oracle > 0.0);
  CHECK(std::abs(measured - oracle) / oracle <= 0.10);
}

TEST_CASE("minimal probe failing reports zero with a diagnostic") {
  Zoo zoo;
  zoo.batch.fixed = 10;
  zoo.models.push_back(testing::toy_model("slow", 5000.0, 10.0));  // 50 ms > SLA
  NodeConfig node;
  auto r = measure_max_load(zoo, node, "slow", 2, 11, 1);
  CHECK(r.max_scale == 0.0);
  CHECK(!r.diagnostic.empty());
}
