#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "tenantsim/error.hpp"
#include "tenantsim/io.hpp"
#include "tenantsim/rmu.hpp"

using namespace tenantsim;

namespace {

// Linear worker curves (q per worker) and tables that grow with ways for
// the cache-sensitive model only.
Profiles linear_profiles(const Zoo& zoo, const NodeConfig& node,
                         const std::map<std::string, double>& per_worker) {
  Profiles out;
  for (const auto& m : zoo.models) {
    ProfileSet p;
    p.model = m.id;
    p.capacity_knee = capacity_knee(m, node);
    p.qps_table = QpsTable(node.cores, node.llc_ways);
    const double q = per_worker.at(m.id);
    for (int w = 1; w <= p.capacity_knee; ++w) {
      p.qps_by_workers[w] = q * w;
      for (int x = 1; x <= node.llc_ways; ++x)
        p.qps_table.set(w, x, q * w / miss_factor(m, x));
    }
    out[m.id] = p;
  }
  return out;
}

TickObservation obs(const std::string& m, double slack, double traffic, double sla = 100.0) {
  return {m, slack * sla, traffic, sla, 100};
}

}  // namespace

TEST_CASE("server initialization") {
  const Zoo zoo = default_zoo();
  const NodeConfig node;
  const auto s = initialize_server({"WND", "DIN"}, zoo, node);
  CHECK(s.models.at("DIN").workers == 8);
  CHECK(s.models.at("WND").workers == 8);
  CHECK(s.models.at("DIN").ways == 6);  // odd way to the first id
  CHECK(s.models.at("WND").ways == 5);
  CHECK_NOTHROW(s.validate(node));

  const auto b = initialize_server({"DLRM-B", "NCF"}, zoo, node);
  CHECK(b.models.at("DLRM-B").workers == 8);
  CHECK(b.models.at("NCF").workers == 8);

  const auto one = initialize_server({"DLRM-B"}, zoo, node);
  CHECK(one.models.at("DLRM-B").workers == 8);
  CHECK(one.models.at("DLRM-B").ways == 11);

  const auto shared = initialize_server({"DIN", "WND"}, zoo, node, false);
  CHECK_FALSE(shared.partitioning_enabled);
  CHECK(shared.models.at("DIN").ways == 0);
  CHECK(shared.models.at("WND").ways == 0);

  CHECK_THROWS_AS(initialize_server({"DIN", "DIN"}, zoo, node), Error);
  CHECK_THROWS_AS(initialize_server({}, zoo, node), Error);
}

TEST_CASE("idle cores go to the partner of a memory-bound model") {
  Zoo zoo;
  zoo.models = {testing::toy_model("big", 10.0, 10.0, 40.0),
                testing::toy_model("small", 10.0, 10.0, 0.5)};
  NodeConfig node;
  node.mem_capacity_gb = 215.0;  // knee of `big` is 5
  const auto s = initialize_server({"big", "small"}, zoo, node);
  CHECK(s.models.at("big").workers == 5);
  CHECK(s.models.at("small").workers == 11);
}

TEST_CASE("adjust_workers lookups") {
  const std::map<int, double> curve{{1, 50}, {2, 100}, {3, 150}};
  CHECK(adjust_workers(curve, 50, 100, 120, 16) == 3);
  // Urgency below 1 is clamped: lookup at the raw traffic.
  CHECK(adjust_workers(curve, 90, 100, 100, 16) == 2);
  // tail/sla 1.2 inflates 100 q/s to 120.
  CHECK(adjust_workers(curve, 120, 100, 100, 16) == 3);
  CHECK(adjust_workers(curve, 120, 100, 80, 16) == 2);
  // Nothing suffices: the largest allowed.
  CHECK(adjust_workers(curve, 50, 100, 1000, 16) == 3);
  CHECK(adjust_workers(curve, 50, 100, 1000, 2) == 2);
  CHECK(adjust_workers(curve, 50, 100, 0, 16) == 1);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> t(0, 400);
  for (int i = 0; i < 1000; ++i) {
    const double lo = t(rng), hi = lo + t(rng);
    CHECK(adjust_workers(curve, 50, 100, lo, 16) <= adjust_workers(curve, 50, 100, hi, 16));
  }
}

TEST_CASE("adjust_llc_partition agrees with brute force on 500 random tables") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> ways(2, 11), workers(1, 4);
  int mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const int max_ways = ways(rng);
    const auto ta = oracle::random_table(rng, 4, max_ways);
    const auto tb = oracle::random_table(rng, 4, max_ways);
    const int wa = workers(rng), wb = workers(rng);
    const auto got = adjust_llc_partition(ta, wa, tb, wb, max_ways);
    const auto want = oracle::partition(ta, wa, tb, wb, max_ways);
    if (got.first != want.a || got.second != want.b) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("adjust_llc_partition shapes") {
  QpsTable flat(2, 11), rising(2, 11);
  for (int w = 1; w <= 2; ++w)
    for (int x = 1; x <= 11; ++x) {
      flat.set(w, x, 100.0);
      rising.set(w, x, 10.0 * x);
    }
  CHECK(adjust_llc_partition(flat, 1, flat, 1, 11) == std::pair{6, 5});
  CHECK(adjust_llc_partition(flat, 1, rising, 2, 11) == std::pair{1, 10});
  CHECK(adjust_llc_partition(rising, 2, flat, 1, 11) == std::pair{10, 1});
}

TEST_CASE("monitor tick") {
  const Zoo zoo = default_zoo();
  const NodeConfig node;
  const auto profiles = linear_profiles(zoo, node, {{"DLRM-A", 100}, {"DLRM-B", 20},
                                                    {"DLRM-C", 80}, {"DLRM-D", 90},
                                                    {"NCF", 1000}, {"DIEN", 300},
                                                    {"DIN", 80}, {"WND", 400}});
  const auto init = initialize_server({"DIN", "NCF"}, zoo, node);

  SUBCASE("in band: nothing moves") {
    const auto d = monitor_tick(init, {obs("DIN", 0.9, 500), obs("NCF", 0.85, 5000)}, zoo,
                                node, profiles);
    CHECK_FALSE(d.workers_changed);
    CHECK(d.adjusted.empty());
    CHECK(d.next.models == init.models);
  }
  SUBCASE("violation: workers from the lookup, then ways re-split") {
    const auto d = monitor_tick(init, {obs("DIN", 1.2, 400), obs("NCF", 0.9, 2000)}, zoo,
                                node, profiles);
    // 1.2 x 400 = 480 q/s -> 6 workers at 80 q/s each.
    CHECK(d.workers_changed);
    CHECK(d.next.models.at("DIN").workers == 6);
    CHECK(d.next.models.at("NCF").workers == 8);
    const auto [xa, xb] = adjust_llc_partition(profiles.at("DIN").qps_table, 6,
                                               profiles.at("NCF").qps_table, 8, 11);
    CHECK(d.next.models.at("DIN").ways == xa);
    CHECK(d.next.models.at("NCF").ways == xb);
    // Demand beyond the free cores is capped.
    const auto capped = monitor_tick(init, {obs("DIN", 1.2, 600), obs("NCF", 0.9, 2000)},
                                     zoo, node, profiles);
    CHECK(capped.next.models.at("DIN").workers == 8);
  }
  SUBCASE("over-provisioned: shrink first, freed cores go to the violator") {
    const auto d = monitor_tick(init, {obs("DIN", 1.5, 600), obs("NCF", 0.3, 2500)}, zoo,
                                node, profiles);
    CHECK(d.next.models.at("NCF").workers == 3);   // 2500 / 1000 -> 3
    CHECK(d.next.models.at("DIN").workers == 12);  // 900 / 80 -> 12, 13 free
    CHECK(d.adjusted == std::vector<std::string>{"NCF", "DIN"});
  }
  SUBCASE("no completions under traffic: leave the model alone") {
    TickObservation silent{"DIN", 0.0, 300.0, 100.0, 0};
    const auto d = monitor_tick(init, {silent, obs("NCF", 0.9, 100)}, zoo, node, profiles);
    CHECK_FALSE(d.workers_changed);
  }
  SUBCASE("partitioning off: ways untouched") {
    const auto shared = initialize_server({"DIN", "NCF"}, zoo, node, false);
    const auto d = monitor_tick(shared, {obs("DIN", 1.2, 600), obs("NCF", 0.9, 2000)}, zoo,
                                node, profiles);
    CHECK(d.next.models.at("DIN").ways == 0);
    CHECK(d.next.models.at("NCF").ways == 0);
  }
}

TEST_CASE("monitor tick respects memory next to the partner") {
  const Zoo zoo = default_zoo();
  const NodeConfig node;
  const auto profiles = linear_profiles(zoo, node, {{"DLRM-A", 100}, {"DLRM-B", 20},
                                                    {"DLRM-C", 80}, {"DLRM-D", 90},
                                                    {"NCF", 1000}, {"DIEN", 300},
                                                    {"DIN", 80}, {"WND", 400}});
  auto s = initialize_server({"DLRM-B", "DLRM-D"}, zoo, node);
  REQUIRE(s.models.at("DLRM-B").workers == 6);
  const auto d = monitor_tick(s, {obs("DLRM-B", 2.0, 500, 400), obs("DLRM-D", 0.9, 100)},
                              zoo, node, profiles);
  CHECK(check_memory_capacity(zoo, d.next, node) == MemoryCheck::ok);
  CHECK(d.next.models.at("DLRM-B").workers == 6);
  CHECK_NOTHROW(d.next.validate(node));
}

TEST_CASE("random ticks keep allocations valid") {
  const Zoo zoo = default_zoo();
  const NodeConfig node;
  const auto profiles = linear_profiles(zoo, node, {{"DLRM-A", 100}, {"DLRM-B", 20},
                                                    {"DLRM-C", 80}, {"DLRM-D", 90},
                                                    {"NCF", 1000}, {"DIEN", 300},
                                                    {"DIN", 80}, {"WND", 400}});
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> slack(0.1, 3.0), traffic(0, 3000);
  std::vector<std::string> ids;
  for (const auto& m : zoo.models) ids.push_back(m.id);
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  for (int i = 0; i < 300; ++i) {
    const auto a = ids[pick(rng)], b = ids[pick(rng)];
    if (a == b) continue;
    auto s = initialize_server({a, b}, zoo, node);
    PartiesState ps;
    auto p = s;
    for (int k = 0; k < 10; ++k) {
      const std::vector<TickObservation> o{obs(a, slack(rng), traffic(rng)),
                                           obs(b, slack(rng), traffic(rng))};
      s = monitor_tick(s, o, zoo, node, profiles).next;
      p = parties_step(p, o, zoo, node, ps);
      for (const auto* x : {&s, &p}) {
        CHECK_NOTHROW(x->validate(node));
        CHECK(check_memory_capacity(zoo, *x, node) == MemoryCheck::ok);
        for (const auto& [id, m] : x->models) CHECK(m.workers >= 1);
      }
    }
  }
}

TEST_CASE("PARTIES alternates cores and ways") {
  const Zoo zoo = default_zoo();
  const NodeConfig node;
  const auto init = initialize_server({"DIN", "WND"}, zoo, node);
  PartiesState st;
  const std::vector<TickObservation> o{obs("DIN", 1.3, 100), obs("WND", 0.5, 100)};
  const auto t1 = parties_step(init, o, zoo, node, st);
  CHECK(t1.models.at("DIN").workers == 9);
  CHECK(t1.models.at("WND").workers == 7);
  CHECK(t1.models.at("DIN").ways == 6);
  const auto t2 = parties_step(t1, o, zoo, node, st);
  CHECK(t2.models.at("DIN").workers == 9);
  CHECK(t2.models.at("DIN").ways == 7);
  CHECK(t2.models.at("WND").ways == 4);
  const auto t3 = parties_step(t2, o, zoo, node, st);
  CHECK(t3.models.at("DIN").workers == 10);

  PartiesState fresh;
  const std::vector<TickObservation> band{obs("DIN", 0.9, 100), obs("WND", 0.85, 100)};
  CHECK(parties_step(init, band, zoo, node, fresh).models == init.models);
  // A violator without a donor below the band gets nothing.
  const std::vector<TickObservation> no_donor{obs("DIN", 1.3, 100), obs("WND", 0.9, 100)};
  CHECK(parties_step(init, no_donor, zoo, node, fresh).models == init.models);
}

TEST_CASE("PARTIES falls back to the other resource") {
  const Zoo zoo = default_zoo();
  const NodeConfig node;
  AllocationState s;
  s.models["DIN"] = {15, 6};
  s.models["WND"] = {1, 5};
  PartiesState st;  // wants a core, WND has none to spare
  const std::vector<TickObservation> o{obs("DIN", 1.3, 100), obs("WND", 0.5, 100)};
  const auto n = parties_step(s, o, zoo, node, st);
  CHECK(n.models.at("DIN").workers == 15);
  CHECK(n.models.at("DIN").ways == 7);
}

TEST_CASE("rmu config validation") {
  RmuConfig c;
  CHECK_NOTHROW(c.validate());
  c.slack_low = 1.2;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.t_monitor = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}
