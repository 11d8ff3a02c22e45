#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "support.hpp"
#include "tenantsim/error.hpp"
#include "tenantsim/harness.hpp"

using namespace tenantsim;
namespace fs = std::filesystem;

namespace {

// Textbook two-pass correlation.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

WindowRecord window(const std::string& m, double p95, std::size_t completions) {
  WindowRecord w;
  w.model = m;
  w.p95_ms = p95;
  w.completions = completions;
  return w;
}

TickRecord tick(double t, double tail, double sla) {
  TickRecord r;
  r.time = t;
  TickObservation o;
  o.model = "m";
  o.tail_ms = tail;
  o.sla_ms = sla;
  o.completions = 10;
  r.observed.push_back(o);
  return r;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text(e.path());
  return out;
}

}  // namespace

TEST_CASE("emu stats") {
  const auto odd = emu_stats({130, 100, 120});
  CHECK(odd.min == 100);
  CHECK(odd.max == 130);
  CHECK(odd.median == 120);
  CHECK(odd.mean == doctest::Approx(350.0 / 3));
  const auto even = emu_stats({100, 140, 110, 120});
  CHECK(even.median == 115);
  CHECK(emu_stats({}).values.empty());
}

TEST_CASE("pearson correlation") {
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(28), y(28);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = g(rng);
      y[i] = 0.6 * x[i] + g(rng);
    }
    const auto r = pearson(x, y);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(pearson_oracle(x, y)).epsilon(1e-12));
  }
  CHECK(*pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(*pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK_FALSE(pearson({1, 1, 1}, {1, 2, 3}).has_value());
  CHECK_FALSE(pearson({1, 2, 3}, {5, 5, 5}).has_value());
}

TEST_CASE("violation time fraction") {
  std::vector<WindowRecord> w{window("a", 50, 10), window("a", 120, 10),
                              window("a", 300, 0), window("b", 900, 5),
                              window("a", 100, 3)};
  // The empty window is counted but cannot violate; exactly-at-SLA passes.
  CHECK(violation_time_fraction(w, "a", 100) == doctest::Approx(0.25));
  CHECK(violation_time_fraction(w, "b", 100) == 1.0);
  CHECK(violation_time_fraction(w, "c", 100) == 0.0);
}

TEST_CASE("steady state tick") {
  const RmuConfig rmu;
  SimResult s;
  for (int k = 1; k <= 6; ++k) s.ticks.push_back(tick(k * 10.0, 50, 100));
  CHECK(steady_state_tick(s, rmu) == 1);

  s.ticks[1].observed[0].tail_ms = 130;  // violation at tick 2
  CHECK(steady_state_tick(s, rmu) == 3);

  ResizeEvent e;
  e.time = 40.0;  // resize at tick 4
  s.resizes.push_back(e);
  CHECK(steady_state_tick(s, rmu) == 5);

  s.ticks.back().observed[0].tail_ms = 101;  // the run ends unsettled
  CHECK_FALSE(steady_state_tick(s, rmu).has_value());
}

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg;
  cfg.scenario = "cluster_even";
  cfg.zoo = default_zoo();
  cfg.node = default_node();
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.scenario = "nope";
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.policies.push_back("greedy");
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.low_shares.push_back(1.5);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.fluctuating.t1 = 300;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("scenario output is deterministic across runs and threads") {
  const Zoo zoo = testing::toy_zoo();
  const NodeConfig node{8, 6, 64.0, 64.0};
  ExperimentConfig cfg;
  cfg.zoo = zoo;
  cfg.node = node;
  cfg.seeds = {7};
  cfg.profile.probe.expected_queries = 500;
  cfg.target_levels = {0, 100, 400};
  cfg.mid_level = 100;
  cfg.low_shares = {1.0, 0.5, 0.0};

  const fs::path root = fs::temp_directory_path() / "tenantsim_harness";
  fs::remove_all(root);
  std::vector<std::map<std::string, std::string>> trees;
  for (int threads : {1, 4}) {
    omp_set_num_threads(threads);
    const Context ctx = make_context(zoo, node, 7, cfg.profile, cfg.rmu);
    auto run = cfg;
    run.out = root / std::to_string(threads);
    for (const auto& s : {"cluster_even", "cluster_skewed", "affinity_validation"}) {
      run.scenario = s;
      run_scenario(run, ctx);
    }
    trees.push_back(read_tree(run.out));
  }
  REQUIRE(trees[0].size() >= 8);
  CHECK(trees[0] == trees[1]);
  const Json report = Json::parse(trees[0].at("cluster_even/report.json"));
  CHECK(report.at("seed") == 7);
  CHECK(report.contains("config_hash"));
  CHECK(report.contains("profile_version"));
}
