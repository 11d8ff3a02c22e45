// End-to-end acceptance run on the default zoo. Prints one PASS/FAIL line per
// criterion and exits 4 if any fails.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "oracles.hpp"
#include "tenantsim/affinity.hpp"
#include "tenantsim/calibrate.hpp"
#include "tenantsim/harness.hpp"
#include "tenantsim/rmu.hpp"

using namespace tenantsim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, bool ok, const std::string& what) {
  std::printf("[%s] %2d %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double v, int digits = 2) { return fmt(v, digits); }

struct SuiteRun {
  double profile_seconds = 0.0;
  std::map<std::string, double> seconds;
  Context ctx;
};

// Profiles, then every scenario, into `out`.
SuiteRun run_suite(const fs::path& out, int threads) {
  omp_set_num_threads(threads);
  fs::remove_all(out);
  SuiteRun run;
  ExperimentConfig cfg;
  cfg.zoo = default_zoo();
  cfg.node = default_node();
  cfg.out = out;
  cfg.node_variants = default_node_variants();

  auto t0 = Clock::now();
  run.ctx = make_context(cfg.zoo, cfg.node, cfg.seed(), cfg.profile, cfg.rmu);
  run.profile_seconds = since(t0);
  save_profiles(out / "profiles", run.ctx.profiles);

  for (const auto& s : kScenarios) {
    cfg.scenario = s;
    t0 = Clock::now();
    run_scenario(cfg, run.ctx);
    run.seconds[s] = since(t0);
    std::printf("  %-22s %7.1f s (threads=%d)\n", s.c_str(), run.seconds[s], threads);
    std::fflush(stdout);
  }
  return run;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text(e.path());
  return out;
}

Json report(const fs::path& out, const std::string& scenario) {
  return Json::parse(read_text(out / scenario / "report.json"));
}

void oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> ways(2, 11), workers(1, 4);
  int llc_bad = 0, part_bad = 0;
  for (int i = 0; i < 500; ++i) {
    const int n = ways(rng);
    const auto a = oracle::random_curve(rng, n, i % 2 == 0);
    const auto b = oracle::random_curve(rng, n, i % 3 == 0);
    const auto got = coaff_llc(a, b, n);
    const auto want = oracle::coaff_llc(a, b, n);
    if (got.ways_a != want.a || got.ways_b != want.b || std::abs(got.value - want.value) > 1e-12)
      ++llc_bad;
  }
  for (int i = 0; i < 500; ++i) {
    const int n = ways(rng);
    const auto ta = oracle::random_table(rng, 4, n);
    const auto tb = oracle::random_table(rng, 4, n);
    const int wa = workers(rng), wb = workers(rng);
    const auto got = adjust_llc_partition(ta, wa, tb, wb, n);
    const auto want = oracle::partition(ta, wa, tb, wb, n);
    if (got.first != want.a || got.second != want.b) ++part_bad;
  }
  const double secs = since(t0);
  verdict(1, llc_bad == 0 && part_bad == 0 && secs < 10.0,
          "oracle equivalence: coaff_llc " + std::to_string(llc_bad) +
              "/500 and adjust_llc_partition " + std::to_string(part_bad) +
              "/500 mismatches, " + num(secs, 3) + " s (< 10 s)");
}

void dram_arithmetic() {
  bool clamp = true;
  for (double d = 0.5; d <= 128.0; d += 0.5) clamp = clamp && coaff_dram(d * 0.3, d * 0.7, 128) == 1.0;
  const bool exact = coaff_dram(100, 60, 128) == 0.8;
  verdict(2, exact && clamp,
          std::string("coaff_dram(100,60,128) ") + (exact ? "== 0.8" : "!= 0.8") +
              ", clamped at 1.0 below saturation: " + (clamp ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root =
      argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "tenantsim_acceptance";
  const auto t_start = Clock::now();

  oracle_equivalence();
  dram_arithmetic();

  std::printf("suite run A\n");
  const SuiteRun a = run_suite(root / "a", 1);
  std::printf("suite run B\n");
  run_suite(root / "b", 4);
  const fs::path out = root / "a";
  const Context& ctx = a.ctx;

  {
    const auto c = check_calibration(ctx.profiles, ctx.node);
    std::string classes;
    for (const auto& [m, s] : c.classes)
      classes += (classes.empty() ? "" : " ") + m + "=" + (s == Scalability::Low ? "Low" : "High");
    const bool fast = a.profile_seconds < 300.0;
    verdict(3, c.all() && fast,
            "calibration: B last worker " + std::to_string(c.b_last_worker) +
                " (== 8), D gain 12->16 " + num(100 * c.d_top_gain) + "% (<= 5%), D at 1 way " +
                num(100 * c.d_one_way) + "% (>= 90%), DIEN at 2 ways " +
                num(100 * c.dien_two_way) + "% (>= 80%), classes [" + classes +
                "], profiling " + num(a.profile_seconds, 1) + " s (< 300 s)");
  }

  {
    const Json r = report(out, "affinity_validation");
    const double secs = a.seconds.at("affinity_validation");
    const bool defined = !r.at("pearson_r").is_null();
    const double pr = defined ? r.at("pearson_r").get<double>() : 0.0;
    verdict(4, defined && pr >= 0.8 && r.at("pairs").size() == 28 && secs < 120.0,
            "affinity validity: pearson r " + (defined ? num(pr, 3) : std::string("undefined")) +
                " over " + std::to_string(r.at("pairs").size()) + " pairs (>= 0.8), " +
                num(secs, 1) + " s (< 120 s)");
  }

  {
    const Json p = report(out, "emu_constant").at("policies");
    const auto stat = [&](const std::string& policy, const std::string& key) {
      return p.at(policy).at("stats").at(key).get<double>();
    };
    bool drs_all = true;
    for (const auto& v : p.at("deeprecsys").at("stats").at("values"))
      drs_all = drs_all && v.get<double>() == 100.0;
    const double secs = a.seconds.at("emu_constant");
    const bool ok = drs_all && stat("random", "min") < 100.0 && stat("random+", "min") >= 100.0 &&
                    stat("hera", "min") >= 100.0 &&
                    stat("hera", "mean") >= stat("deeprecsys", "mean") + 20.0 &&
                    stat("hera", "mean") >= stat("random+", "mean") && secs < 300.0;
    verdict(5, ok,
            "EMU ordering: deeprecsys all 100: " + std::string(drs_all ? "yes" : "no") +
                ", random min " + num(stat("random", "min")) + " (< 100), random+ min " +
                num(stat("random+", "min")) + " and hera min " + num(stat("hera", "min")) +
                " (>= 100), hera mean " + num(stat("hera", "mean")) + " vs deeprecsys+20 " +
                num(stat("deeprecsys", "mean") + 20.0) + " and random+ mean " +
                num(stat("random+", "mean")) + ", " + num(secs, 1) + " s (< 300 s)");
  }

  {
    const Json r = report(out, "fluctuating");
    const auto& hera = r.at("runs").at("hera").at("violation_time_frac");
    const auto& parties = r.at("runs").at("parties").at("violation_time_frac");
    bool lower = true;
    std::string detail;
    for (const auto& [m, v] : hera.items()) {
      lower = lower && v.get<double>() < parties.at(m).get<double>();
      detail += " " + m + " " + num(v.get<double>(), 3) + " vs " +
                num(parties.at(m).get<double>(), 3);
    }
    const Json tick = r.at("steady_state").at("tick");
    const bool steady = !tick.is_null() && tick.get<int>() <= 5;
    verdict(6, lower && hera.size() == 2 && steady,
            "resource managers: violation time hera vs parties:" + detail +
                "; steady from tick " + (tick.is_null() ? std::string("never") : tick.dump()) +
                " (<= 5)");
  }

  {
    const Json r = report(out, "cluster_even");
    bool ordered = true;
    double reduction = 0.0;
    std::string detail;
    for (const auto& row : r.at("rows")) {
      const auto& s = row.at("servers");
      const int h = s.at("hera"), rnd = s.at("random"), d = s.at("deeprecsys");
      ordered = ordered && h <= rnd && rnd <= d;
      detail += " " + row.at("label").get<std::string>() + ":" + std::to_string(h) + "/" +
                std::to_string(rnd) + "/" + std::to_string(d);
      if (row.at("level").get<double>() == 1000.0 && d > 0) reduction = 1.0 - double(h) / d;
    }
    const double secs = a.seconds.at("cluster_even");
    verdict(7, ordered && reduction >= 0.10 && secs < 120.0,
            "cluster sweep hera/random/deeprecsys:" + detail + "; mid-level reduction " +
                num(100 * reduction, 1) + "% (>= 10%), " + num(secs, 1) + " s (< 120 s)");
  }

  {
    const Json r = report(out, "ablation_cat");
    const double drs = r.at("deeprecsys_emu");
    const double cat = r.at("hera_cat").at("mean");
    const double no_cat = r.at("hera_no_cat").at("mean");
    verdict(8, no_cat > drs && cat >= no_cat,
            "ablation: mean EMU deeprecsys " + num(drs) + ", hera without partitioning " +
                num(no_cat) + ", hera with partitioning " + num(cat));
  }

  {
    const auto ta = read_tree(root / "a");
    const auto tb = read_tree(root / "b");
    std::size_t differing = 0;
    for (const auto& [path, text] : ta) {
      const auto it = tb.find(path);
      if (it == tb.end() || it->second != text) {
        ++differing;
        std::printf("  differs: %s\n", path.c_str());
      }
    }
    const bool same = differing == 0 && ta.size() == tb.size();
    verdict(9, same && !ta.empty(),
            "determinism: " + std::to_string(ta.size()) + " vs " + std::to_string(tb.size()) +
                " files (1 and 4 threads), " + std::to_string(differing) + " differ");
  }

  {
    bool ok = true;
    std::string detail;
    std::vector<NodeConfig> nodes = default_node_variants();
    nodes.insert(nodes.begin(), ctx.node);
    for (const auto& n : nodes) {
      const auto c = profiling_cost(n);
      ok = ok && c.worker_points == n.cores && c.llc_points == n.cores * n.llc_ways;
      detail += " " + std::to_string(n.cores) + "x" + std::to_string(n.llc_ways) + "->" +
                std::to_string(c.worker_points) + "/" + std::to_string(c.llc_points);
    }
    for (const auto& [id, p] : ctx.profiles)
      ok = ok && p.qps_table.max_workers() == ctx.node.cores &&
           p.qps_table.max_ways() == ctx.node.llc_ways;
    verdict(10, ok, "profiling cost (cores/cores*ways):" + detail);
  }

  std::printf("%d of 10 criteria failed, %.1f s total\n", failures, since(t_start));
  return failures ? 4 : 0;
}
