// Command-line front end: profile, affinity, plan, simulate, experiment,
// calibrate. Wall-clock timings go to stdout only, never into output files.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "tenantsim/calibrate.hpp"
#include "tenantsim/error.hpp"
#include "tenantsim/harness.hpp"

namespace fs = std::filesystem;
using namespace tenantsim;

namespace {

constexpr int kConfigError = 2;
constexpr int kMissingProfile = 3;
constexpr int kCheckFailed = 4;

struct Globals {
  std::string zoo_path;
  std::string node_path;
  std::uint64_t seed = 1;
  std::string out;
};

Zoo load_zoo_or_default(const Globals& g) {
  return g.zoo_path.empty() ? default_zoo() : load_zoo(g.zoo_path);
}

NodeConfig load_node_or_default(const Globals& g) {
  return g.node_path.empty() ? default_node() : load_node(g.node_path);
}

class Stopwatch {
 public:
  explicit Stopwatch(std::string what)
      : what_(std::move(what)), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
    std::cout << what_ << ": " << fmt(d.count(), 2) << " s\n";
  }

 private:
  std::string what_;
  std::chrono::steady_clock::time_point start_;
};

std::map<std::string, double> parse_rates(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& s : items) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::config, "expected MODEL=QPS, got '" + s + "'");
    double v = 0.0;
    try {
      v = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(Errc::config, "bad rate in '" + s + "'");
    }
    if (!std::isfinite(v) || v < 0) throw Error(Errc::config, "negative rate in '" + s + "'");
    out[s.substr(0, eq)] = v;
  }
  return out;
}

Profiles profiles_for(const Globals& g, const Zoo& zoo, const NodeConfig& node,
                      bool profile_if_missing) {
  const fs::path dir = fs::path(g.out) / "profiles";
  try {
    return load_profiles(dir, zoo);
  } catch (const Error& e) {
    if (e.code() != Errc::missing_profile || !profile_if_missing) throw;
  }
  Stopwatch sw("profiling");
  Profiles p = profile_zoo(zoo, node, g.seed);
  save_profiles(dir, p);
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-tenant recommendation inference simulator"};
  app.require_subcommand(1);
  Globals g;
  if (const char* env = std::getenv("TENANTSIM_OUT")) g.out = env;
  if (g.out.empty()) g.out = "out";
  app.add_option("--zoo", g.zoo_path, "model zoo JSON (default: built-in zoo)");
  app.add_option("--node", g.node_path, "node config JSON (default: built-in node)");
  app.add_option("--seed", g.seed, "base seed");
  app.add_option("--out", g.out, "output directory (env TENANTSIM_OUT)");

  auto* profile = app.add_subcommand("profile", "profile every zoo model");

  auto* affinity = app.add_subcommand("affinity", "build the co-location affinity matrix");

  auto* plan = app.add_subcommand("plan", "cluster placement for a set of targets");
  std::string plan_policy = "hera";
  std::vector<std::string> plan_targets;
  double plan_level = -1;
  plan->add_option("--policy", plan_policy)
      ->check(CLI::IsMember({"hera", "random", "random+", "deeprecsys"}));
  plan->add_option("--target", plan_targets, "MODEL=QPS, repeatable");
  plan->add_option("--level", plan_level, "same target QPS for every model");

  auto* simulate = app.add_subcommand("simulate", "simulate one server");
  std::vector<std::string> sim_rates;
  double sim_duration = 60;
  std::string sim_controller = "hera";
  bool sim_no_cat = false;
  simulate->add_option("--rate", sim_rates, "MODEL=QPS, one or two models")->required();
  simulate->add_option("--duration", sim_duration);
  simulate->add_option("--controller", sim_controller)
      ->check(CLI::IsMember({"none", "hera", "parties"}));
  simulate->add_flag("--no-partitioning", sim_no_cat);

  auto* experiment = app.add_subcommand("experiment", "run a scenario, or `all`");
  std::string scenario;
  bool profile_if_missing = false;
  bool simulated_pair_qps = false;
  experiment->add_option("scenario", scenario)->required();
  experiment->add_flag("--profile-if-missing", profile_if_missing);
  experiment->add_flag("--simulated-pair-qps", simulated_pair_qps,
                       "credit pair servers with simulated instead of estimated QPS");

  auto* calib = app.add_subcommand("calibrate", "tune zoo signatures to the profile targets");
  int calib_rounds = 8;
  calib->add_option("--rounds", calib_rounds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    const Zoo zoo = load_zoo_or_default(g);
    const NodeConfig node = load_node_or_default(g);
    zoo.validate(node.llc_ways);
    const fs::path out = g.out;

    if (*profile) {
      Stopwatch sw("profile");
      const Profiles p = profile_zoo(zoo, node, g.seed);
      save_profiles(out / "profiles", p);
      const auto cost = profiling_cost(node);
      Json j = {{"zoo_version", zoo.version},
                {"config_hash", config_hash(zoo, node, g.seed)},
                {"worker_points_per_model", cost.worker_points},
                {"llc_points_per_model", cost.llc_points},
                {"classes", Json::object()}};
      for (const auto& [id, s] : p) {
        j["classes"][id] = to_string(s.scalability);
        std::cout << id << ": " << to_string(s.scalability) << ", isolated max load "
                  << fmt(s.isolated_max_load, 1) << " q/s\n";
      }
      write_json(out / "profiles" / "summary.json", j);
    } else if (*affinity) {
      const Profiles p = load_profiles(out / "profiles", zoo);
      const auto m = build_affinity_matrix(p, zoo, node);
      write_json(out / "affinity" / "matrix.json", to_json(m));
      write_text(out / "affinity" / "matrix.csv", affinity_csv(m));
      std::cout << affinity_csv(m);
    } else if (*plan) {
      const Context ctx =
          make_context(zoo, node, g.seed, load_profiles(out / "profiles", zoo));
      Targets t = parse_rates(plan_targets);
      if (plan_level >= 0)
        for (const auto& m : zoo.models) t.emplace(m.id, plan_level);
      if (t.empty()) throw Error(Errc::config, "give --target or --level");
      const auto p = plan_for(plan_policy, t, ctx, g.seed);
      check_plan(p, zoo, node);
      write_json(out / "plan" / (plan_policy + ".json"), to_json(p));
      std::cout << plan_policy << ": " << servers_required(p) << " servers\n";
    } else if (*simulate) {
      const auto rates = parse_rates(sim_rates);
      if (rates.empty() || rates.size() > 2)
        throw Error(Errc::config, "simulate takes one or two models");
      std::vector<std::string> ids;
      for (const auto& [id, r] : rates) ids.push_back(id);
      const AllocationState alloc = initialize_server(ids, zoo, node, !sim_no_cat);
      Profiles p;
      if (sim_controller == "hera") p = load_profiles(out / "profiles", zoo);
      HeraController hera(zoo, node, p);
      PartiesController parties(zoo, node);
      SimOptions opt;
      if (sim_controller == "hera") opt.controller = &hera;
      if (sim_controller == "parties") opt.controller = &parties;
      Stopwatch sw("simulate");
      const auto r = run_sim(zoo, node, alloc, LoadSchedule::constant(rates),
                             sim_duration, g.seed, opt);
      write_text(out / "simulate" / "windows.csv", windows_csv(r.windows));
      write_json(out / "simulate" / "summary.json",
                 {{"config_hash", config_hash(zoo, node, g.seed)},
                  {"zoo_version", zoo.version},
                  {"controller", sim_controller},
                  {"summary", to_json(r.summary)},
                  {"resizes", r.resizes.size()},
                  {"trace_hash", r.trace_hash}});
      for (const auto& m : r.summary.models)
        std::cout << m.model << ": p95 " << fmt(m.p95_ms, 2) << " ms, "
                  << fmt(m.achieved_qps, 1) << " q/s\n";
    } else if (*experiment) {
      ExperimentConfig cfg;
      cfg.zoo = zoo;
      cfg.node = node;
      cfg.seeds = {g.seed};
      cfg.out = out;
      cfg.simulated_pair_qps = simulated_pair_qps;
      std::vector<std::string> todo;
      if (scenario == "all")
        todo = kScenarios;
      else
        todo = {scenario};
      cfg.scenario = todo.front();
      cfg.validate();
      const Context ctx =
          make_context(zoo, node, g.seed, profiles_for(g, zoo, node, profile_if_missing));
      for (const auto& s : todo) {
        cfg.scenario = s;
        Stopwatch sw(s);
        run_scenario(cfg, ctx);
      }
    } else if (*calib) {
      Stopwatch sw("calibrate");
      const auto run = calibrate(zoo, node, g.seed, {}, calib_rounds);
      const auto& c = run.rounds.back();
      Json signatures = Json::array();
      for (const auto& m : run.zoo.models) signatures.push_back(to_json(m));
      Json report = {
          {"config_hash", config_hash(zoo, node, g.seed)},
          {"rounds", run.rounds.size()},
          {"tweaks", run.tweaks},
          {"signatures", signatures},
          {"targets",
           {{"dlrm_b_truncated_at_8", {{"value", c.b_last_worker}, {"pass", c.b_truncated}}},
            {"dlrm_d_top_quartile_gain_le_5pct",
             {{"value", c.d_top_gain}, {"pass", c.d_flat}}},
            {"dlrm_d_one_way_ge_90pct",
             {{"value", c.d_one_way}, {"pass", c.d_cache_insensitive}}},
            {"dien_two_ways_ge_80pct",
             {{"value", c.dien_two_way}, {"pass", c.dien_cache_tolerant}}},
            {"low_exactly_b_and_d", {{"pass", c.classes_match}}}}}};
      write_json(out / "calibrate" / "report.json", report);
      write_json(out / "calibrate" / "zoo.json", to_json(run.zoo));
      for (const auto& t : run.tweaks) std::cout << t << "\n";
      std::cout << (c.all() ? "all calibration targets hold\n"
                            : "calibration targets still failing\n");
      if (!c.all()) return kCheckFailed;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::missing_profile ? kMissingProfile : kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
