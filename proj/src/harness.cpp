#include "tenantsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <memory>
#include <set>

#include "tenantsim/error.hpp"
#include "tenantsim/parallel.hpp"
#include "tenantsim/seed.hpp"

namespace tenantsim {

namespace fs = std::filesystem;

using PairKey = std::pair<std::string, std::string>;

void ExperimentConfig::validate() const {
  if (!scenario.empty() &&
      std::find(kScenarios.begin(), kScenarios.end(), scenario) == kScenarios.end())
    throw Error(Errc::config, "unknown scenario '" + scenario + "'");
  if (seeds.empty()) throw Error(Errc::config, "at least one seed is required");
  for (const auto& p : policies)
    if (p != "hera" && p != "random" && p != "random+" && p != "deeprecsys")
      throw Error(Errc::config, "unknown policy '" + p + "'");
  for (double l : target_levels)
    if (!(l >= 0)) throw Error(Errc::config, "target levels must be >= 0");
  for (double s : low_shares)
    if (!(s >= 0 && s <= 1)) throw Error(Errc::config, "low shares must be in [0,1]");
  if (!(fluctuating.t1 > 0 && fluctuating.t2 > fluctuating.t1 &&
        fluctuating.duration > fluctuating.t2))
    throw Error(Errc::config, "fluctuating phases need 0 < t1 < t2 < duration");
  if (emu.settle_ticks < 0 || emu.eval_ticks < 1 || !(emu.fx_step > 0) ||
      !(emu.fy_resolution > 0))
    throw Error(Errc::config, "bad EMU search settings");
  node.validate();
  zoo.validate(node.llc_ways);
  rmu.validate();
}

std::vector<NodeConfig> default_node_variants() {
  NodeConfig small{8, 8, 64.0, 224.0};
  NodeConfig base{};
  NodeConfig large{24, 16, 192.0, 224.0};
  return {small, base, large};
}

std::string Context::profile_version() const {
  std::uint64_t h = fnv1a("profiles");
  for (const auto& [id, p] : profiles) h = fnv1a(to_json(p).dump(), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Context make_context(const Zoo& zoo, const NodeConfig& node, std::uint64_t seed,
                     Profiles profiles, const RmuConfig& rmu) {
  Context ctx;
  ctx.zoo = zoo;
  ctx.node = node;
  ctx.seed = seed;
  ctx.profiles = std::move(profiles);
  ctx.rmu = rmu;
  ctx.matrix = build_affinity_matrix(ctx.profiles, ctx.zoo, ctx.node);
  return ctx;
}

Context make_context(const Zoo& zoo, const NodeConfig& node, std::uint64_t seed,
                     const ProfileConfig& profile, const RmuConfig& rmu) {
  return make_context(zoo, node, seed, profile_zoo(zoo, node, seed, profile), rmu);
}

// ---- EMU -------------------------------------------------------------------

namespace {

bool is_low(const Context& ctx, const std::string& m) {
  return ctx.profiles.at(m).scalability == Scalability::Low;
}

PairKey ordered(const std::string& a, const std::string& b) {
  return a < b ? PairKey{a, b} : PairKey{b, a};
}

}  // namespace

PairEmu measure_pair_emu(const Context& ctx, const std::string& a,
                         const std::string& b, bool partitioning,
                         const EmuConfig& config) {
  PairEmu out;
  const bool a_low = is_low(ctx, a);
  const bool b_low = is_low(ctx, b);
  out.x = a_low != b_low ? (a_low ? a : b) : std::min(a, b);
  out.y = out.x == a ? b : a;
  const double iso_x = ctx.profiles.at(out.x).isolated_max_load;
  const double iso_y = ctx.profiles.at(out.y).isolated_max_load;
  const double sla_x = ctx.zoo.at(out.x).sla_ms;
  const double sla_y = ctx.zoo.at(out.y).sla_ms;
  const std::uint64_t seed =
      derive_seed(ctx.seed, "emu:" + out.x + "+" + out.y, partitioning ? 1 : 0);
  const double period = ctx.rmu.t_monitor;

  auto probe = [&](double fx, double fy) {
    ++out.probes;
    AllocationState alloc =
        initialize_server({out.x, out.y}, ctx.zoo, ctx.node, partitioning);
    HeraController rmu(ctx.zoo, ctx.node, ctx.profiles, ctx.rmu);
    SimOptions opt;
    opt.collect_windows = false;
    opt.controller = &rmu;
    opt.measure_from = config.settle_ticks * period;
    const double duration = (config.settle_ticks + config.eval_ticks) * period;
    const auto sim =
        run_sim(ctx.zoo, ctx.node, alloc,
                LoadSchedule::constant({{out.x, fx * iso_x}, {out.y, fy * iso_y}}),
                duration, seed, opt);
    auto ok = [&](const std::string& m, double sla) {
      const auto& lat = sim.measured_latencies_ms.at(m);
      return lat.empty() || percentile(lat, 95.0) <= sla;
    };
    return ok(out.x, sla_x) && ok(out.y, sla_y);
  };

  const int steps = int(std::llround(1.0 / config.fx_step));
  for (int i = 1; i <= steps; ++i) {
    const double fx = i * config.fx_step;
    if (!probe(fx, 0.0)) break;
    double lo = 0.0;
    double hi = 1.0;
    if (probe(fx, hi)) {
      lo = hi;
    } else {
      while (hi - lo > config.fy_resolution + 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (probe(fx, mid))
          lo = mid;
        else
          hi = mid;
      }
    }
    if (fx + lo > out.fx + out.fy) {
      out.fx = fx;
      out.fy = lo;
    }
  }
  out.emu = (out.fx + out.fy) * 100.0;
  return out;
}

EmuStats emu_stats(std::vector<double> values) {
  EmuStats s;
  std::sort(values.begin(), values.end());
  s.values = values;
  if (values.empty()) return s;
  s.min = values.front();
  s.max = values.back();
  const std::size_t n = values.size();
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(n);
  return s;
}

ClusterPlan plan_for(const std::string& policy, const Targets& targets,
                     const Context& ctx, std::uint64_t seed,
                     const PairQps& pair_qps) {
  if (policy == "hera")
    return schedule_hera(targets, ctx.profiles, ctx.matrix, ctx.node, pair_qps);
  if (policy == "random")
    return schedule_random(targets, ctx.profiles, ctx.matrix, ctx.node, seed, pair_qps);
  if (policy == "random+")
    return schedule_random_plus(targets, ctx.profiles, ctx.matrix, ctx.node, seed,
                                pair_qps);
  if (policy == "deeprecsys")
    return schedule_deeprecsys(targets, ctx.profiles, ctx.node);
  throw Error(Errc::config, "unknown policy '" + policy + "'");
}

namespace {

Targets even_targets(const Context& ctx, double level) {
  Targets t;
  for (const auto& m : ctx.zoo.models) t[m.id] = level;
  return t;
}

}  // namespace

std::map<std::string, std::vector<PairKey>> policy_pairs(const Context& ctx,
                                                         const ExperimentConfig& cfg) {
  std::map<std::string, std::vector<PairKey>> out;
  std::vector<std::string> ids;
  for (const auto& m : ctx.zoo.models) ids.push_back(m.id);
  std::sort(ids.begin(), ids.end());
  for (const auto& policy : cfg.policies) {
    auto& pairs = out[policy];
    if (policy == "random" || policy == "random+") {
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
          if (policy == "random+" && !is_low(ctx, ids[i]) && !is_low(ctx, ids[j]))
            continue;
          pairs.emplace_back(ids[i], ids[j]);
        }
    } else if (policy == "hera") {
      const auto plan =
          plan_for("hera", even_targets(ctx, cfg.mid_level), ctx, cfg.seed());
      for (const auto& s : plan.servers)
        if (s.models.size() == 2) pairs.push_back(ordered(s.models[0], s.models[1]));
    }
  }
  return out;
}

namespace {

std::map<PairKey, PairEmu> measure_pairs(const Context& ctx,
                                         const std::set<PairKey>& unique,
                                         bool partitioning, const EmuConfig& config) {
  std::vector<PairKey> todo(unique.begin(), unique.end());
  std::vector<PairEmu> results(todo.size());
  for_each_index(Exec::parallel, todo.size(), [&](std::size_t i) {
    results[i] = measure_pair_emu(ctx, todo[i].first, todo[i].second, partitioning,
                                  config);
  });
  std::map<PairKey, PairEmu> out;
  for (std::size_t i = 0; i < todo.size(); ++i) out[todo[i]] = results[i];
  return out;
}

}  // namespace

EmuReport run_emu_constant(const Context& ctx, const ExperimentConfig& cfg,
                           bool partitioning) {
  EmuReport r;
  r.pairs = policy_pairs(ctx, cfg);
  std::set<PairKey> unique;
  for (const auto& [policy, pairs] : r.pairs) unique.insert(pairs.begin(), pairs.end());
  r.pair_emu = measure_pairs(ctx, unique, partitioning, cfg.emu);
  for (const auto& [policy, pairs] : r.pairs) {
    std::vector<double> values;
    if (policy == "deeprecsys") {
      // A dedicated server at its isolated max load is 100% by definition.
      values.assign(ctx.zoo.models.size(), 100.0);
    } else {
      for (const auto& p : pairs) values.push_back(r.pair_emu.at(p).emu);
    }
    r.stats[policy] = emu_stats(values);
  }
  return r;
}

// ---- fluctuating load ------------------------------------------------------

double violation_time_fraction(const std::vector<WindowRecord>& windows,
                               const std::string& model, double sla_ms) {
  std::size_t total = 0;
  std::size_t bad = 0;
  for (const auto& w : windows) {
    if (w.model != model) continue;
    ++total;
    if (w.completions > 0 && w.p95_ms > sla_ms) ++bad;
  }
  return total ? double(bad) / double(total) : 0.0;
}

std::optional<int> steady_state_tick(const SimResult& sim, const RmuConfig& rmu) {
  const int n = int(sim.ticks.size());
  std::vector<bool> calm(std::size_t(n), true);
  for (int k = 0; k < n; ++k) {
    const double t = sim.ticks[k].time;
    for (const auto& o : sim.ticks[k].observed)
      if (o.tail_ms > o.sla_ms * rmu.slack_high) calm[k] = false;
    for (const auto& e : sim.resizes)
      if (std::abs(e.time - t) < 1e-9) calm[k] = false;
  }
  std::optional<int> first;
  for (int k = n - 1; k >= 0 && calm[k]; --k) first = k + 1;
  return first;
}

FluctuatingReport run_fluctuating(const Context& ctx, const ExperimentConfig& cfg) {
  const auto& fc = cfg.fluctuating;
  const double iso_low = ctx.profiles.at(fc.low_model).isolated_max_load;
  const double iso_high = ctx.profiles.at(fc.high_model).isolated_max_load;
  const LoadSchedule schedule =
      fluctuating_schedule(fc.low_model, iso_low, fc.high_model, iso_high, fc.t1,
                           fc.t2, fc.ramp_steps);
  const AllocationState init =
      initialize_server({fc.low_model, fc.high_model}, ctx.zoo, ctx.node);
  const std::uint64_t seed = derive_seed(ctx.seed, "fluctuating");

  FluctuatingReport report;
  std::vector<std::string> names{"hera", "parties"};
  report.runs.resize(2);
  for_each_index(Exec::parallel, 2, [&](std::size_t i) {
    HeraController hera(ctx.zoo, ctx.node, ctx.profiles, ctx.rmu);
    PartiesController parties(ctx.zoo, ctx.node, ctx.rmu);
    SimOptions opt;
    opt.controller = i == 0 ? static_cast<Controller*>(&hera) : &parties;
    PolicyRun run;
    run.policy = names[i];
    run.sim = run_sim(ctx.zoo, ctx.node, init, schedule, fc.duration, seed, opt);
    for (const auto& m : {fc.low_model, fc.high_model})
      run.violation_time_frac[m] =
          violation_time_fraction(run.sim.windows, m, ctx.zoo.at(m).sla_ms);
    report.runs[i] = std::move(run);
  });

  HeraController hera(ctx.zoo, ctx.node, ctx.profiles, ctx.rmu);
  SimOptions opt;
  opt.controller = &hera;
  report.steady_duration = fc.steady_duration;
  report.steady_sim = run_sim(
      ctx.zoo, ctx.node, init,
      LoadSchedule::constant({{fc.low_model, fc.steady_fraction * iso_low},
                              {fc.high_model, fc.steady_fraction * iso_high}}),
      fc.steady_duration, derive_seed(ctx.seed, "steady"), opt);
  report.steady_tick = steady_state_tick(report.steady_sim, ctx.rmu);
  return report;
}

// ---- cluster ---------------------------------------------------------------

namespace {

// Max load of each model inside the pair allocation, measured with the
// partner resident.
std::map<PairKey, std::pair<double, double>> simulated_pair_table(
    const Context& ctx, const ProbeConfig& probe) {
  std::vector<PairKey> pairs;
  for (const auto& [key, e] : ctx.matrix.entries)
    if (key.first != key.second) pairs.push_back(key);
  std::vector<std::pair<double, double>> q(pairs.size());
  for_each_index(Exec::parallel, pairs.size(), [&](std::size_t i) {
    const auto e = ctx.matrix.get(pairs[i].first, pairs[i].second);
    AllocationState alloc;
    alloc.models[e.a] = {e.workers_a, e.ways_a};
    alloc.models[e.b] = {e.workers_b, e.ways_b};
    const std::uint64_t s = derive_seed(ctx.seed, "pair:" + e.a + "+" + e.b);
    q[i].first = e.workers_a > 0
                     ? measure_max_load(ctx.zoo, ctx.node, alloc, {{e.a, 1.0}}, s, probe)
                           .max_scale
                     : 0.0;
    q[i].second = e.workers_b > 0
                      ? measure_max_load(ctx.zoo, ctx.node, alloc, {{e.b, 1.0}}, s, probe)
                            .max_scale
                      : 0.0;
  });
  std::map<PairKey, std::pair<double, double>> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) out[pairs[i]] = q[i];
  return out;
}

PairQps table_pair_qps(std::shared_ptr<std::map<PairKey, std::pair<double, double>>> t) {
  return [t](const std::string& a, const std::string& b) {
    if (a == b) throw Error(Errc::invalid_argument, "self pairs are not simulated");
    const auto& v = t->at(ordered(a, b));
    return a < b ? v : std::make_pair(v.second, v.first);
  };
}

std::vector<ClusterRow> sweep(const Context& ctx, const ExperimentConfig& cfg,
                              const std::vector<std::pair<std::string, Targets>>& rows,
                              const std::vector<double>& levels) {
  PairQps pair_qps;
  if (cfg.simulated_pair_qps)
    pair_qps = table_pair_qps(
        std::make_shared<std::map<PairKey, std::pair<double, double>>>(
            simulated_pair_table(ctx, cfg.profile.probe)));
  std::vector<ClusterRow> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ClusterRow row;
    row.label = rows[i].first;
    row.level = levels[i];
    for (const auto& policy : cfg.policies) {
      const auto plan = plan_for(policy, rows[i].second, ctx, cfg.seed(), pair_qps);
      check_plan(plan, ctx.zoo, ctx.node);
      row.servers[policy] = servers_required(plan);
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::vector<ClusterRow> run_cluster_even(const Context& ctx,
                                         const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, Targets>> rows;
  for (double level : cfg.target_levels)
    rows.emplace_back(fmt(level, 0), even_targets(ctx, level));
  return sweep(ctx, cfg, rows, cfg.target_levels);
}

std::vector<ClusterRow> run_cluster_skewed(const Context& ctx,
                                           const ExperimentConfig& cfg) {
  std::vector<std::string> low, high;
  for (const auto& m : ctx.zoo.models) (is_low(ctx, m.id) ? low : high).push_back(m.id);
  const double aggregate = cfg.mid_level * double(ctx.zoo.models.size());
  std::vector<std::pair<std::string, Targets>> rows;
  for (double share : cfg.low_shares) {
    Targets t;
    for (const auto& m : low) t[m] = low.empty() ? 0.0 : share * aggregate / low.size();
    for (const auto& m : high)
      t[m] = high.empty() ? 0.0 : (1.0 - share) * aggregate / high.size();
    rows.emplace_back(fmt(share * 100, 0) + "/" + fmt((1 - share) * 100, 0), t);
  }
  return sweep(ctx, cfg, rows, cfg.low_shares);
}

// ---- ablation / sensitivity ------------------------------------------------

AblationReport run_ablation(const Context& ctx, const ExperimentConfig& cfg) {
  ExperimentConfig hera_only = cfg;
  hera_only.policies = {"hera"};
  const auto pairs = policy_pairs(ctx, hera_only).at("hera");
  std::set<PairKey> unique(pairs.begin(), pairs.end());
  const auto with_cat = measure_pairs(ctx, unique, true, cfg.emu);
  const auto without = measure_pairs(ctx, unique, false, cfg.emu);
  std::vector<double> a, b;
  for (const auto& p : pairs) {
    a.push_back(with_cat.at(p).emu);
    b.push_back(without.at(p).emu);
  }
  AblationReport r;
  r.hera_cat = emu_stats(a);
  r.hera_no_cat = emu_stats(b);
  return r;
}

std::vector<VariantResult> run_sensitivity(const ExperimentConfig& cfg) {
  std::vector<VariantResult> out;
  const auto variants = cfg.node_variants.empty() ? default_node_variants()
                                                  : cfg.node_variants;
  for (const auto& node : variants) {
    const Context ctx = make_context(cfg.zoo, node, cfg.seed(), cfg.profile, cfg.rmu);
    VariantResult v;
    v.node = node;
    ExperimentConfig c = cfg;
    c.node = node;
    c.policies = {"hera"};
    const auto pairs = policy_pairs(ctx, c).at("hera");
    std::set<PairKey> unique(pairs.begin(), pairs.end());
    const auto emu = measure_pairs(ctx, unique, true, cfg.emu);
    std::vector<double> values;
    for (const auto& p : pairs) values.push_back(emu.at(p).emu);
    v.hera_mean_emu = emu_stats(values).mean;
    for (const auto& policy : cfg.policies)
      v.servers_mid[policy] = servers_required(
          plan_for(policy, even_targets(ctx, cfg.mid_level), ctx, cfg.seed()));
    out.push_back(v);
  }
  return out;
}

// ---- affinity validation ---------------------------------------------------

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 1e-24 * n || syy <= 1e-24 * n) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

AffinityValidation run_affinity_validation(const Context& ctx,
                                           const ExperimentConfig& cfg) {
  std::vector<PairKey> pairs;
  for (const auto& [key, e] : ctx.matrix.entries)
    if (key.first != key.second) pairs.push_back(key);
  AffinityValidation out;
  out.pairs.resize(pairs.size());
  for_each_index(Exec::parallel, pairs.size(), [&](std::size_t i) {
    const auto e = ctx.matrix.get(pairs[i].first, pairs[i].second);
    AllocationState together;
    together.models[e.a] = {e.workers_a, e.ways_a};
    together.models[e.b] = {e.workers_b, e.ways_b};
    double sum = 0.0;
    int counted = 0;
    for (const auto& [m, w] : {std::pair{e.a, e.workers_a}, std::pair{e.b, e.workers_b}}) {
      if (w < 1) continue;
      const std::uint64_t s = derive_seed(ctx.seed, "validate:" + m);
      const double alone =
          measure_max_load(ctx.zoo, ctx.node, m, w, ctx.node.llc_ways, s,
                           cfg.profile.probe)
              .max_scale;
      const double paired =
          measure_max_load(ctx.zoo, ctx.node, together, {{m, 1.0}}, s,
                           cfg.profile.probe)
              .max_scale;
      if (alone > 0) {
        sum += paired / alone;
        ++counted;
      }
    }
    out.pairs[i] = {e.a, e.b, e.value, counted ? sum / counted : 0.0};
  });
  std::vector<double> est, meas;
  for (const auto& p : out.pairs) {
    est.push_back(p.estimated);
    meas.push_back(p.measured);
  }
  out.pearson_r = pearson(est, meas);
  return out;
}

// ---- reports ---------------------------------------------------------------

namespace {

Json config_json(const ExperimentConfig& cfg) {
  Json variants = Json::array();
  for (const auto& n : cfg.node_variants) variants.push_back(to_json(n));
  return {{"seeds", cfg.seeds},
          {"policies", cfg.policies},
          {"target_levels", cfg.target_levels},
          {"mid_level", cfg.mid_level},
          {"low_shares", cfg.low_shares},
          {"node_variants", variants},
          {"t_monitor", cfg.rmu.t_monitor},
          {"slack_band", {cfg.rmu.slack_low, cfg.rmu.slack_high}},
          {"emu",
           {{"settle_ticks", cfg.emu.settle_ticks},
            {"eval_ticks", cfg.emu.eval_ticks},
            {"fx_step", cfg.emu.fx_step},
            {"fy_resolution", cfg.emu.fy_resolution}}},
          {"fluctuating",
           {{"low_model", cfg.fluctuating.low_model},
            {"high_model", cfg.fluctuating.high_model},
            {"t1", cfg.fluctuating.t1},
            {"t2", cfg.fluctuating.t2},
            {"duration", cfg.fluctuating.duration},
            {"steady_fraction", cfg.fluctuating.steady_fraction}}},
          {"probe",
           {{"expected_queries", cfg.profile.probe.expected_queries},
            {"warmup_fraction", cfg.profile.probe.warmup_fraction},
            {"relative_step", cfg.profile.probe.relative_step}}},
          {"simulated_pair_qps", cfg.simulated_pair_qps}};
}

Json stats_json(const EmuStats& s) {
  return {{"min", s.min}, {"median", s.median}, {"max", s.max}, {"mean", s.mean},
          {"values", s.values}};
}

Json cluster_json(const std::vector<ClusterRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"label", r.label}, {"level", r.level}, {"servers", r.servers}});
  return out;
}

std::string cluster_csv(const std::vector<ClusterRow>& rows,
                        const std::vector<std::string>& policies) {
  std::string out = "label";
  for (const auto& p : policies) out += "," + p;
  out += "\n";
  for (const auto& r : rows) {
    out += r.label;
    for (const auto& p : policies) out += "," + std::to_string(r.servers.at(p));
    out += "\n";
  }
  return out;
}

std::string resizes_csv(const std::vector<ResizeEvent>& events) {
  std::string out = "time,model,workers_from,workers_to,ways_from,ways_to\n";
  for (const auto& e : events)
    out += fmt(e.time, 3) + "," + e.model + "," + std::to_string(e.workers_from) +
           "," + std::to_string(e.workers_to) + "," + std::to_string(e.ways_from) +
           "," + std::to_string(e.ways_to) + "\n";
  return out;
}

}  // namespace

Json report_header(const Context& ctx, const ExperimentConfig& cfg) {
  const Json c = config_json(cfg);
  std::uint64_t h = fnv1a(config_hash(ctx.zoo, ctx.node, ctx.seed));
  h = fnv1a(cfg.scenario + c.dump(), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return {{"scenario", cfg.scenario},
          {"config_hash", buf},
          {"config", c},
          {"zoo_version", ctx.zoo.version},
          {"profile_version", ctx.profile_version()},
          {"node", to_json(ctx.node)},
          {"seed", ctx.seed}};
}

void run_scenario(const ExperimentConfig& cfg, const Context& ctx) {
  cfg.validate();
  const fs::path dir = cfg.out / cfg.scenario;
  Json report = report_header(ctx, cfg);

  if (cfg.scenario == "emu_constant") {
    const auto r = run_emu_constant(ctx, cfg);
    Json pairs = Json::array();
    std::string csv = "x,y,fx,fy,emu\n";
    for (const auto& [key, p] : r.pair_emu) {
      pairs.push_back({{"x", p.x}, {"y", p.y}, {"fx", p.fx}, {"fy", p.fy},
                       {"emu", p.emu}, {"probes", p.probes}});
      csv += p.x + "," + p.y + "," + fmt(p.fx, 2) + "," + fmt(p.fy, 4) + "," +
             fmt(p.emu, 2) + "\n";
    }
    Json policies = Json::object();
    for (const auto& [policy, s] : r.stats) {
      Json chosen = Json::array();
      for (const auto& [a, b] : r.pairs.at(policy)) chosen.push_back({a, b});
      policies[policy] = {{"stats", stats_json(s)}, {"pairs", chosen}};
    }
    report["pairs"] = pairs;
    report["policies"] = policies;
    write_text(dir / "pairs.csv", csv);
  } else if (cfg.scenario == "fluctuating") {
    const auto r = run_fluctuating(ctx, cfg);
    Json runs = Json::object();
    std::string norm = "time,policy,model,normalized_tail,workers,ways\n";
    for (const auto& run : r.runs) {
      runs[run.policy] = {{"violation_time_frac", run.violation_time_frac},
                          {"summary", to_json(run.sim.summary)},
                          {"resizes", run.sim.resizes.size()},
                          {"trace_hash", run.sim.trace_hash}};
      write_text(dir / (run.policy + "_windows.csv"), windows_csv(run.sim.windows));
      write_text(dir / (run.policy + "_resizes.csv"), resizes_csv(run.sim.resizes));
      for (const auto& w : run.sim.windows)
        norm += fmt(w.time, 3) + "," + run.policy + "," + w.model + "," +
                fmt(w.p95_ms / ctx.zoo.at(w.model).sla_ms) + "," +
                std::to_string(w.workers) + "," + std::to_string(w.ways) + "\n";
    }
    write_text(dir / "normalized_tail.csv", norm);
    write_text(dir / "steady_resizes.csv", resizes_csv(r.steady_sim.resizes));
    report["runs"] = runs;
    report["steady_state"] = {
        {"tick", r.steady_tick ? Json(*r.steady_tick) : Json()},
        {"duration", r.steady_duration},
        {"resizes", r.steady_sim.resizes.size()}};
  } else if (cfg.scenario == "cluster_even" || cfg.scenario == "cluster_skewed") {
    const auto rows = cfg.scenario == "cluster_even" ? run_cluster_even(ctx, cfg)
                                                     : run_cluster_skewed(ctx, cfg);
    report["rows"] = cluster_json(rows);
    write_text(dir / "servers.csv", cluster_csv(rows, cfg.policies));
    const auto plan = plan_for("hera", even_targets(ctx, cfg.mid_level), ctx, cfg.seed());
    write_json(dir / "hera_plan_mid.json", to_json(plan));
  } else if (cfg.scenario == "ablation_cat") {
    const auto r = run_ablation(ctx, cfg);
    report["deeprecsys_emu"] = r.deeprecsys;
    report["hera_cat"] = stats_json(r.hera_cat);
    report["hera_no_cat"] = stats_json(r.hera_no_cat);
  } else if (cfg.scenario == "sensitivity_sysconfig") {
    Json variants = Json::array();
    for (const auto& v : run_sensitivity(cfg))
      variants.push_back({{"node", to_json(v.node)},
                          {"hera_mean_emu", v.hera_mean_emu},
                          {"deeprecsys_emu", v.deeprecsys_emu},
                          {"servers_mid", v.servers_mid}});
    report["variants"] = variants;
  } else if (cfg.scenario == "affinity_validation") {
    const auto r = run_affinity_validation(ctx, cfg);
    Json pairs = Json::array();
    std::string csv = "a,b,estimated,measured\n";
    for (const auto& p : r.pairs) {
      pairs.push_back({{"a", p.a}, {"b", p.b}, {"estimated", p.estimated},
                       {"measured", p.measured}});
      csv += p.a + "," + p.b + "," + fmt(p.estimated) + "," + fmt(p.measured) + "\n";
    }
    report["pairs"] = pairs;
    report["pearson_r"] = r.pearson_r ? Json(*r.pearson_r) : Json();
    report["pearson_note"] = r.pearson_r ? "" : "undefined: zero variance";
    write_text(dir / "pairs.csv", csv);
    write_text(dir / "affinity_matrix.csv", affinity_csv(ctx.matrix));
  }
  write_json(dir / "report.json", report);
}

}  // namespace tenantsim
