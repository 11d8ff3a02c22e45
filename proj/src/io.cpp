#include "tenantsim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tenantsim/error.hpp"
#include "tenantsim/seed.hpp"

namespace tenantsim {

namespace fs = std::filesystem;

namespace {

Json curve_json(const std::map<int, double>& c) {
  Json out = Json::array();
  for (const auto& [k, v] : c) out.push_back({k, v});
  return out;
}

std::map<int, double> curve_from(const Json& j) {
  std::map<int, double> out;
  for (const auto& e : j) out[e.at(0).get<int>()] = e.at(1).get<double>();
  return out;
}

template <class F>
auto parse(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(Errc::config, std::string("bad ") + what + ": " + e.what());
  }
}

}  // namespace

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Json to_json(const ModelSpec& m) {
  return {{"id", m.id},
          {"memory_footprint_gb", m.memory_footprint_gb},
          {"compute_us_per_item", m.compute_us_per_item},
          {"bytes_kb_per_item", m.bytes_kb_per_item},
          {"bandwidth_gbps_per_worker", m.bandwidth_gbps_per_worker},
          {"cache_sensitivity", m.cache_sensitivity},
          {"cache_working_set_ways", m.cache_working_set_ways},
          {"sla_ms", m.sla_ms}};
}

Json to_json(const Zoo& zoo) {
  Json models = Json::array();
  for (const auto& m : zoo.models) models.push_back(to_json(m));
  return {{"version", zoo.version},
          {"batch",
           {{"mu", zoo.batch.mu}, {"sigma", zoo.batch.sigma}, {"fixed", zoo.batch.fixed}}},
          {"models", models}};
}

Json to_json(const NodeConfig& n) {
  return {{"cores", n.cores},
          {"llc_ways", n.llc_ways},
          {"mem_bandwidth_gbps", n.mem_bandwidth_gbps},
          {"mem_capacity_gb", n.mem_capacity_gb}};
}

Zoo zoo_from_json(const Json& j) {
  return parse("zoo", [&] {
    Zoo zoo;
    zoo.version = j.value("version", std::string("unversioned"));
    if (j.contains("batch")) {
      const auto& b = j.at("batch");
      zoo.batch.sigma = b.value("sigma", kDefaultBatchSigma);
      zoo.batch.fixed = b.value("fixed", 0);
      zoo.batch.mu = b.contains("mu")
                         ? b.at("mu").get<double>()
                         : calibrate_batch_mu(kTargetMeanBatch, zoo.batch.sigma);
    } else {
      zoo.batch.mu = calibrate_batch_mu(kTargetMeanBatch, zoo.batch.sigma);
    }
    for (const auto& e : j.at("models")) {
      ModelSpec m;
      m.id = e.at("id").get<std::string>();
      m.memory_footprint_gb = e.at("memory_footprint_gb").get<double>();
      m.compute_us_per_item = e.value("compute_us_per_item", 0.0);
      m.bytes_kb_per_item = e.value("bytes_kb_per_item", 0.0);
      m.bandwidth_gbps_per_worker = e.value("bandwidth_gbps_per_worker", 0.0);
      m.cache_sensitivity = e.value("cache_sensitivity", 0.0);
      m.cache_working_set_ways = e.value("cache_working_set_ways", 1);
      m.sla_ms = e.at("sla_ms").get<double>();
      zoo.models.push_back(m);
    }
    return zoo;
  });
}

NodeConfig node_from_json(const Json& j) {
  return parse("node config", [&] {
    NodeConfig n;
    n.cores = j.value("cores", n.cores);
    n.llc_ways = j.value("llc_ways", n.llc_ways);
    n.mem_bandwidth_gbps = j.value("mem_bandwidth_gbps", n.mem_bandwidth_gbps);
    n.mem_capacity_gb = j.value("mem_capacity_gb", n.mem_capacity_gb);
    n.validate();
    return n;
  });
}

Json to_json(const ProfileSet& p) {
  Json table = Json::array();
  for (int w = 1; w <= p.qps_table.max_workers(); ++w) {
    Json row = Json::array();
    for (int x = 1; x <= p.qps_table.max_ways(); ++x)
      row.push_back(p.qps_table.has(w, x) ? Json(p.qps_table.at(w, x)) : Json());
    table.push_back(row);
  }
  return {{"model", p.model},
          {"zoo_version", p.zoo_version},
          {"seed", p.seed},
          {"capacity_knee", p.capacity_knee},
          {"reference_workers", p.reference_workers},
          {"qps_by_workers", curve_json(p.qps_by_workers)},
          {"qps_by_ways", curve_json(p.qps_by_ways)},
          {"qps_by_ways_normalized", curve_json(p.normalized_ways())},
          {"membw_by_workers", curve_json(p.membw_by_workers)},
          {"qps_table", table},
          {"isolated_max_load", p.isolated_max_load},
          {"scalability", to_string(p.scalability)},
          {"probes_run", p.probes_run}};
}

ProfileSet profile_from_json(const Json& j) {
  return parse("profile", [&] {
    ProfileSet p;
    p.model = j.at("model").get<std::string>();
    p.zoo_version = j.at("zoo_version").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.capacity_knee = j.at("capacity_knee").get<int>();
    p.reference_workers = j.at("reference_workers").get<int>();
    p.qps_by_workers = curve_from(j.at("qps_by_workers"));
    p.qps_by_ways = curve_from(j.at("qps_by_ways"));
    p.membw_by_workers = curve_from(j.at("membw_by_workers"));
    const auto& t = j.at("qps_table");
    const int ways = t.empty() ? 0 : int(t.at(0).size());
    p.qps_table = QpsTable(int(t.size()), ways);
    for (int w = 1; w <= int(t.size()); ++w)
      for (int x = 1; x <= ways; ++x)
        if (!t.at(w - 1).at(x - 1).is_null())
          p.qps_table.set(w, x, t.at(w - 1).at(x - 1).get<double>());
    p.isolated_max_load = j.at("isolated_max_load").get<double>();
    p.scalability = j.at("scalability").get<std::string>() == "Low"
                        ? Scalability::Low
                        : Scalability::High;
    p.probes_run = j.value("probes_run", std::size_t(0));
    return p;
  });
}

Json to_json(const CoAffinityMatrix& m) {
  Json pairs = Json::array();
  for (const auto& [key, e] : m.entries)
    pairs.push_back({{"a", e.a},
                     {"b", e.b},
                     {"coaff_llc", e.llc},
                     {"coaff_dram", e.dram},
                     {"coaff_system", e.value},
                     {"ways", {e.ways_a, e.ways_b}},
                     {"workers", {e.workers_a, e.workers_b}},
                     {"membw_gbps", {e.membw_a, e.membw_b}},
                     {"est_pair_qps", {e.qps_a, e.qps_b}}});
  return {{"models", m.models}, {"pairs", pairs}};
}

Json to_json(const ClusterPlan& plan) {
  Json servers = Json::array();
  for (const auto& s : plan.servers) {
    Json alloc = Json::object();
    for (const auto& [id, a] : s.alloc.models)
      alloc[id] = {{"workers", a.workers}, {"ways", a.ways}};
    servers.push_back({{"node_id", s.node_id},
                       {"models", s.models},
                       {"alloc", alloc},
                       {"credited_qps", s.credited_qps}});
  }
  return {{"policy", plan.policy},
          {"servers", servers},
          {"servers_required", servers_required(plan)},
          {"target_qps", plan.target_qps},
          {"serviced_qps", plan.serviced_qps},
          {"low_fallback", plan.low_fallback}};
}

Json to_json(const SimMetrics& s) {
  Json models = Json::array();
  for (const auto& m : s.models)
    models.push_back({{"model", m.model},
                      {"arrived", m.arrived},
                      {"completed", m.completed},
                      {"p50_ms", m.p50_ms},
                      {"p95_ms", m.p95_ms},
                      {"achieved_qps", m.achieved_qps},
                      {"violation_frac", m.violation_frac}});
  return {{"models", models},
          {"mean_core_util", s.mean_core_util},
          {"mean_bw_util", s.mean_bw_util},
          {"window_s", s.window}};
}

Zoo load_zoo(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw Error(Errc::config, "cannot parse " + path.string() + ": " + e.what());
  }
  return zoo_from_json(j);
}

NodeConfig load_node(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw Error(Errc::config, "cannot parse " + path.string() + ": " + e.what());
  }
  return node_from_json(j);
}

std::string config_hash(const Zoo& zoo, const NodeConfig& node,
                        std::uint64_t seed) {
  std::uint64_t h = fnv1a(to_json(zoo).dump());
  h = fnv1a(to_json(node).dump(), h);
  h = fnv1a(std::to_string(seed), h);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::config, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

void save_profiles(const fs::path& dir, const Profiles& profiles) {
  for (const auto& [id, p] : profiles) write_json(dir / (id + ".json"), to_json(p));
}

Profiles load_profiles(const fs::path& dir, const Zoo& zoo) {
  Profiles out;
  for (const auto& m : zoo.models) {
    const fs::path file = dir / (m.id + ".json");
    if (!fs::exists(file))
      throw Error(Errc::missing_profile, "no profile for " + m.id + " in " +
                                             dir.string() + "; run `profile` first");
    ProfileSet p = profile_from_json(Json::parse(read_text(file)));
    if (p.zoo_version != zoo.version)
      throw Error(Errc::missing_profile,
                  "profile of " + m.id + " was built for zoo '" + p.zoo_version +
                      "'; re-run `profile`");
    out[m.id] = std::move(p);
  }
  return out;
}

std::string windows_csv(const std::vector<WindowRecord>& rows) {
  std::string out = "time,model,p95_ms,qps,violation_frac,cores,ways,bw_util\n";
  for (const auto& r : rows) {
    out += fmt(r.time, 3) + "," + r.model + "," + fmt(r.p95_ms) + "," +
           fmt(r.qps, 3) + "," + fmt(r.violation_frac) + "," +
           std::to_string(r.workers) + "," + std::to_string(r.ways) + "," +
           fmt(r.bw_util) + "\n";
  }
  return out;
}

std::string affinity_csv(const CoAffinityMatrix& m) {
  std::string out = "model";
  for (const auto& b : m.models) out += "," + b;
  out += "\n";
  for (const auto& a : m.models) {
    out += a;
    for (const auto& b : m.models) out += "," + fmt(m.value(a, b), 4);
    out += "\n";
  }
  return out;
}

}  // namespace tenantsim
