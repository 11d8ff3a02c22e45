#include "tenantsim/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tenantsim/error.hpp"
#include "tenantsim/io.hpp"

namespace tenantsim {

namespace {

const ProfileSet& need(const Profiles& p, const std::string& id) {
  auto it = p.find(id);
  if (it == p.end()) throw Error(Errc::config, "calibration needs model " + id);
  return it->second;
}

double norm_at(const ProfileSet& p, int ways) {
  const auto n = p.normalized_ways();
  auto it = n.find(ways);
  return it == n.end() ? 0.0 : it->second;
}

ModelSpec& spec_of(Zoo& zoo, const std::string& id) {
  for (auto& m : zoo.models)
    if (m.id == id) return m;
  throw Error(Errc::config, "calibration needs model " + id);
}

}  // namespace

CalibrationCheck check_calibration(const Profiles& profiles, const NodeConfig& node) {
  CalibrationCheck c;
  const auto& b = need(profiles, "DLRM-B");
  const auto& d = need(profiles, "DLRM-D");
  const auto& dien = need(profiles, "DIEN");
  c.b_last_worker = b.qps_by_workers.empty() ? 0 : b.qps_by_workers.rbegin()->first;
  c.d_top_gain = top_quartile_gain(d.qps_by_workers, node.cores);
  c.d_one_way = norm_at(d, 1);
  c.dien_two_way = norm_at(dien, 2);
  for (const auto& [id, p] : profiles) c.classes[id] = p.scalability;

  c.b_truncated = c.b_last_worker == 8;
  c.d_flat = c.d_top_gain <= 0.05;
  c.d_cache_insensitive = c.d_one_way >= 0.90;
  c.dien_cache_tolerant = c.dien_two_way >= 0.80;
  c.classes_match = true;
  for (const auto& [id, s] : c.classes) {
    const bool want_low = id == "DLRM-B" || id == "DLRM-D";
    if ((s == Scalability::Low) != want_low) c.classes_match = false;
  }
  return c;
}

CalibrationRun calibrate(const Zoo& zoo, const NodeConfig& node, std::uint64_t seed,
                         const ProfileConfig& config, int max_rounds) {
  CalibrationRun run;
  run.zoo = zoo;
  run.profiles = profile_zoo(run.zoo, node, seed, config);
  for (int round = 0;; ++round) {
    const auto c = check_calibration(run.profiles, node);
    run.rounds.push_back(c);
    if (c.all() || round + 1 >= max_rounds) break;

    std::set<std::string> changed;
    auto note = [&](const std::string& id, const std::string& what, double from,
                    double to) {
      run.tweaks.push_back("round " + std::to_string(round + 1) + ": " + id + " " +
                           what + " " + fmt(from, 4) + " -> " + fmt(to, 4));
      changed.insert(id);
    };
    if (!c.b_truncated) {
      auto& m = spec_of(run.zoo, "DLRM-B");
      const double to = node.mem_capacity_gb / 8.5;
      note(m.id, "memory_footprint_gb", m.memory_footprint_gb, to);
      m.memory_footprint_gb = to;
    }
    if (!c.d_flat) {
      auto& m = spec_of(run.zoo, "DLRM-D");
      note(m.id, "bytes_kb_per_item", m.bytes_kb_per_item, m.bytes_kb_per_item * 1.15);
      m.bytes_kb_per_item *= 1.15;
    }
    if (!c.d_cache_insensitive) {
      auto& m = spec_of(run.zoo, "DLRM-D");
      note(m.id, "cache_sensitivity", m.cache_sensitivity, m.cache_sensitivity * 0.7);
      m.cache_sensitivity *= 0.7;
    }
    if (!c.dien_cache_tolerant) {
      auto& m = spec_of(run.zoo, "DIEN");
      note(m.id, "cache_sensitivity", m.cache_sensitivity, m.cache_sensitivity * 0.7);
      m.cache_sensitivity *= 0.7;
    }
    for (const auto& [id, s] : c.classes) {
      const bool want_low = id == "DLRM-B" || id == "DLRM-D";
      if ((s == Scalability::Low) == want_low || changed.count(id)) continue;
      auto& m = spec_of(run.zoo, id);
      // Scaling is capped by bandwidth saturation: less demand per worker
      // lets a model keep scaling, more makes it flatten.
      const double f = want_low ? 1.25 : 0.8;
      note(id, "bandwidth_gbps_per_worker", m.bandwidth_gbps_per_worker,
           m.bandwidth_gbps_per_worker * f);
      m.bandwidth_gbps_per_worker *= f;
    }
    for (const auto& id : changed)
      run.profiles[id] = profile_model(run.zoo, node, id, seed, config);
  }
  return run;
}

}  // namespace tenantsim
