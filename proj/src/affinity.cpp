#include "tenantsim/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "tenantsim/error.hpp"

namespace tenantsim {

namespace {

double lookup(const std::map<int, double>& curve, int ways) {
  auto it = curve.find(ways);
  if (it == curve.end())
    throw Error(Errc::incomplete_profile,
                "ways curve has no entry for " + std::to_string(ways));
  return it->second;
}

// True when split (a1,b1) beats (a0,b0) on the tie-break order.
bool preferred_split(int a1, int b1, int a0, int b0) {
  const int d1 = std::abs(a1 - b1);
  const int d0 = std::abs(a0 - b0);
  if (d1 != d0) return d1 < d0;
  return a1 > a0;
}

bool nearly_equal(double x, double y) {
  return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)});
}

}  // namespace

LlcAffinity coaff_llc(const std::map<int, double>& qps_a_by_ways,
                      const std::map<int, double>& qps_b_by_ways,
                      int cacheway_max) {
  if (cacheway_max < 2)
    throw Error(Errc::invalid_argument, "a split needs at least two ways");
  const double full_a = lookup(qps_a_by_ways, cacheway_max);
  const double full_b = lookup(qps_b_by_ways, cacheway_max);
  if (!(full_a > 0) || !(full_b > 0))
    throw Error(Errc::incomplete_profile, "full-ways QPS must be > 0");
  LlcAffinity best;
  best.value = -1.0;
  for (int wa = 1; wa < cacheway_max; ++wa) {
    const int wb = cacheway_max - wa;
    const double v = 0.5 * (lookup(qps_a_by_ways, wa) / full_a +
                            lookup(qps_b_by_ways, wb) / full_b);
    const bool tie = nearly_equal(v, best.value);
    if ((!tie && v > best.value) ||
        (tie && preferred_split(wa, wb, best.ways_a, best.ways_b))) {
      best = {v, wa, wb};
    }
  }
  best.value = std::min(best.value, 1.0);
  return best;
}

double coaff_dram(double membw_a, double membw_b, double membw_system) {
  if (!(membw_system > 0))
    throw Error(Errc::invalid_argument, "system bandwidth must be > 0");
  if (membw_a < 0 || membw_b < 0)
    throw Error(Errc::invalid_argument, "bandwidth demands must be >= 0");
  const double total = membw_a + membw_b;
  if (total == 0) return 1.0;
  return std::min(membw_system / total, 1.0);
}

double coaff_system(double coaff_llc, double coaff_dram) {
  return std::min(coaff_llc, coaff_dram);
}

PairAffinity CoAffinityMatrix::get(const std::string& first,
                                   const std::string& second) const {
  const bool flipped = second < first;
  auto key = flipped ? std::make_pair(second, first) : std::make_pair(first, second);
  auto it = entries.find(key);
  if (it == entries.end())
    throw Error(Errc::incomplete_profile,
                "no affinity entry for (" + first + ", " + second + ")");
  PairAffinity p = it->second;
  if (flipped) {
    std::swap(p.a, p.b);
    std::swap(p.ways_a, p.ways_b);
    std::swap(p.workers_a, p.workers_b);
    std::swap(p.membw_a, p.membw_b);
    std::swap(p.qps_a, p.qps_b);
  }
  return p;
}

double CoAffinityMatrix::value(const std::string& a, const std::string& b) const {
  return get(a, b).value;
}

std::pair<int, int> CoAffinityMatrix::best_split(const std::string& a,
                                                 const std::string& b) const {
  const auto p = get(a, b);
  return {p.ways_a, p.ways_b};
}

std::pair<double, double> CoAffinityMatrix::est_pair_qps(
    const std::string& a, const std::string& b) const {
  const auto p = get(a, b);
  return {p.qps_a, p.qps_b};
}

int half_core_workers(const ProfileSet& p, const NodeConfig& node) {
  int w = std::max(1, node.cores / 2);
  if (!p.membw_by_workers.empty())
    w = std::min(w, p.membw_by_workers.rbegin()->first);
  return w;
}

PairAffinity pair_affinity(const ProfileSet& a, const ProfileSet& b,
                           const Zoo& zoo, const NodeConfig& node) {
  PairAffinity out;
  out.a = a.model;
  out.b = b.model;
  const auto llc = coaff_llc(a.qps_by_ways, b.qps_by_ways, node.llc_ways);
  out.llc = llc.value;
  out.ways_a = llc.ways_a;
  out.ways_b = llc.ways_b;

  auto bw = [&](const ProfileSet& p) {
    auto it = p.membw_by_workers.find(half_core_workers(p, node));
    if (it == p.membw_by_workers.end())
      throw Error(Errc::incomplete_profile, "no bandwidth profile for " + p.model);
    return it->second;
  };
  out.membw_a = bw(a);
  out.membw_b = bw(b);
  out.dram = coaff_dram(out.membw_a, out.membw_b, node.mem_bandwidth_gbps);
  out.value = coaff_system(out.llc, out.dram);

  const auto [wa, wb] = initial_worker_split(zoo.at(a.model), zoo.at(b.model), node);
  out.workers_a = wa;
  out.workers_b = wb;
  out.qps_a = wa > 0 ? a.qps_table.at(wa, out.ways_a) : 0.0;
  out.qps_b = wb > 0 ? b.qps_table.at(wb, out.ways_b) : 0.0;
  return out;
}

CoAffinityMatrix build_affinity_matrix(const Profiles& profiles, const Zoo& zoo,
                                       const NodeConfig& node, Exec exec) {
  CoAffinityMatrix m;
  for (const auto& [id, p] : profiles) m.models.push_back(id);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < m.models.size(); ++i)
    for (std::size_t j = i; j < m.models.size(); ++j)
      pairs.emplace_back(m.models[i], m.models[j]);
  std::vector<PairAffinity> values(pairs.size());
  for_each_index(exec, pairs.size(), [&](std::size_t k) {
    values[k] = pair_affinity(profiles.at(pairs[k].first),
                              profiles.at(pairs[k].second), zoo, node);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) m.entries[pairs[k]] = values[k];
  return m;
}

}  // namespace tenantsim
