#include "tenantsim/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tenantsim/error.hpp"
#include "tenantsim/seed.hpp"

namespace tenantsim {

namespace {

double target_of(const Targets& t, const std::string& m) {
  auto it = t.find(m);
  return it == t.end() ? 0.0 : it->second;
}

bool unmet(const ClusterPlan& plan, const std::string& m) {
  return plan.serviced_qps.at(m) < target_of(plan.target_qps, m);
}

ClusterPlan start_plan(const std::string& policy, const Targets& targets,
                       const Profiles& profiles) {
  ClusterPlan plan;
  plan.policy = policy;
  for (const auto& [m, t] : targets) {
    if (!(t >= 0)) throw Error(Errc::invalid_argument, "negative target for " + m);
    if (!profiles.count(m))
      throw Error(Errc::missing_profile, "no profile for '" + m + "'");
    plan.target_qps[m] = t;
    plan.serviced_qps[m] = 0.0;
  }
  return plan;
}

void add_dedicated(ClusterPlan& plan, const ProfileSet& p, const NodeConfig& node,
                   int count) {
  for (int i = 0; i < count; ++i) {
    ServerAssignment s;
    s.node_id = int(plan.servers.size());
    s.models = {p.model};
    s.alloc.models[p.model] = {p.capacity_knee, node.llc_ways};
    s.credited_qps[p.model] = p.isolated_max_load;
    plan.serviced_qps[p.model] += p.isolated_max_load;
    plan.servers.push_back(std::move(s));
  }
}

// Dedicated servers for whatever target `m` still lacks.
void top_up_dedicated(ClusterPlan& plan, const ProfileSet& p,
                      const NodeConfig& node) {
  const double missing = target_of(plan.target_qps, p.model) - plan.serviced_qps[p.model];
  if (!(missing > 0)) return;
  if (!(p.isolated_max_load > 0))
    throw Error(Errc::unschedulable_model,
                "model '" + p.model + "' has zero isolated max load");
  add_dedicated(plan, p, node, int(std::ceil(missing / p.isolated_max_load - 1e-9)));
}

void add_pair(ClusterPlan& plan, const CoAffinityMatrix& matrix,
              const PairQps& pair_qps, const std::string& a,
              const std::string& b) {
  const auto entry = matrix.get(a, b);
  const auto [qa, qb] = pair_qps(a, b);
  if (!(qa > 0) && !(qb > 0))
    throw Error(Errc::unschedulable_model,
                "pair (" + a + ", " + b + ") serves no queries");
  ServerAssignment s;
  s.node_id = int(plan.servers.size());
  s.models = {a, b};
  s.alloc.models[a] = {entry.workers_a, entry.ways_a};
  s.alloc.models[b] = {entry.workers_b, entry.ways_b};
  s.credited_qps[a] = qa;
  s.credited_qps[b] = qb;
  if (plan.serviced_qps.count(a)) plan.serviced_qps[a] += qa;
  if (plan.serviced_qps.count(b)) plan.serviced_qps[b] += qb;
  plan.servers.push_back(std::move(s));
}

std::vector<std::string> by_class(const ClusterPlan& plan, const Profiles& profiles,
                                  Scalability cls) {
  std::vector<std::string> out;
  for (const auto& [m, t] : plan.target_qps)
    if (profiles.at(m).scalability == cls) out.push_back(m);
  return out;
}

PairQps or_matrix(const PairQps& given, const CoAffinityMatrix& matrix) {
  return given ? given : matrix_pair_qps(matrix);
}

ClusterPlan schedule_random_impl(const std::string& policy, bool exclude_high_high,
                                 const Targets& targets, const Profiles& profiles,
                                 const CoAffinityMatrix& matrix,
                                 const NodeConfig& node, std::uint64_t seed,
                                 const PairQps& given) {
  const PairQps pair_qps = or_matrix(given, matrix);
  ClusterPlan plan = start_plan(policy, targets, profiles);
  std::mt19937_64 rng(derive_seed(seed, policy));
  auto order = by_class(plan, profiles, Scalability::Low);
  const auto high = by_class(plan, profiles, Scalability::High);
  order.insert(order.end(), high.begin(), high.end());

  for (const auto& m : order) {
    const bool m_high = profiles.at(m).scalability == Scalability::High;
    std::vector<std::string> eligible;
    for (const auto& [other, t] : plan.target_qps) {
      if (other == m) continue;
      if (exclude_high_high && m_high &&
          profiles.at(other).scalability == Scalability::High)
        continue;
      eligible.push_back(other);
    }
    if (eligible.empty()) {
      top_up_dedicated(plan, profiles.at(m), node);
      continue;
    }
    while (unmet(plan, m)) {
      std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
      const std::string& partner = eligible[pick(rng)];
      const double before = plan.serviced_qps[m];
      add_pair(plan, matrix, pair_qps, m, partner);
      if (!(plan.serviced_qps[m] > before))
        throw Error(Errc::unschedulable_model,
                    "model '" + m + "' gains nothing from co-location");
    }
  }
  return plan;
}

}  // namespace

PairQps matrix_pair_qps(const CoAffinityMatrix& matrix) {
  return [&matrix](const std::string& a, const std::string& b) {
    return matrix.est_pair_qps(a, b);
  };
}

ClusterPlan schedule_hera(const Targets& targets, const Profiles& profiles,
                          const CoAffinityMatrix& matrix, const NodeConfig& node,
                          const PairQps& given) {
  const PairQps pair_qps = or_matrix(given, matrix);
  ClusterPlan plan = start_plan("hera", targets, profiles);
  const auto low = by_class(plan, profiles, Scalability::Low);
  // Only High models with demand count as partners; a zero-target High
  // model offers no co-location opportunity.
  std::vector<std::string> high;
  for (const auto& h : by_class(plan, profiles, Scalability::High))
    if (plan.target_qps.at(h) > 0) high.push_back(h);

  // Step A: each Low model rides along with its best High partner.
  for (const auto& m : low) {
    if (!unmet(plan, m)) continue;
    if (high.empty()) {
      plan.low_fallback = true;
      top_up_dedicated(plan, profiles.at(m), node);
      continue;
    }
    while (unmet(plan, m)) {
      const std::string* best = nullptr;
      bool best_unmet = false;
      double best_value = -1.0;
      for (const auto& h : high) {
        const bool h_unmet = unmet(plan, h);
        const double v = matrix.value(m, h);
        // Unmet partners first, then affinity; `high` is sorted so the
        // first of equals wins.
        if (!best || (h_unmet && !best_unmet) ||
            (h_unmet == best_unmet && v > best_value)) {
          best = &h;
          best_unmet = h_unmet;
          best_value = v;
        }
      }
      const double before = plan.serviced_qps[m];
      add_pair(plan, matrix, pair_qps, m, *best);
      if (!(plan.serviced_qps[m] > before))
        throw Error(Errc::unschedulable_model,
                    "model '" + m + "' gains nothing from co-location");
    }
  }
  // Step B: High models left short get dedicated servers.
  for (const auto& m : high) top_up_dedicated(plan, profiles.at(m), node);
  return plan;
}

ClusterPlan schedule_deeprecsys(const Targets& targets, const Profiles& profiles,
                                const NodeConfig& node) {
  ClusterPlan plan = start_plan("deeprecsys", targets, profiles);
  for (const auto& [m, t] : plan.target_qps) top_up_dedicated(plan, profiles.at(m), node);
  return plan;
}

ClusterPlan schedule_random(const Targets& targets, const Profiles& profiles,
                            const CoAffinityMatrix& matrix,
                            const NodeConfig& node, std::uint64_t seed,
                            const PairQps& pair_qps) {
  return schedule_random_impl("random", false, targets, profiles, matrix, node,
                              seed, pair_qps);
}

ClusterPlan schedule_random_plus(const Targets& targets, const Profiles& profiles,
                                 const CoAffinityMatrix& matrix,
                                 const NodeConfig& node, std::uint64_t seed,
                                 const PairQps& pair_qps) {
  return schedule_random_impl("random+", true, targets, profiles, matrix, node,
                              seed, pair_qps);
}

int servers_required(const ClusterPlan& plan) { return int(plan.servers.size()); }

void check_plan(const ClusterPlan& plan, const Zoo& zoo, const NodeConfig& node) {
  for (const auto& s : plan.servers) {
    if (s.models.empty() || s.models.size() > 2)
      throw Error(Errc::invalid_allocation, "server hosts 1 or 2 models");
    s.alloc.validate(node);
    if (check_memory_capacity(zoo, s.alloc, node) != MemoryCheck::ok)
      throw Error(Errc::invalid_allocation, "server exceeds memory capacity");
  }
}

}  // namespace tenantsim
