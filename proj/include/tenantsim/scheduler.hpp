#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tenantsim/affinity.hpp"
#include "tenantsim/perfmodel.hpp"
#include "tenantsim/profiler.hpp"

namespace tenantsim {

struct ServerAssignment {
  int node_id = 0;
  std::vector<std::string> models;  // one or two
  AllocationState alloc;
  std::map<std::string, double> credited_qps;
};

struct ClusterPlan {
  std::string policy;
  std::vector<ServerAssignment> servers;
  std::map<std::string, double> target_qps;
  std::map<std::string, double> serviced_qps;
  /// Set when Low models had to take dedicated servers for lack of a High
  /// partner.
  bool low_fallback = false;
};

using Targets = std::map<std::string, double>;

/// QPS credited to (a, b) for one co-located server, in argument order.
using PairQps = std::function<std::pair<double, double>(const std::string&,
                                                        const std::string&)>;

/// Estimates read from the affinity matrix (QPS table at the best split).
PairQps matrix_pair_qps(const CoAffinityMatrix& matrix);

ClusterPlan schedule_hera(const Targets& targets, const Profiles& profiles,
                          const CoAffinityMatrix& matrix, const NodeConfig& node,
                          const PairQps& pair_qps = {});

ClusterPlan schedule_deeprecsys(const Targets& targets, const Profiles& profiles,
                                const NodeConfig& node);

ClusterPlan schedule_random(const Targets& targets, const Profiles& profiles,
                            const CoAffinityMatrix& matrix,
                            const NodeConfig& node, std::uint64_t seed,
                            const PairQps& pair_qps = {});

/// Random pairing that never places two High models together.
ClusterPlan schedule_random_plus(const Targets& targets, const Profiles& profiles,
                                 const CoAffinityMatrix& matrix,
                                 const NodeConfig& node, std::uint64_t seed,
                                 const PairQps& pair_qps = {});

int servers_required(const ClusterPlan& plan);

/// Throws invalid-allocation if any server breaks core, way or memory limits.
void check_plan(const ClusterPlan& plan, const Zoo& zoo, const NodeConfig& node);

}  // namespace tenantsim
