#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tenantsim/workload.hpp"

namespace tenantsim {

/// One CPU socket. Defaults follow the evaluated Xeon node, except memory
/// capacity (see README: the knee of the 25 GB/worker model sits at 8).
struct NodeConfig {
  int cores = 16;
  int llc_ways = 11;
  double mem_bandwidth_gbps = 128.0;
  double mem_capacity_gb = 224.0;

  void validate() const;
};

struct ModelAllocation {
  int workers = 0;
  int ways = 0;

  bool operator==(const ModelAllocation&) const = default;
};

struct AllocationState {
  std::map<std::string, ModelAllocation> models;
  bool partitioning_enabled = true;

  int total_workers() const;
  int total_ways() const;
  /// Throws invalid-allocation when core/way sums or way minimums are broken.
  void validate(const NodeConfig& node) const;
};

enum class MemoryCheck { ok, out_of_memory };

MemoryCheck check_memory_capacity(const Zoo& zoo, const AllocationState& alloc,
                                  const NodeConfig& node);

/// Largest worker count of `model` that fits next to `reserved_gb` of other
/// residents (clamped to the core count).
int capacity_knee(const ModelSpec& model, const NodeConfig& node,
                  double reserved_gb = 0.0);

/// Starting worker counts for a co-located pair (a, b): cores split evenly
/// (odd core to `a`), each clamped to its own knee; on a capacity conflict the
/// model with the larger per-worker footprint shrinks until the pair fits;
/// idle cores then go to whichever model can still host another worker,
/// the unconstrained one first. Throws initialization when neither model can
/// host a worker.
std::pair<int, int> initial_worker_split(const ModelSpec& a, const ModelSpec& b,
                                         const NodeConfig& node);

double miss_factor(const ModelSpec& model, int ways);
double bandwidth_demand(const ModelSpec& model, int workers, int ways);

/// Unpartitioned LLC: ways proportional to worker counts, largest-remainder
/// rounding (ties to the earlier model), every resident model >= 1 way.
std::vector<int> shared_llc_effective_ways(std::span<const int> workers,
                                           int llc_ways);

/// Ways each model actually caches into under `alloc`.
std::map<std::string, int> effective_ways(const AllocationState& alloc,
                                          const NodeConfig& node);

struct ServiceRate {
  double seconds_per_item = 0.0;
  double bandwidth_per_busy_worker_gbps = 0.0;  // after contention scaling
  double miss = 1.0;
  int effective_ways = 0;
};

/// Per-item service cost of every resident model. Bandwidth contention is
/// proportional fair share: when the summed demand of all allocated workers
/// exceeds the socket bandwidth, every model's share shrinks by the same
/// factor.
std::map<std::string, ServiceRate> service_rates(const Zoo& zoo,
                                                 const AllocationState& alloc,
                                                 const NodeConfig& node);

double service_time(const Zoo& zoo, const std::string& model, int batch,
                    const AllocationState& alloc, const NodeConfig& node);

/// Upper bound on sustainable throughput (queries/s) of `model` under
/// `alloc`, ignoring queueing. Used to seed max-load searches.
double service_capacity(const Zoo& zoo, const std::string& model,
                        const AllocationState& alloc, const NodeConfig& node);

}  // namespace tenantsim
