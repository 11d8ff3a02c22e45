#include "tenantsim/perfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tenantsim/error.hpp"

namespace tenantsim {

void NodeConfig::validate() const {
  if (cores <= 0 || llc_ways <= 0 || !(mem_bandwidth_gbps > 0) ||
      !(mem_capacity_gb > 0))
    throw Error(Errc::config, "node config fields must all be > 0");
}

int AllocationState::total_workers() const {
  int sum = 0;
  for (const auto& [id, a] : models) sum += a.workers;
  return sum;
}

int AllocationState::total_ways() const {
  int sum = 0;
  for (const auto& [id, a] : models) sum += a.ways;
  return sum;
}

void AllocationState::validate(const NodeConfig& node) const {
  for (const auto& [id, a] : models)
    if (a.workers < 0 || a.ways < 0)
      throw Error(Errc::invalid_allocation, "negative allocation for " + id);
  if (total_workers() > node.cores)
    throw Error(Errc::invalid_allocation, "workers exceed core count");
  if (partitioning_enabled) {
    if (total_ways() > node.llc_ways)
      throw Error(Errc::invalid_allocation, "ways exceed LLC associativity");
    for (const auto& [id, a] : models)
      if (a.ways < 1)
        throw Error(Errc::invalid_allocation,
                    "model " + id + " needs at least one LLC way");
  }
}

MemoryCheck check_memory_capacity(const Zoo& zoo, const AllocationState& alloc,
                                  const NodeConfig& node) {
  double used = 0.0;
  for (const auto& [id, a] : alloc.models)
    used += a.workers * zoo.at(id).memory_footprint_gb;
  // Footprints are decimal GB figures; absorb representation error.
  return used <= node.mem_capacity_gb * (1 + 1e-12) ? MemoryCheck::ok
                                                    : MemoryCheck::out_of_memory;
}

int capacity_knee(const ModelSpec& model, const NodeConfig& node,
                  double reserved_gb) {
  const double room = node.mem_capacity_gb - reserved_gb;
  if (room < 0) return 0;
  const double fit = std::floor(room / model.memory_footprint_gb * (1 + 1e-12));
  return static_cast<int>(std::min<double>(node.cores, fit));
}

std::pair<int, int> initial_worker_split(const ModelSpec& a, const ModelSpec& b,
                                         const NodeConfig& node) {
  int wa = std::min((node.cores + 1) / 2, capacity_knee(a, node));
  int wb = std::min(node.cores / 2, capacity_knee(b, node));
  bool a_limited = wa < (node.cores + 1) / 2;
  bool b_limited = wb < node.cores / 2;
  auto fits = [&](int x, int y) {
    return x * a.memory_footprint_gb + y * b.memory_footprint_gb <=
           node.mem_capacity_gb * (1 + 1e-12);
  };
  while (!fits(wa, wb) && (wa > 0 || wb > 0)) {
    const bool shrink_a =
        wb == 0 || (wa > 0 && a.memory_footprint_gb >= b.memory_footprint_gb);
    if (shrink_a) {
      --wa;
      a_limited = true;
    } else {
      --wb;
      b_limited = true;
    }
  }
  if (wa == 0 && wb == 0)
    throw Error(Errc::initialization,
                "neither " + a.id + " nor " + b.id + " can host a worker");
  // Hand idle cores to a model that can still grow.
  while (wa + wb < node.cores) {
    const bool a_first = !a_limited || b_limited;
    if (a_first && fits(wa + 1, wb)) {
      ++wa;
    } else if (fits(wa, wb + 1)) {
      ++wb;
    } else if (!a_first && fits(wa + 1, wb)) {
      ++wa;
    } else {
      break;
    }
  }
  return {wa, wb};
}

double miss_factor(const ModelSpec& model, int ways) {
  if (ways < 1)
    throw Error(Errc::invalid_allocation, "miss factor needs >= 1 way");
  const int ws = model.cache_working_set_ways;
  if (ways >= ws) return 1.0;
  return 1.0 + model.cache_sensitivity * double(ws - ways) / double(ws);
}

double bandwidth_demand(const ModelSpec& model, int workers, int ways) {
  if (workers < 0)
    throw Error(Errc::invalid_allocation, "negative worker count");
  if (workers == 0) return 0.0;
  return workers * model.bandwidth_gbps_per_worker * miss_factor(model, ways);
}

std::vector<int> shared_llc_effective_ways(std::span<const int> workers,
                                           int llc_ways) {
  std::vector<int> out(workers.size(), 0);
  const int total = std::accumulate(workers.begin(), workers.end(), 0);
  if (total == 0) return out;
  std::vector<std::size_t> residents;
  for (std::size_t i = 0; i < workers.size(); ++i)
    if (workers[i] > 0) residents.push_back(i);
  std::vector<double> frac(workers.size(), 0.0);
  int assigned = 0;
  for (std::size_t i : residents) {
    const double exact = double(llc_ways) * workers[i] / total;
    out[i] = static_cast<int>(std::floor(exact));
    frac[i] = exact - out[i];
    assigned += out[i];
  }
  // Hand leftover ways out by largest remainder; stable order breaks ties.
  std::vector<std::size_t> order = residents;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < llc_ways; ++k, ++assigned)
    ++out[order[k % order.size()]];
  // Every resident needs one way; take from the largest holder.
  for (std::size_t i : residents) {
    if (out[i] >= 1) continue;
    auto donor = std::max_element(out.begin(), out.end());
    if (*donor <= 1) break;
    --*donor;
    out[i] = 1;
  }
  return out;
}

std::map<std::string, int> effective_ways(const AllocationState& alloc,
                                          const NodeConfig& node) {
  std::map<std::string, int> out;
  if (alloc.partitioning_enabled) {
    for (const auto& [id, a] : alloc.models) out[id] = a.ways;
    return out;
  }
  std::vector<int> workers;
  for (const auto& [id, a] : alloc.models) workers.push_back(a.workers);
  const auto ways = shared_llc_effective_ways(workers, node.llc_ways);
  std::size_t i = 0;
  for (const auto& [id, a] : alloc.models) out[id] = ways[i++];
  return out;
}

std::map<std::string, ServiceRate> service_rates(const Zoo& zoo,
                                                 const AllocationState& alloc,
                                                 const NodeConfig& node) {
  const auto ways = effective_ways(alloc, node);
  std::map<std::string, ServiceRate> out;
  double demand = 0.0;
  for (const auto& [id, a] : alloc.models) {
    if (a.workers == 0) continue;
    const ModelSpec& m = zoo.at(id);
    ServiceRate r;
    r.effective_ways = std::max(1, ways.at(id));
    r.miss = miss_factor(m, r.effective_ways);
    demand += bandwidth_demand(m, a.workers, r.effective_ways);
    out[id] = r;
  }
  const double share =
      demand > node.mem_bandwidth_gbps ? node.mem_bandwidth_gbps / demand : 1.0;
  for (auto& [id, r] : out) {
    const ModelSpec& m = zoo.at(id);
    const double compute = m.compute_us_per_item * 1e-6 * r.miss;
    // Misses inflate both traffic and demand, so they cancel in the memory
    // term; only the contention share stretches it.
    double memory = 0.0;
    if (m.bytes_kb_per_item > 0)
      memory = m.bytes_kb_per_item * 1e3 /
               (m.bandwidth_gbps_per_worker * 1e9 * share);
    r.seconds_per_item = compute + memory;
    r.bandwidth_per_busy_worker_gbps = m.bandwidth_gbps_per_worker * r.miss * share;
  }
  return out;
}

double service_time(const Zoo& zoo, const std::string& model, int batch,
                    const AllocationState& alloc, const NodeConfig& node) {
  auto it = alloc.models.find(model);
  if (it == alloc.models.end())
    throw Error(Errc::unknown_model, "model '" + model + "' not allocated");
  if (it->second.workers < 1)
    throw Error(Errc::invalid_allocation, "model '" + model + "' has no workers");
  if (batch < 0) throw Error(Errc::invalid_argument, "negative batch");
  if (batch == 0) return 0.0;
  return batch * service_rates(zoo, alloc, node).at(model).seconds_per_item;
}

double service_capacity(const Zoo& zoo, const std::string& model,
                        const AllocationState& alloc, const NodeConfig& node) {
  const int workers = alloc.models.at(model).workers;
  if (workers == 0) return 0.0;
  const double per_query = zoo.batch.mean() *
                           service_rates(zoo, alloc, node).at(model).seconds_per_item;
  return workers / per_query;
}

}  // namespace tenantsim
