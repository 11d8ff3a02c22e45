#include "tenantsim/rmu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "tenantsim/error.hpp"

namespace tenantsim {

void RmuConfig::validate() const {
  if (!(t_monitor > 0)) throw Error(Errc::config, "monitor period must be > 0");
  if (!(slack_low > 0 && slack_low < slack_high))
    throw Error(Errc::config, "slack bounds need 0 < low < high");
}

AllocationState initialize_server(const std::vector<std::string>& models,
                                  const Zoo& zoo, const NodeConfig& node,
                                  bool partitioning_enabled) {
  AllocationState s;
  s.partitioning_enabled = partitioning_enabled;
  if (models.size() == 1) {
    const int w = capacity_knee(zoo.at(models[0]), node);
    if (w < 1)
      throw Error(Errc::initialization, models[0] + " cannot host a worker");
    s.models[models[0]] = {w, partitioning_enabled ? node.llc_ways : 0};
    return s;
  }
  if (models.size() != 2 || models[0] == models[1])
    throw Error(Errc::initialization, "a server hosts one model or two distinct ones");
  const bool swap = models[1] < models[0];
  const std::string& a = swap ? models[1] : models[0];
  const std::string& b = swap ? models[0] : models[1];
  const auto [wa, wb] = initial_worker_split(zoo.at(a), zoo.at(b), node);
  if (partitioning_enabled && node.llc_ways < 2)
    throw Error(Errc::initialization, "partitioning a pair needs two ways");
  const int xa = partitioning_enabled ? (node.llc_ways + 1) / 2 : 0;
  const int xb = partitioning_enabled ? node.llc_ways / 2 : 0;
  s.models[a] = {wa, xa};
  s.models[b] = {wb, xb};
  return s;
}

int adjust_workers(const std::map<int, double>& qps_by_workers, double tail_ms,
                   double sla_ms, double traffic_qps, int max_workers) {
  if (!(traffic_qps >= 0))
    throw Error(Errc::invalid_argument, "traffic must be >= 0");
  if (!(sla_ms > 0)) throw Error(Errc::invalid_argument, "sla must be > 0");
  const double urgency = std::max(1.0, tail_ms / sla_ms);
  const double adjusted = urgency * traffic_qps;
  int largest = 0;
  for (const auto& [w, q] : qps_by_workers) {
    if (w > max_workers) break;
    largest = w;
    if (q >= adjusted) return w;
  }
  return largest;
}

namespace {

bool more_balanced(int a1, int b1, int a0, int b0) {
  const int d1 = std::abs(a1 - b1);
  const int d0 = std::abs(a0 - b0);
  if (d1 != d0) return d1 < d0;
  return a1 > a0;
}

double slack_of(const TickObservation& o) { return o.tail_ms / o.sla_ms; }

const TickObservation* find_obs(const std::vector<TickObservation>& observed,
                                const std::string& m) {
  for (const auto& o : observed)
    if (o.model == m) return &o;
  return nullptr;
}

double reserved_gb(const AllocationState& a, const Zoo& zoo,
                   const std::string& except) {
  double gb = 0.0;
  for (const auto& [id, x] : a.models)
    if (id != except) gb += x.workers * zoo.at(id).memory_footprint_gb;
  return gb;
}

}  // namespace

std::pair<int, int> adjust_llc_partition(const QpsTable& table_a, int workers_a,
                                         const QpsTable& table_b, int workers_b,
                                         int cacheway_max) {
  if (cacheway_max < 2)
    throw Error(Errc::invalid_argument, "a split needs at least two ways");
  double highest = -1.0;
  std::pair<int, int> best{0, 0};
  for (int xa = 1; xa < cacheway_max; ++xa) {
    const int xb = cacheway_max - xa;
    const double curr = table_a.at(workers_a, xa) + table_b.at(workers_b, xb);
    const bool tie =
        std::abs(curr - highest) <= 1e-12 * std::max({1.0, curr, highest});
    if ((!tie && curr > highest) ||
        (tie && more_balanced(xa, xb, best.first, best.second))) {
      highest = curr;
      best = {xa, xb};
    }
  }
  return best;
}

TickDecision monitor_tick(const AllocationState& current,
                          const std::vector<TickObservation>& observed,
                          const Zoo& zoo, const NodeConfig& node,
                          const Profiles& profiles, const RmuConfig& config) {
  TickDecision d;
  d.next = current;
  std::vector<const TickObservation*> down, up;
  for (const auto& [id, a] : current.models) {
    const TickObservation* o = find_obs(observed, id);
    // Traffic but no completions: nothing to judge the tail by yet.
    if (!o || (o->completions == 0 && o->traffic_qps > 0)) continue;
    const double s = slack_of(*o);
    if (s < config.slack_low)
      down.push_back(o);
    else if (s > config.slack_high)
      up.push_back(o);
  }
  std::stable_sort(up.begin(), up.end(), [](auto* x, auto* y) {
    return slack_of(*x) > slack_of(*y);
  });
  std::vector<const TickObservation*> order = down;
  order.insert(order.end(), up.begin(), up.end());

  for (const TickObservation* o : order) {
    d.adjusted.push_back(o->model);
    auto& mine = d.next.models.at(o->model);
    const int others = d.next.total_workers() - mine.workers;
    const int knee = capacity_knee(zoo.at(o->model), node,
                                   reserved_gb(d.next, zoo, o->model));
    const int cap = std::min(node.cores - others, knee);
    int w = adjust_workers(profiles.at(o->model).qps_by_workers, o->tail_ms,
                           o->sla_ms, o->traffic_qps, cap);
    if (w < 1) w = std::min(mine.workers, std::max(cap, 0));
    if (w != mine.workers) {
      mine.workers = w;
      d.workers_changed = true;
    }
  }

  if (d.workers_changed && current.partitioning_enabled) {
    if (d.next.models.size() == 2) {
      auto ia = d.next.models.begin();
      auto ib = std::next(ia);
      const auto [xa, xb] = adjust_llc_partition(
          profiles.at(ia->first).qps_table, ia->second.workers,
          profiles.at(ib->first).qps_table, ib->second.workers, node.llc_ways);
      ia->second.ways = xa;
      ib->second.ways = xb;
    } else if (d.next.models.size() == 1) {
      d.next.models.begin()->second.ways = node.llc_ways;
    }
  }
  return d;
}

AllocationState parties_step(const AllocationState& current,
                             const std::vector<TickObservation>& observed,
                             const Zoo& zoo, const NodeConfig& node,
                             PartiesState& state, const RmuConfig& config) {
  AllocationState next = current;
  const TickObservation* worst = nullptr;
  for (const auto& [id, a] : current.models) {
    const TickObservation* o = find_obs(observed, id);
    if (o && slack_of(*o) > config.slack_high &&
        (!worst || slack_of(*o) > slack_of(*worst)))
      worst = o;
  }
  if (!worst) return next;
  const TickObservation* donor = nullptr;
  for (const auto& [id, a] : current.models) {
    if (id == worst->model) continue;
    const TickObservation* o = find_obs(observed, id);
    if (o && slack_of(*o) < config.slack_low) donor = o;
  }
  if (!donor) return next;

  auto& taker = next.models.at(worst->model);
  auto& giver = next.models.at(donor->model);
  auto move_core = [&] {
    if (giver.workers <= 1) return false;
    const double room = node.mem_capacity_gb - reserved_gb(next, zoo, worst->model) +
                        zoo.at(donor->model).memory_footprint_gb;
    if ((taker.workers + 1) * zoo.at(worst->model).memory_footprint_gb >
        room * (1 + 1e-12))
      return false;
    --giver.workers;
    ++taker.workers;
    return true;
  };
  auto move_way = [&] {
    if (!current.partitioning_enabled || giver.ways <= 1) return false;
    --giver.ways;
    ++taker.ways;
    return true;
  };
  if (state.next_is_core) {
    if (move_core() || move_way()) state.next_is_core = false;
  } else {
    if (move_way() || move_core()) state.next_is_core = true;
  }
  return next;
}

HeraController::HeraController(const Zoo& zoo, const NodeConfig& node,
                               const Profiles& profiles, RmuConfig config)
    : zoo_(zoo), node_(node), profiles_(profiles), config_(config) {
  config_.validate();
}

AllocationState HeraController::on_tick(double,
                                        const std::vector<TickObservation>& observed,
                                        const AllocationState& current) {
  return monitor_tick(current, observed, zoo_, node_, profiles_, config_).next;
}

PartiesController::PartiesController(const Zoo& zoo, const NodeConfig& node,
                                     RmuConfig config)
    : zoo_(zoo), node_(node), config_(config) {
  config_.validate();
}

AllocationState PartiesController::on_tick(
    double, const std::vector<TickObservation>& observed,
    const AllocationState& current) {
  return parties_step(current, observed, zoo_, node_, state_, config_);
}

}  // namespace tenantsim
