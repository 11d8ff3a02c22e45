#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tenantsim/perfmodel.hpp"
#include "tenantsim/profiler.hpp"
#include "tenantsim/simcore.hpp"

namespace tenantsim {

struct RmuConfig {
  double t_monitor = 5.0;  // seconds
  double slack_low = 0.8;
  double slack_high = 1.0;

  void validate() const;
};

/// Starting allocation of a server hosting one or two models. A pair splits
/// cores evenly (see initial_worker_split) and ways evenly, the odd way going
/// to the lexicographically first model. Without partitioning every model
/// gets way count 0 and the shared-LLC model applies.
AllocationState initialize_server(const std::vector<std::string>& models,
                                  const Zoo& zoo, const NodeConfig& node,
                                  bool partitioning_enabled = true);

/// Smallest w <= max_workers whose profiled QPS covers urgency x traffic,
/// or the largest available w if none does. Never returns less than 1 when
/// max_workers >= 1.
int adjust_workers(const std::map<int, double>& qps_by_workers, double tail_ms,
                   double sla_ms, double traffic_qps, int max_workers);

/// Split of `cacheway_max` ways maximizing the summed table QPS at the given
/// worker counts; ties go to the more balanced split, then to `a`.
std::pair<int, int> adjust_llc_partition(const QpsTable& table_a, int workers_a,
                                         const QpsTable& table_b, int workers_b,
                                         int cacheway_max);

struct TickDecision {
  AllocationState next;
  bool workers_changed = false;
  std::vector<std::string> adjusted;  // models whose slack left the band
};

/// One monitor-and-adjust step. Over-provisioned models shrink first so the
/// freed cores are visible to models that need more; violators follow in
/// decreasing slack order.
TickDecision monitor_tick(const AllocationState& current,
                          const std::vector<TickObservation>& observed,
                          const Zoo& zoo, const NodeConfig& node,
                          const Profiles& profiles, const RmuConfig& config = {});

struct PartiesState {
  bool next_is_core = true;
};

/// Feedback baseline: the worst violator (slack > 1) takes one core or one
/// way, alternating, from a peer with slack < low. No profile lookups.
AllocationState parties_step(const AllocationState& current,
                             const std::vector<TickObservation>& observed,
                             const Zoo& zoo, const NodeConfig& node,
                             PartiesState& state, const RmuConfig& config = {});

class HeraController : public Controller {
 public:
  HeraController(const Zoo& zoo, const NodeConfig& node, const Profiles& profiles,
                 RmuConfig config = {});
  double period() const override { return config_.t_monitor; }
  AllocationState on_tick(double now, const std::vector<TickObservation>& observed,
                          const AllocationState& current) override;

 private:
  const Zoo& zoo_;
  const NodeConfig& node_;
  const Profiles& profiles_;
  RmuConfig config_;
};

class PartiesController : public Controller {
 public:
  PartiesController(const Zoo& zoo, const NodeConfig& node, RmuConfig config = {});
  double period() const override { return config_.t_monitor; }
  AllocationState on_tick(double now, const std::vector<TickObservation>& observed,
                          const AllocationState& current) override;

 private:
  const Zoo& zoo_;
  const NodeConfig& node_;
  RmuConfig config_;
  PartiesState state_;
};

}  // namespace tenantsim
