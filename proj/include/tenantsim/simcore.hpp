#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tenantsim/perfmodel.hpp"
#include "tenantsim/workload.hpp"

namespace tenantsim {

/// One row of the metrics CSV: a model's behaviour over one window.
struct WindowRecord {
  double time = 0.0;  // window start, seconds
  std::string model;
  double p95_ms = 0.0;
  double qps = 0.0;
  double violation_frac = 0.0;
  int workers = 0;
  int ways = 0;
  double bw_util = 0.0;  // this model's share of socket bandwidth
  double core_util = 0.0;
  std::size_t completions = 0;
};

struct ModelSummary {
  std::string model;
  std::size_t arrived = 0;
  std::size_t completed = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double achieved_qps = 0.0;
  double violation_frac = 0.0;
};

struct SimMetrics {
  std::vector<ModelSummary> models;
  double mean_core_util = 0.0;
  double mean_bw_util = 0.0;
  double window = 1.0;

  const ModelSummary& at(const std::string& model) const;
};

struct ResizeEvent {
  double time = 0.0;
  std::string model;
  int workers_from = 0;
  int workers_to = 0;
  int ways_from = 0;
  int ways_to = 0;
};

/// What a resource manager sees at the end of a monitor period.
struct TickObservation {
  std::string model;
  double tail_ms = 0.0;  // p95 over completions in the period
  double traffic_qps = 0.0;
  double sla_ms = 0.0;
  std::size_t completions = 0;
};

struct TickRecord {
  double time = 0.0;
  std::vector<TickObservation> observed;
};

struct SimResult {
  SimMetrics summary;
  std::vector<WindowRecord> windows;
  std::vector<ResizeEvent> resizes;
  std::vector<TickRecord> ticks;
  std::uint64_t trace_hash = 0;
  bool conservation_ok = true;
  /// Latencies (ms, arrival order) of queries arriving at or after
  /// SimOptions::measure_from.
  std::map<std::string, std::vector<double>> measured_latencies_ms;
};

/// Resource manager hooked into the engine at monitor-period boundaries.
/// Returned allocations take effect immediately for queries not yet started;
/// in-flight queries finish under the old allocation.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual double period() const = 0;
  virtual AllocationState on_tick(double now,
                                  const std::vector<TickObservation>& observed,
                                  const AllocationState& current) = 0;
};

struct SimOptions {
  double window = 1.0;
  bool collect_windows = true;
  double measure_from = -1.0;  // < 0: keep no per-query latencies
  Controller* controller = nullptr;
};

/// Deterministic simulation of one node. Every model in `alloc` receives an
/// independent Poisson stream seeded from (seed, model id); queries are served
/// FIFO by any idle worker of their model.
SimResult run_sim(const Zoo& zoo, const NodeConfig& node,
                  const AllocationState& alloc, const LoadSchedule& schedule,
                  double duration, std::uint64_t seed,
                  const SimOptions& options = {});

/// Event-queue implementation of the same model (arrival, dispatch and
/// completion events ordered by (time, sequence)). Fixed allocation only.
/// Slow; kept as the oracle for run_sim.
SimResult run_sim_reference(const Zoo& zoo, const NodeConfig& node,
                            const AllocationState& alloc,
                            const LoadSchedule& schedule, double duration,
                            std::uint64_t seed);

/// Nearest-rank percentile, p in [0, 100].
double percentile(std::span<const double> sample, double p);

struct ProbeConfig {
  double expected_queries = 2000.0;  // per loaded model
  double warmup_fraction = 0.1;
  double ramp_factor = 1.5;
  double relative_step = 0.02;
  double start_fraction = 0.1;  // of the queueing-free service capacity
  int max_probes = 80;
};

struct ProbeRecord {
  double scale = 0.0;
  bool pass = false;
  std::map<std::string, double> p95_ms;
};

/// Max load of a set of co-resident models. Each model m is driven at
/// `scale * weights[m]` queries/s; the search finds the largest scale at
/// which every loaded model keeps p95 <= SLA. With a single model and weight
/// 1 the scale is the model's max load in queries/s.
struct MaxLoadResult {
  AllocationState alloc;
  std::map<std::string, double> weights;
  double max_scale = 0.0;
  std::map<std::string, double> max_rates;
  double bandwidth_gbps = 0.0;  // consumed during the best passing probe
  std::vector<ProbeRecord> trace;
  std::string diagnostic;
};

MaxLoadResult measure_max_load(const Zoo& zoo, const NodeConfig& node,
                               const AllocationState& alloc,
                               const std::map<std::string, double>& weights,
                               std::uint64_t seed,
                               const ProbeConfig& config = {});

/// Single-model convenience overload (weight 1).
MaxLoadResult measure_max_load(const Zoo& zoo, const NodeConfig& node,
                               const std::string& model, int workers, int ways,
                               std::uint64_t seed,
                               const ProbeConfig& config = {});

/// Effective machine utilization in percent: sum of load / isolated max load.
double compute_emu(std::span<const double> achieved_load,
                   std::span<const double> isolated_max_load);

}  // namespace tenantsim
