#include "tenantsim/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>

#include "tenantsim/error.hpp"
#include "tenantsim/seed.hpp"

namespace tenantsim {

const ModelSummary& SimMetrics::at(const std::string& model) const {
  for (const auto& m : models)
    if (m.model == model) return m;
  throw Error(Errc::unknown_model, "no metrics for '" + model + "'");
}

double percentile(std::span<const double> sample, double p) {
  if (sample.empty())
    throw Error(Errc::empty_sample, "percentile of an empty sample");
  if (!(p >= 0 && p <= 100))
    throw Error(Errc::invalid_argument, "percentile outside [0,100]");
  std::vector<double> v(sample.begin(), sample.end());
  const auto n = v.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * double(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(v.begin(), v.begin() + (rank - 1), v.end());
  return v[rank - 1];
}

double compute_emu(std::span<const double> achieved_load,
                   std::span<const double> isolated_max_load) {
  if (achieved_load.size() != isolated_max_load.size())
    throw Error(Errc::invalid_argument, "EMU inputs differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < achieved_load.size(); ++i) {
    if (!(isolated_max_load[i] > 0))
      throw Error(Errc::undefined_emu, "EMU needs isolated max load > 0");
    sum += achieved_load[i] / isolated_max_load[i];
  }
  return sum * 100.0;
}

namespace {

using MinHeap = std::greater<>;

struct Lane {
  Lane(std::string id_, const ModelSpec* spec_, ArrivalStream stream_)
      : id(std::move(id_)), spec(spec_), stream(std::move(stream_)) {}

  std::string id;
  const ModelSpec* spec = nullptr;
  ArrivalStream stream;
  std::deque<Arrival> queue;
  std::vector<double> free_at;  // min-heap of worker availability times
  double seconds_per_item = 0.0;
  double bw_per_busy = 0.0;
  int workers = 0;
  int ways = 0;

  std::size_t arrived = 0;
  std::size_t started = 0;
  std::size_t completed = 0;
  std::size_t tick_arrivals = 0;

  std::priority_queue<std::pair<double, double>,
                      std::vector<std::pair<double, double>>, MinHeap>
      inflight;  // (completion time, latency ms)
  std::vector<double> window_lat;
  std::vector<double> tick_lat;
  std::vector<double> busy;     // per window, seconds
  std::vector<double> bw_busy;  // per window, GB
  double busy_total = 0.0;
  double bw_total = 0.0;
  std::vector<double> all_lat;
  std::vector<double> measured;
};

class Engine {
 public:
  Engine(const Zoo& zoo, const NodeConfig& node, const AllocationState& alloc,
         const LoadSchedule& schedule, double duration, std::uint64_t seed,
         const SimOptions& options)
      : zoo_(zoo), node_(node), alloc_(alloc), duration_(duration),
        options_(options) {
    if (!(duration > 0))
      throw Error(Errc::invalid_argument, "duration must be > 0");
    if (!(options.window > 0))
      throw Error(Errc::invalid_argument, "window must be > 0");
    schedule.validate();
    validate_alloc(alloc);
    windowed_ = options.collect_windows || options.controller != nullptr;
    nwin_ = windowed_ ? static_cast<std::size_t>(
                            std::ceil(duration / options.window - 1e-9))
                      : 0;
    for (const auto& [id, a] : alloc.models) {
      Lane lane(id, &zoo.at(id),
                ArrivalStream(schedule, id, zoo.batch, derive_seed(seed, id)));
      lane.busy.assign(nwin_, 0.0);
      lane.bw_busy.assign(nwin_, 0.0);
      lanes_.push_back(std::move(lane));
    }
    apply(alloc, 0.0, /*record=*/false);
  }

  SimResult run() {
    if (!windowed_) {
      for (std::size_t i = 0; i < lanes_.size(); ++i)
        advance(i, std::numeric_limits<double>::infinity());
      return finish();
    }
    std::size_t ticks_per_period = 0;
    if (options_.controller) {
      const double p = options_.controller->period();
      if (!(p > 0)) throw Error(Errc::invalid_argument, "monitor period <= 0");
      ticks_per_period = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(p / options_.window)));
    }
    for (std::size_t k = 1; k <= nwin_; ++k) {
      const double t = std::min(duration_, double(k) * options_.window);
      for (std::size_t i = 0; i < lanes_.size(); ++i) {
        advance(i, t);
        settle(i, t);
      }
      emit_window(k - 1);
      if (ticks_per_period && k % ticks_per_period == 0 && k < nwin_)
        tick(t, double(ticks_per_period) * options_.window);
    }
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
      advance(i, std::numeric_limits<double>::infinity());
      settle(i, std::numeric_limits<double>::infinity());
    }
    return finish();
  }

 private:
  void validate_alloc(const AllocationState& alloc) const {
    alloc.validate(node_);
    if (check_memory_capacity(zoo_, alloc, node_) != MemoryCheck::ok)
      throw Error(Errc::capacity, "allocation exceeds node memory capacity");
  }

  void apply(const AllocationState& next, double now, bool record) {
    const auto rates = service_rates(zoo_, next, node_);
    for (auto& lane : lanes_) {
      auto it = next.models.find(lane.id);
      if (it == next.models.end())
        throw Error(Errc::invalid_allocation,
                    "controller dropped model '" + lane.id + "'");
      const int workers = it->second.workers;
      auto rate = rates.find(lane.id);
      const int ways = rate == rates.end() ? 0 : rate->second.effective_ways;
      if (record && (workers != lane.workers || ways != lane.ways))
        result_.resizes.push_back(
            {now, lane.id, lane.workers, workers, lane.ways, ways});
      resize_pool(lane, workers, now);
      lane.workers = workers;
      lane.ways = ways;
      lane.seconds_per_item =
          rate == rates.end() ? 0.0 : rate->second.seconds_per_item;
      lane.bw_per_busy =
          rate == rates.end() ? 0.0 : rate->second.bandwidth_per_busy_worker_gbps;
    }
    alloc_ = next;
  }

  static void resize_pool(Lane& lane, int workers, double now) {
    auto& heap = lane.free_at;
    if (int(heap.size()) < workers) {
      while (int(heap.size()) < workers) {
        heap.push_back(now);
        std::push_heap(heap.begin(), heap.end(), MinHeap{});
      }
    } else if (int(heap.size()) > workers) {
      // Idle workers retire first; busy ones finish their query then leave.
      std::sort(heap.begin(), heap.end());
      heap.resize(workers);
      std::make_heap(heap.begin(), heap.end(), MinHeap{});
    }
  }

  void advance(std::size_t li, double limit) {
    Lane& lane = lanes_[li];
    while (auto a = lane.stream.next(std::min(limit, duration_))) {
      lane.queue.push_back(*a);
      ++lane.arrived;
      ++lane.tick_arrivals;
    }
    auto& heap = lane.free_at;
    while (!lane.queue.empty() && !heap.empty()) {
      const Arrival q = lane.queue.front();
      const double start = std::max(q.time, heap.front());
      if (start >= limit) break;
      lane.queue.pop_front();
      std::pop_heap(heap.begin(), heap.end(), MinHeap{});
      const double done = start + q.batch * lane.seconds_per_item;
      heap.back() = done;
      std::push_heap(heap.begin(), heap.end(), MinHeap{});
      ++lane.started;

      const double latency_ms = (done - q.time) * 1e3;
      hash_ = fnv1a_bytes(&li, sizeof li, hash_);
      hash_ = fnv1a_bytes(&q.time, sizeof q.time, hash_);
      hash_ = fnv1a_bytes(&start, sizeof start, hash_);
      hash_ = fnv1a_bytes(&done, sizeof done, hash_);
      lane.all_lat.push_back(latency_ms);
      if (options_.measure_from >= 0 && q.time >= options_.measure_from)
        lane.measured.push_back(latency_ms);
      account_busy(lane, start, done);
      if (windowed_)
        lane.inflight.emplace(done, latency_ms);
      else
        ++lane.completed;
    }
  }

  void account_busy(Lane& lane, double start, double done) {
    const double s = std::min(start, duration_);
    const double e = std::min(done, duration_);
    if (e > s) {
      lane.busy_total += e - s;
      lane.bw_total += (e - s) * lane.bw_per_busy;
    }
    if (!windowed_ || e <= s) return;
    const double w = options_.window;
    auto k = static_cast<std::size_t>(s / w);
    for (; k < nwin_ && double(k) * w < e; ++k) {
      const double lo = std::max(s, double(k) * w);
      const double hi = std::min(e, double(k + 1) * w);
      if (hi > lo) {
        lane.busy[k] += hi - lo;
        lane.bw_busy[k] += (hi - lo) * lane.bw_per_busy;
      }
    }
  }

  void settle(std::size_t li, double t) {
    Lane& lane = lanes_[li];
    while (!lane.inflight.empty() && lane.inflight.top().first <= t) {
      const double lat = lane.inflight.top().second;
      lane.inflight.pop();
      ++lane.completed;
      if (std::isfinite(t)) {
        lane.window_lat.push_back(lat);
        lane.tick_lat.push_back(lat);
      }
    }
    if (lane.arrived != lane.completed + lane.inflight.size() + lane.queue.size() ||
        lane.started != lane.completed + lane.inflight.size())
      result_.conservation_ok = false;
  }

  void emit_window(std::size_t k) {
    if (!options_.collect_windows) {
      for (auto& lane : lanes_) lane.window_lat.clear();
      return;
    }
    const double w = options_.window;
    for (auto& lane : lanes_) {
      WindowRecord r;
      r.time = double(k) * w;
      r.model = lane.id;
      r.completions = lane.window_lat.size();
      if (!lane.window_lat.empty()) {
        r.p95_ms = percentile(lane.window_lat, 95.0);
        const double sla = lane.spec->sla_ms;
        r.violation_frac =
            double(std::count_if(lane.window_lat.begin(), lane.window_lat.end(),
                                 [&](double x) { return x > sla; })) /
            double(lane.window_lat.size());
      }
      r.qps = double(r.completions) / w;
      r.workers = lane.workers;
      r.ways = lane.ways;
      r.core_util = lane.busy[k] / (w * node_.cores);
      r.bw_util = lane.bw_busy[k] / (w * node_.mem_bandwidth_gbps);
      result_.windows.push_back(std::move(r));
      lane.window_lat.clear();
    }
  }

  void tick(double now, double period) {
    std::vector<TickObservation> observed;
    for (auto& lane : lanes_) {
      TickObservation o;
      o.model = lane.id;
      o.sla_ms = lane.spec->sla_ms;
      o.completions = lane.tick_lat.size();
      o.tail_ms = lane.tick_lat.empty() ? 0.0 : percentile(lane.tick_lat, 95.0);
      o.traffic_qps = double(lane.tick_arrivals) / period;
      observed.push_back(o);
      lane.tick_lat.clear();
      lane.tick_arrivals = 0;
    }
    AllocationState next = options_.controller->on_tick(now, observed, alloc_);
    result_.ticks.push_back({now, std::move(observed)});
    validate_alloc(next);
    apply(next, now, /*record=*/true);
  }

  SimResult finish() {
    double busy = 0.0;
    double bw = 0.0;
    for (auto& lane : lanes_) {
      ModelSummary s;
      s.model = lane.id;
      s.arrived = lane.arrived;
      s.completed = lane.completed;
      if (!lane.all_lat.empty()) {
        s.p50_ms = percentile(lane.all_lat, 50.0);
        s.p95_ms = percentile(lane.all_lat, 95.0);
        const double sla = lane.spec->sla_ms;
        s.violation_frac =
            double(std::count_if(lane.all_lat.begin(), lane.all_lat.end(),
                                 [&](double x) { return x > sla; })) /
            double(lane.all_lat.size());
      }
      s.achieved_qps = double(lane.completed) / duration_;
      result_.summary.models.push_back(s);
      busy += lane.busy_total;
      bw += lane.bw_total;
      if (options_.measure_from >= 0)
        result_.measured_latencies_ms[lane.id] = std::move(lane.measured);
    }
    result_.summary.window = options_.window;
    result_.summary.mean_core_util = busy / (duration_ * node_.cores);
    result_.summary.mean_bw_util = bw / (duration_ * node_.mem_bandwidth_gbps);
    result_.trace_hash = hash_;
    return std::move(result_);
  }

  const Zoo& zoo_;
  const NodeConfig& node_;
  AllocationState alloc_;
  double duration_;
  SimOptions options_;
  bool windowed_ = false;
  std::size_t nwin_ = 0;
  std::vector<Lane> lanes_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  SimResult result_;
};

}  // namespace

SimResult run_sim(const Zoo& zoo, const NodeConfig& node,
                  const AllocationState& alloc, const LoadSchedule& schedule,
                  double duration, std::uint64_t seed,
                  const SimOptions& options) {
  Engine engine(zoo, node, alloc, schedule, duration, seed, options);
  return engine.run();
}

SimResult run_sim_reference(const Zoo& zoo, const NodeConfig& node,
                            const AllocationState& alloc,
                            const LoadSchedule& schedule, double duration,
                            std::uint64_t seed) {
  alloc.validate(node);
  if (check_memory_capacity(zoo, alloc, node) != MemoryCheck::ok)
    throw Error(Errc::capacity, "allocation exceeds node memory capacity");
  const auto rates = service_rates(zoo, alloc, node);

  enum Kind { kArrival = 0, kCompletion = 1 };
  struct Event {
    double time;
    std::uint64_t seq;
    Kind kind;
    std::size_t lane;
    bool operator>(const Event& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };
  struct Model {
    std::string id;
    double seconds_per_item = 0.0;
    int idle = 0;
    std::deque<Arrival> queue;
    std::vector<double> latencies;  // indexed by arrival order
    std::deque<std::size_t> queue_index;
  };

  std::vector<Model> models;
  std::vector<ArrivalStream> streams;
  for (const auto& [id, a] : alloc.models) {
    Model m;
    m.id = id;
    m.idle = a.workers;
    auto r = rates.find(id);
    m.seconds_per_item = r == rates.end() ? 0.0 : r->second.seconds_per_item;
    models.push_back(std::move(m));
    streams.emplace_back(schedule, id, zoo.batch, derive_seed(seed, id));
  }

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;
  std::vector<std::optional<Arrival>> next_arrival(models.size());

  auto schedule_arrival = [&](std::size_t i) {
    next_arrival[i] = streams[i].next(duration);
    if (next_arrival[i])
      events.push({next_arrival[i]->time, seq++, kArrival, i});
  };
  // completion seq -> (arrival index, arrival time)
  std::map<std::uint64_t, std::pair<std::size_t, double>> pending;

  auto dispatch = [&](std::size_t i, double now) {
    Model& m = models[i];
    while (m.idle > 0 && !m.queue.empty()) {
      const Arrival q = m.queue.front();
      const std::size_t idx = m.queue_index.front();
      m.queue.pop_front();
      m.queue_index.pop_front();
      --m.idle;
      const double done = now + q.batch * m.seconds_per_item;
      pending[seq] = {idx, q.time};
      events.push({done, seq++, kCompletion, i});
    }
  };

  for (std::size_t i = 0; i < models.size(); ++i) schedule_arrival(i);
  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    Model& m = models[ev.lane];
    if (ev.kind == kArrival) {
      m.queue.push_back(*next_arrival[ev.lane]);
      m.queue_index.push_back(m.latencies.size());
      m.latencies.push_back(std::numeric_limits<double>::quiet_NaN());
      schedule_arrival(ev.lane);
    } else {
      auto it = pending.find(ev.seq);
      m.latencies[it->second.first] = (ev.time - it->second.second) * 1e3;
      pending.erase(it);
      ++m.idle;
    }
    dispatch(ev.lane, ev.time);
  }

  SimResult out;
  for (auto& m : models) {
    ModelSummary s;
    s.model = m.id;
    s.arrived = m.latencies.size();
    s.completed = static_cast<std::size_t>(std::count_if(
        m.latencies.begin(), m.latencies.end(),
        [](double x) { return !std::isnan(x); }));
    if (s.completed == s.arrived && !m.latencies.empty()) {
      s.p50_ms = percentile(m.latencies, 50.0);
      s.p95_ms = percentile(m.latencies, 95.0);
    }
    s.achieved_qps = double(s.completed) / duration;
    out.summary.models.push_back(s);
    out.measured_latencies_ms[m.id] = std::move(m.latencies);
  }
  return out;
}

namespace {

struct ProbeOutcome {
  bool pass = false;
  std::map<std::string, double> p95;
  double bandwidth = 0.0;
};

}  // namespace

MaxLoadResult measure_max_load(const Zoo& zoo, const NodeConfig& node,
                               const AllocationState& alloc,
                               const std::map<std::string, double>& weights,
                               std::uint64_t seed, const ProbeConfig& config) {
  MaxLoadResult result;
  result.alloc = alloc;
  result.weights = weights;
  alloc.validate(node);
  if (check_memory_capacity(zoo, alloc, node) != MemoryCheck::ok)
    throw Error(Errc::capacity, "allocation exceeds node memory capacity");

  double min_weight = std::numeric_limits<double>::infinity();
  double capacity_scale = std::numeric_limits<double>::infinity();
  for (const auto& [id, w] : weights) {
    if (!(w >= 0)) throw Error(Errc::invalid_rate, "negative probe weight");
    if (w == 0) continue;
    auto it = alloc.models.find(id);
    if (it == alloc.models.end())
      throw Error(Errc::unknown_model, "weighted model '" + id + "' not allocated");
    if (it->second.workers == 0) {
      result.diagnostic = "model '" + id + "' has no workers";
      return result;
    }
    min_weight = std::min(min_weight, w);
    capacity_scale =
        std::min(capacity_scale, service_capacity(zoo, id, alloc, node) / w);
  }
  if (!std::isfinite(min_weight)) {
    result.diagnostic = "no loaded model";
    return result;
  }

  auto probe = [&](double scale) {
    std::map<std::string, double> rates;
    for (const auto& [id, a] : alloc.models) {
      auto it = weights.find(id);
      rates[id] = it == weights.end() ? 0.0 : scale * it->second;
    }
    const double duration = config.expected_queries / (scale * min_weight);
    SimOptions opts;
    opts.collect_windows = false;
    opts.measure_from = config.warmup_fraction * duration;
    const SimResult sim =
        run_sim(zoo, node, alloc, LoadSchedule::constant(rates), duration,
                seed, opts);
    ProbeOutcome out;
    out.pass = true;
    for (const auto& [id, w] : weights) {
      if (w == 0) continue;
      const auto& lat = sim.measured_latencies_ms.at(id);
      const double p95 = lat.empty() ? 0.0 : percentile(lat, 95.0);
      out.p95[id] = p95;
      if (p95 > zoo.at(id).sla_ms) out.pass = false;
    }
    out.bandwidth = sim.summary.mean_bw_util * node.mem_bandwidth_gbps;
    result.trace.push_back({scale, out.pass, out.p95});
    return out;
  };

  const double floor_scale = 1e-3 * capacity_scale;
  double lo = config.start_fraction * capacity_scale;
  ProbeOutcome best = probe(lo);
  while (!best.pass) {
    lo /= config.ramp_factor;
    if (lo < floor_scale || int(result.trace.size()) >= config.max_probes) {
      result.diagnostic = "SLA violated even at the minimal probe rate";
      return result;
    }
    best = probe(lo);
  }
  double hi = lo * config.ramp_factor;
  while (true) {
    if (int(result.trace.size()) >= config.max_probes) {
      result.diagnostic = "probe budget exhausted while ramping";
      hi = lo;
      break;
    }
    ProbeOutcome o = probe(hi);
    if (!o.pass) break;
    lo = hi;
    best = o;
    hi *= config.ramp_factor;
  }
  while (hi / lo - 1.0 > config.relative_step &&
         int(result.trace.size()) < config.max_probes) {
    const double mid = std::sqrt(lo * hi);
    ProbeOutcome o = probe(mid);
    if (o.pass) {
      lo = mid;
      best = o;
    } else {
      hi = mid;
    }
  }
  result.max_scale = lo;
  for (const auto& [id, w] : weights) result.max_rates[id] = lo * w;
  result.bandwidth_gbps = best.bandwidth;
  return result;
}

MaxLoadResult measure_max_load(const Zoo& zoo, const NodeConfig& node,
                               const std::string& model, int workers, int ways,
                               std::uint64_t seed, const ProbeConfig& config) {
  AllocationState alloc;
  alloc.models[model] = {workers, ways};
  return measure_max_load(zoo, node, alloc, {{model, 1.0}}, seed, config);
}

}  // namespace tenantsim
