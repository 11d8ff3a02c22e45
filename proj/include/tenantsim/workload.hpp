#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tenantsim {

inline constexpr int kMinBatch = 1;
inline constexpr int kMaxBatch = 1024;
inline constexpr double kTargetMeanBatch = 220.0;
inline constexpr double kDefaultBatchSigma = 1.2;

using Rng = std::mt19937_64;

/// Resource signature of one recommendation model.
///
/// Service time of a batch is an additive compute + memory roofline: compute
/// is `compute_us_per_item` inflated by the LLC miss factor, memory traffic is
/// `bytes_kb_per_item` streamed at the worker's bandwidth share.
struct ModelSpec {
  std::string id;
  double memory_footprint_gb = 0.0;  // per worker
  double compute_us_per_item = 0.0;
  double bytes_kb_per_item = 0.0;
  double bandwidth_gbps_per_worker = 0.0;  // demand of one busy worker
  double cache_sensitivity = 0.0;
  int cache_working_set_ways = 1;
  double sla_ms = 0.0;

  void validate(int max_ways) const;
};

/// Query size law. `fixed > 0` pins every batch to that size (used by toy
/// queueing checks); otherwise a log-normal clipped to [1, 1024].
struct BatchDistribution {
  double mu = 4.6;
  double sigma = kDefaultBatchSigma;
  int fixed = 0;

  double mean() const;
};

struct Zoo {
  std::string version = "unversioned";
  std::vector<ModelSpec> models;
  BatchDistribution batch;

  const ModelSpec& at(const std::string& id) const;
  bool contains(const std::string& id) const;
  void validate(int max_ways) const;
};

struct Query {
  std::string model_id;
  double arrival_time = 0.0;
  int batch_size = 1;
};

struct Arrival {
  double time = 0.0;
  int batch = 1;
};

struct LoadPhase {
  double start = 0.0;
  std::map<std::string, double> rates;  // queries/s
};

struct LoadSchedule {
  std::vector<LoadPhase> phases;

  static LoadSchedule constant(const std::map<std::string, double>& rates);
  void validate() const;
  bool mentions(const std::string& model_id) const;
};

double next_interarrival(Rng& rng, double rate);
int sample_batch_size(Rng& rng, const BatchDistribution& dist);

/// Mean of round(clamp(X, 1, 1024)) for X ~ LogNormal(mu, sigma), ignoring
/// the rounding (closed form via the normal CDF).
double clipped_lognormal_mean(double mu, double sigma);

/// Bisection on mu at fixed sigma until the clipped mean equals `target`.
double calibrate_batch_mu(double target_mean, double sigma);

double rate_at(const LoadSchedule& schedule, const std::string& model_id,
               double t);

/// Poisson arrivals of one model under a piecewise-constant schedule,
/// generated by inverting the cumulative intensity. With a one-phase schedule
/// the gaps are exactly `Exp(1) / rate`, so streams at different rates from
/// the same seed are time-scaled copies of one another.
class ArrivalStream {
 public:
  ArrivalStream(const LoadSchedule& schedule, const std::string& model_id,
                BatchDistribution batch, std::uint64_t seed);

  /// Next arrival strictly before `horizon`, or nothing. Once an arrival at
  /// or beyond the horizon has been drawn it is held back, not discarded.
  std::optional<Arrival> next(double horizon);

 private:
  std::vector<std::pair<double, double>> segments_;  // (start, rate)
  BatchDistribution batch_;
  Rng rng_;
  double now_ = 0.0;
  std::size_t segment_ = 0;
  bool exhausted_ = false;
  std::optional<Arrival> held_;
};

/// Default fluctuating schedule for a (low-scalability, high-scalability)
/// pair: both ramp 10%->70% of max load until t1; the high model drops to 20%
/// until t2; then it spikes to 60% while the low model drops to 10%.
LoadSchedule fluctuating_schedule(const std::string& low_model,
                                  double low_max_load,
                                  const std::string& high_model,
                                  double high_max_load, double t1 = 120.0,
                                  double t2 = 240.0, int ramp_steps = 12);

}  // namespace tenantsim
