#include "tenantsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "tenantsim/error.hpp"

namespace tenantsim {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_rate: return "invalid-rate";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::unknown_model: return "unknown-model";
    case Errc::invalid_allocation: return "invalid-allocation";
    case Errc::capacity: return "out-of-memory";
    case Errc::empty_sample: return "empty-sample";
    case Errc::undefined_emu: return "undefined-emu";
    case Errc::incomplete_profile: return "incomplete-profile";
    case Errc::insufficient_profile: return "insufficient-profile";
    case Errc::unschedulable_model: return "unschedulable-model";
    case Errc::initialization: return "initialization";
    case Errc::config: return "config";
    case Errc::missing_profile: return "missing-profile";
  }
  return "unknown";
}

void ModelSpec::validate(int max_ways) const {
  auto fail = [&](const std::string& why) {
    throw Error(Errc::config, "model '" + id + "': " + why);
  };
  if (id.empty()) fail("empty id");
  if (!(memory_footprint_gb > 0)) fail("memory footprint must be > 0");
  if (!(sla_ms > 0)) fail("sla must be > 0");
  if (compute_us_per_item < 0 || bytes_kb_per_item < 0) fail("negative cost");
  if (bytes_kb_per_item > 0 && !(bandwidth_gbps_per_worker > 0))
    fail("memory traffic needs a positive bandwidth demand");
  if (cache_sensitivity < 0 || cache_sensitivity > 1)
    fail("cache sensitivity outside [0,1]");
  if (cache_working_set_ways < 1 || cache_working_set_ways > max_ways)
    fail("cache working set outside [1, llc_ways]");
}

double BatchDistribution::mean() const {
  if (fixed > 0) return fixed;
  return clipped_lognormal_mean(mu, sigma);
}

const ModelSpec& Zoo::at(const std::string& id) const {
  for (const auto& m : models)
    if (m.id == id) return m;
  throw Error(Errc::unknown_model, "unknown model '" + id + "'");
}

bool Zoo::contains(const std::string& id) const {
  return std::any_of(models.begin(), models.end(),
                     [&](const ModelSpec& m) { return m.id == id; });
}

void Zoo::validate(int max_ways) const {
  std::set<std::string> seen;
  for (const auto& m : models) {
    m.validate(max_ways);
    if (!seen.insert(m.id).second)
      throw Error(Errc::config, "duplicate model id '" + m.id + "'");
  }
  if (batch.fixed < 0 || batch.fixed > kMaxBatch)
    throw Error(Errc::config, "fixed batch outside [0, 1024]");
  if (!(batch.sigma > 0)) throw Error(Errc::config, "batch sigma must be > 0");
}

LoadSchedule LoadSchedule::constant(const std::map<std::string, double>& rates) {
  LoadSchedule s;
  s.phases.push_back({0.0, rates});
  return s;
}

void LoadSchedule::validate() const {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].start < 0)
      throw Error(Errc::invalid_argument, "phase start before t=0");
    if (i > 0 && !(phases[i].start > phases[i - 1].start))
      throw Error(Errc::invalid_argument,
                  "phase start times must be strictly increasing");
    for (const auto& [id, r] : phases[i].rates)
      if (!(r >= 0)) throw Error(Errc::invalid_rate, "negative rate for " + id);
  }
}

bool LoadSchedule::mentions(const std::string& model_id) const {
  return std::any_of(phases.begin(), phases.end(), [&](const LoadPhase& p) {
    return p.rates.count(model_id) > 0;
  });
}

double next_interarrival(Rng& rng, double rate) {
  if (!(rate > 0))
    throw Error(Errc::invalid_rate, "arrival rate must be > 0");
  std::exponential_distribution<double> exp1(1.0);
  return exp1(rng) / rate;
}

int sample_batch_size(Rng& rng, const BatchDistribution& dist) {
  if (dist.fixed > 0) return dist.fixed;
  std::lognormal_distribution<double> law(dist.mu, dist.sigma);
  double x = std::round(law(rng));
  return static_cast<int>(std::clamp(x, double(kMinBatch), double(kMaxBatch)));
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double clipped_lognormal_mean(double mu, double sigma) {
  const double lo = 1.0;
  const double hi = double(kMaxBatch);
  const double zlo = (std::log(lo) - mu) / sigma;
  const double zhi = (std::log(hi) - mu) / sigma;
  // E[X; lo < X < hi] = e^{mu + s^2/2} (Phi(zhi - s) - Phi(zlo - s))
  const double body = std::exp(mu + 0.5 * sigma * sigma) *
                      (normal_cdf(zhi - sigma) - normal_cdf(zlo - sigma));
  return lo * normal_cdf(zlo) + body + hi * (1.0 - normal_cdf(zhi));
}

double calibrate_batch_mu(double target_mean, double sigma) {
  if (!(target_mean > kMinBatch && target_mean < kMaxBatch))
    throw Error(Errc::invalid_argument, "target mean outside (1, 1024)");
  double lo = -5.0;
  double hi = std::log(double(kMaxBatch)) + 5.0 * sigma;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (clipped_lognormal_mean(mid, sigma) < target_mean)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double rate_at(const LoadSchedule& schedule, const std::string& model_id,
               double t) {
  if (!(t >= 0)) throw Error(Errc::invalid_argument, "t must be >= 0");
  if (!schedule.mentions(model_id))
    throw Error(Errc::unknown_model,
                "model '" + model_id + "' not in load schedule");
  double rate = 0.0;
  for (const auto& phase : schedule.phases) {
    if (phase.start > t) break;
    auto it = phase.rates.find(model_id);
    rate = it == phase.rates.end() ? 0.0 : it->second;
  }
  return rate;
}

ArrivalStream::ArrivalStream(const LoadSchedule& schedule,
                             const std::string& model_id,
                             BatchDistribution batch, std::uint64_t seed)
    : batch_(batch), rng_(seed) {
  for (const auto& phase : schedule.phases) {
    auto it = phase.rates.find(model_id);
    segments_.emplace_back(phase.start,
                           it == phase.rates.end() ? 0.0 : it->second);
  }
  if (segments_.empty()) exhausted_ = true;
}

std::optional<Arrival> ArrivalStream::next(double horizon) {
  if (!held_) {
    if (exhausted_) return std::nullopt;
    std::exponential_distribution<double> exp1(1.0);
    double budget = exp1(rng_);
    const int batch = sample_batch_size(rng_, batch_);
    if (now_ < segments_.front().first) now_ = segments_.front().first;
    while (true) {
      const double rate = segments_[segment_].second;
      const double end = segment_ + 1 < segments_.size()
                             ? segments_[segment_ + 1].first
                             : std::numeric_limits<double>::infinity();
      if (rate > 0 && budget <= rate * (end - now_)) {
        now_ += budget / rate;
        break;
      }
      if (segment_ + 1 >= segments_.size()) {
        exhausted_ = true;
        return std::nullopt;
      }
      if (rate > 0) budget -= rate * (end - now_);
      now_ = end;
      ++segment_;
    }
    held_ = Arrival{now_, batch};
  }
  if (held_->time >= horizon) return std::nullopt;
  Arrival out = *held_;
  held_.reset();
  return out;
}

LoadSchedule fluctuating_schedule(const std::string& low_model,
                                  double low_max_load,
                                  const std::string& high_model,
                                  double high_max_load, double t1, double t2,
                                  int ramp_steps) {
  if (!(t1 > 0 && t2 > t1) || ramp_steps < 1)
    throw Error(Errc::invalid_argument, "fluctuating schedule needs 0<t1<t2");
  LoadSchedule s;
  for (int i = 0; i < ramp_steps; ++i) {
    const double frac =
        ramp_steps == 1 ? 0.7 : 0.1 + 0.6 * double(i) / double(ramp_steps - 1);
    s.phases.push_back({t1 * double(i) / ramp_steps,
                        {{low_model, frac * low_max_load},
                         {high_model, frac * high_max_load}}});
  }
  s.phases.push_back(
      {t1, {{low_model, 0.7 * low_max_load}, {high_model, 0.2 * high_max_load}}});
  s.phases.push_back(
      {t2, {{low_model, 0.1 * low_max_load}, {high_model, 0.6 * high_max_load}}});
  return s;
}

}  // namespace tenantsim
