#pragma once

#include <string>

#include "tenantsim/perfmodel.hpp"
#include "tenantsim/workload.hpp"

namespace testing {

inline tenantsim::ModelSpec toy_model(const std::string& id, double compute_us,
                                      double sla_ms, double footprint_gb = 1.0) {
  tenantsim::ModelSpec m;
  m.id = id;
  m.memory_footprint_gb = footprint_gb;
  m.compute_us_per_item = compute_us;
  m.sla_ms = sla_ms;
  m.cache_working_set_ways = 1;
  return m;
}

// Two compute-bound models and one bandwidth-heavy, cache-sensitive model.
inline tenantsim::Zoo toy_zoo() {
  tenantsim::Zoo zoo;
  zoo.version = "toy";
  zoo.batch.mu = tenantsim::calibrate_batch_mu(tenantsim::kTargetMeanBatch,
                                               tenantsim::kDefaultBatchSigma);
  zoo.models.push_back(toy_model("alpha", 40.0, 50.0));
  zoo.models.push_back(toy_model("beta", 60.0, 80.0, 2.0));
  auto gamma = toy_model("gamma", 20.0, 60.0, 4.0);
  gamma.bytes_kb_per_item = 150.0;
  gamma.bandwidth_gbps_per_worker = 12.0;
  gamma.cache_sensitivity = 0.5;
  gamma.cache_working_set_ways = 6;
  zoo.models.push_back(gamma);
  return zoo;
}

}  // namespace testing
