#include "tenantsim/io.hpp"

namespace tenantsim {

namespace {

ModelSpec spec(const char* id, double footprint_gb, double compute_us,
               double bytes_kb, double gbps, double sensitivity, int working_set,
               double sla_ms) {
  ModelSpec m;
  m.id = id;
  m.memory_footprint_gb = footprint_gb;
  m.compute_us_per_item = compute_us;
  m.bytes_kb_per_item = bytes_kb;
  m.bandwidth_gbps_per_worker = gbps;
  m.cache_sensitivity = sensitivity;
  m.cache_working_set_ways = working_set;
  m.sla_ms = sla_ms;
  return m;
}

}  // namespace

// Signatures come out of `tenantsim calibrate`; keep data/default_zoo.json in
// sync (a unit test compares the two).
Zoo default_zoo() {
  Zoo zoo;
  zoo.version = "default-1";
  zoo.batch.mu = 4.8114767054570056;
  zoo.batch.sigma = kDefaultBatchSigma;
  zoo.models = {
      spec("DLRM-A", 2.0, 16.4, 229.0, 6.0, 0.10, 3, 100),
      spec("DLRM-B", 25.0, 65.5, 763.0, 5.0, 0.10, 3, 400),
      spec("DLRM-C", 2.5, 43.6, 21.8, 2.0, 0.40, 6, 100),
      spec("DLRM-D", 8.0, 4.4, 527.0, 10.5, 0.08, 3, 100),
      spec("NCF", 0.1, 2.45, 0.27, 1.0, 0.90, 8, 5),
      spec("DIEN", 3.9, 16.2, 4.3, 1.5, 0.25, 5, 35),
      spec("DIN", 2.7, 40.9, 34.0, 2.5, 0.50, 7, 100),
      spec("WND", 3.5, 9.5, 16.4, 4.0, 0.35, 5, 25),
  };
  return zoo;
}

NodeConfig default_node() { return NodeConfig{}; }

}  // namespace tenantsim
