#pragma once

#include <map>
#include <string>
#include <vector>

#include "tenantsim/profiler.hpp"

namespace tenantsim {

/// The qualitative profile shapes the default zoo is tuned to reproduce.
struct CalibrationCheck {
  int b_last_worker = 0;       // DLRM-B profile stops here (want 8)
  double d_top_gain = 0.0;     // DLRM-D gain over the top quartile of cores
  double d_one_way = 0.0;      // DLRM-D QPS at 1 way / full ways
  double dien_two_way = 0.0;   // DIEN QPS at 2 ways / full ways
  std::map<std::string, Scalability> classes;

  bool b_truncated = false;
  bool d_flat = false;
  bool d_cache_insensitive = false;
  bool dien_cache_tolerant = false;
  bool classes_match = false;

  bool all() const {
    return b_truncated && d_flat && d_cache_insensitive && dien_cache_tolerant &&
           classes_match;
  }
};

CalibrationCheck check_calibration(const Profiles& profiles, const NodeConfig& node);

struct CalibrationRun {
  Zoo zoo;
  Profiles profiles;
  std::vector<CalibrationCheck> rounds;
  std::vector<std::string> tweaks;  // one line per signature change
};

/// Re-profiles and nudges signatures (footprint, bytes per item, cache
/// sensitivity, bandwidth) until every target holds or `max_rounds` is hit.
CalibrationRun calibrate(const Zoo& zoo, const NodeConfig& node, std::uint64_t seed,
                         const ProfileConfig& config = {}, int max_rounds = 8);

}  // namespace tenantsim
