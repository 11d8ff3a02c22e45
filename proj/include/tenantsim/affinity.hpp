#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tenantsim/parallel.hpp"
#include "tenantsim/perfmodel.hpp"
#include "tenantsim/profiler.hpp"

namespace tenantsim {

struct LlcAffinity {
  double value = 0.0;
  int ways_a = 0;
  int ways_b = 0;
};

/// Best way split of an LLC with `cacheway_max` ways between two models:
/// maximizes the mean of each model's QPS at its share normalized to its QPS
/// at `cacheway_max` ways. Ties go to the more balanced split, then to the
/// split giving `a` more ways.
LlcAffinity coaff_llc(const std::map<int, double>& qps_a_by_ways,
                      const std::map<int, double>& qps_b_by_ways,
                      int cacheway_max);

/// min(system / (a + b), 1); no demand at all counts as no contention.
double coaff_dram(double membw_a, double membw_b, double membw_system);

double coaff_system(double coaff_llc, double coaff_dram);

struct PairAffinity {
  std::string a;  // a <= b
  std::string b;
  double llc = 0.0;
  double dram = 0.0;
  double value = 0.0;
  int ways_a = 0;
  int ways_b = 0;
  int workers_a = 0;
  int workers_b = 0;
  double membw_a = 0.0;
  double membw_b = 0.0;
  double qps_a = 0.0;
  double qps_b = 0.0;
};

class CoAffinityMatrix {
 public:
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, PairAffinity> entries;

  /// Entry oriented so that `.a == first`; splits and QPS are mirrored.
  PairAffinity get(const std::string& first, const std::string& second) const;
  double value(const std::string& a, const std::string& b) const;
  std::pair<int, int> best_split(const std::string& a, const std::string& b) const;
  std::pair<double, double> est_pair_qps(const std::string& a,
                                         const std::string& b) const;
};

/// Worker count at which a model's bandwidth demand enters the DRAM term:
/// half the cores, clamped to what the profile covers.
int half_core_workers(const ProfileSet& p, const NodeConfig& node);

PairAffinity pair_affinity(const ProfileSet& a, const ProfileSet& b,
                           const Zoo& zoo, const NodeConfig& node);

/// All unordered pairs plus self-pairs.
CoAffinityMatrix build_affinity_matrix(const Profiles& profiles, const Zoo& zoo,
                                       const NodeConfig& node,
                                       Exec exec = Exec::parallel);

}  // namespace tenantsim
