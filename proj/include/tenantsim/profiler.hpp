#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tenantsim/parallel.hpp"
#include "tenantsim/perfmodel.hpp"
#include "tenantsim/simcore.hpp"

namespace tenantsim {

enum class Scalability { High, Low };

const char* to_string(Scalability s);

/// QPS over the (workers, ways) grid, 1-based on both axes. Cells whose
/// worker count breaks the memory capacity are absent.
class QpsTable {
 public:
  QpsTable() = default;
  QpsTable(int max_workers, int max_ways);

  int max_workers() const { return max_workers_; }
  int max_ways() const { return max_ways_; }
  bool has(int workers, int ways) const;
  /// Throws incomplete-profile for an absent or out-of-range cell.
  double at(int workers, int ways) const;
  void set(int workers, int ways, double qps);
  void erase(int workers, int ways);
  /// Highest worker count with a complete row.
  int last_row() const;
  double max_value() const;
  std::size_t present_cells() const;

 private:
  std::size_t index(int workers, int ways) const;

  int max_workers_ = 0;
  int max_ways_ = 0;
  std::vector<double> cells_;  // NaN marks an absent cell
};

struct ProfileSet {
  std::string model;
  std::string zoo_version;
  std::uint64_t seed = 0;
  int capacity_knee = 0;
  int reference_workers = 0;
  std::map<int, double> qps_by_workers;  // full ways, isotonic
  std::map<int, double> qps_by_ways;     // at reference_workers, isotonic
  std::map<int, double> membw_by_workers;
  QpsTable qps_table;
  double isolated_max_load = 0.0;
  Scalability scalability = Scalability::High;
  std::size_t probes_run = 0;  // max-load search probes, all passes

  /// qps_by_ways / qps_by_ways[max ways].
  std::map<int, double> normalized_ways() const;
};

struct ProfileConfig {
  ProbeConfig probe;
  double slope_threshold = 0.10;
  Exec exec = Exec::parallel;
};

/// Pool-adjacent-violators fit: the non-decreasing sequence closest to `y`
/// in least squares (equal weights).
std::vector<double> isotonic_non_decreasing(const std::vector<double>& y);

struct WorkerCurve {
  std::map<int, double> qps;  // isotonic
  std::map<int, double> raw;
  std::map<int, double> membw;
  std::size_t probes = 0;
};

/// Max load at w = 1..cores workers with every LLC way; OOM points skipped.
WorkerCurve profile_worker_scalability(const Zoo& zoo, const NodeConfig& node,
                                       const std::string& model,
                                       std::uint64_t seed,
                                       const ProfileConfig& config = {});

struct WayCurve {
  std::map<int, double> qps;  // isotonic
  std::map<int, double> raw;
  std::size_t probes = 0;
};

/// Max load at ways = 1..llc_ways with a fixed worker count.
WayCurve profile_llc_sensitivity(const Zoo& zoo, const NodeConfig& node,
                                 const std::string& model, int workers,
                                 std::uint64_t seed,
                                 const ProfileConfig& config = {});

struct TableBuild {
  QpsTable smoothed;
  QpsTable raw;
  std::size_t probes = 0;
};

/// Full grid, then isotonic smoothing along ways (rows) and workers
/// (columns) followed by a running max on both axes.
TableBuild build_qps_table(const Zoo& zoo, const NodeConfig& node,
                           const std::string& model, std::uint64_t seed,
                           const ProfileConfig& config = {});

/// Low when the curve stops before `cores` (memory capacity) or when the
/// gain over the top quartile of worker counts is below `threshold`.
Scalability classify_scalability(const std::map<int, double>& qps_by_workers,
                                 int cores, double threshold = 0.10);

/// Gain (q[cores] - q[3 cores / 4]) / q[3 cores / 4] used by the classifier.
double top_quartile_gain(const std::map<int, double>& qps_by_workers, int cores);

struct ProfilingCost {
  int worker_points = 0;  // T_worker: one point per core count
  int llc_points = 0;     // T_LLC: one point per (cores, ways) cell
};

ProfilingCost profiling_cost(const NodeConfig& node);

ProfileSet profile_model(const Zoo& zoo, const NodeConfig& node,
                         const std::string& model, std::uint64_t seed,
                         const ProfileConfig& config = {});

using Profiles = std::map<std::string, ProfileSet>;

Profiles profile_zoo(const Zoo& zoo, const NodeConfig& node, std::uint64_t seed,
                     const ProfileConfig& config = {});

}  // namespace tenantsim
