#include "tenantsim/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tenantsim/error.hpp"
#include "tenantsim/seed.hpp"

namespace tenantsim {

const char* to_string(Scalability s) {
  return s == Scalability::High ? "High" : "Low";
}

QpsTable::QpsTable(int max_workers, int max_ways)
    : max_workers_(max_workers),
      max_ways_(max_ways),
      cells_(std::size_t(std::max(0, max_workers)) * std::max(0, max_ways),
             std::numeric_limits<double>::quiet_NaN()) {}

std::size_t QpsTable::index(int workers, int ways) const {
  return std::size_t(workers - 1) * max_ways_ + std::size_t(ways - 1);
}

bool QpsTable::has(int workers, int ways) const {
  if (workers < 1 || workers > max_workers_ || ways < 1 || ways > max_ways_)
    return false;
  return !std::isnan(cells_[index(workers, ways)]);
}

double QpsTable::at(int workers, int ways) const {
  if (!has(workers, ways))
    throw Error(Errc::incomplete_profile,
                "no QPS entry for " + std::to_string(workers) + " workers, " +
                    std::to_string(ways) + " ways");
  return cells_[index(workers, ways)];
}

void QpsTable::set(int workers, int ways, double qps) {
  if (workers < 1 || workers > max_workers_ || ways < 1 || ways > max_ways_)
    throw Error(Errc::invalid_argument, "QPS table cell out of range");
  cells_[index(workers, ways)] = qps;
}

void QpsTable::erase(int workers, int ways) {
  set(workers, ways, std::numeric_limits<double>::quiet_NaN());
}

int QpsTable::last_row() const {
  int last = 0;
  for (int w = 1; w <= max_workers_; ++w) {
    bool full = true;
    for (int x = 1; x <= max_ways_ && full; ++x) full = has(w, x);
    if (!full) break;
    last = w;
  }
  return last;
}

double QpsTable::max_value() const {
  double best = 0.0;
  for (double v : cells_)
    if (!std::isnan(v)) best = std::max(best, v);
  return best;
}

std::size_t QpsTable::present_cells() const {
  return std::size_t(std::count_if(cells_.begin(), cells_.end(),
                                   [](double v) { return !std::isnan(v); }));
}

std::map<int, double> ProfileSet::normalized_ways() const {
  std::map<int, double> out;
  if (qps_by_ways.empty()) return out;
  const double full = qps_by_ways.rbegin()->second;
  for (const auto& [x, q] : qps_by_ways) out[x] = full > 0 ? q / full : 0.0;
  return out;
}

std::vector<double> isotonic_non_decreasing(const std::vector<double>& y) {
  struct Block {
    double sum;
    std::size_t n;
    double mean() const { return sum / double(n); }
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 &&
           blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().n += top.n;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.n, b.mean());
  return out;
}

namespace {

std::map<int, double> smooth(const std::map<int, double>& raw) {
  std::vector<double> y;
  for (const auto& [k, v] : raw) y.push_back(v);
  const auto fit = isotonic_non_decreasing(y);
  std::map<int, double> out;
  std::size_t i = 0;
  for (const auto& [k, v] : raw) out[k] = fit[i++];
  return out;
}

// Every probe of one model replays the same arrival stream.
std::uint64_t model_seed(std::uint64_t seed, const std::string& model) {
  return derive_seed(seed, model);
}

}  // namespace

WorkerCurve profile_worker_scalability(const Zoo& zoo, const NodeConfig& node,
                                       const std::string& model,
                                       std::uint64_t seed,
                                       const ProfileConfig& config) {
  const ModelSpec& spec = zoo.at(model);
  const int knee = capacity_knee(spec, node);
  std::vector<MaxLoadResult> runs(std::size_t(std::max(0, knee)));
  for_each_index(config.exec, runs.size(), [&](std::size_t i) {
    runs[i] = measure_max_load(zoo, node, model, int(i) + 1, node.llc_ways,
                               model_seed(seed, model), config.probe);
  });
  WorkerCurve out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.raw[int(i) + 1] = runs[i].max_scale;
    out.membw[int(i) + 1] = runs[i].bandwidth_gbps;
    out.probes += runs[i].trace.size();
  }
  out.qps = smooth(out.raw);
  return out;
}

WayCurve profile_llc_sensitivity(const Zoo& zoo, const NodeConfig& node,
                                 const std::string& model, int workers,
                                 std::uint64_t seed,
                                 const ProfileConfig& config) {
  const ModelSpec& spec = zoo.at(model);
  if (workers < 1 || workers > node.cores || workers > capacity_knee(spec, node))
    throw Error(Errc::invalid_argument,
                "reference worker count infeasible for '" + model + "'");
  std::vector<MaxLoadResult> runs(std::size_t(node.llc_ways));
  for_each_index(config.exec, runs.size(), [&](std::size_t i) {
    runs[i] = measure_max_load(zoo, node, model, workers, int(i) + 1,
                               model_seed(seed, model), config.probe);
  });
  WayCurve out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.raw[int(i) + 1] = runs[i].max_scale;
    out.probes += runs[i].trace.size();
  }
  out.qps = smooth(out.raw);
  return out;
}

TableBuild build_qps_table(const Zoo& zoo, const NodeConfig& node,
                           const std::string& model, std::uint64_t seed,
                           const ProfileConfig& config) {
  const ModelSpec& spec = zoo.at(model);
  const int knee = capacity_knee(spec, node);
  const int ways = node.llc_ways;
  TableBuild out{QpsTable(node.cores, ways), QpsTable(node.cores, ways), 0};
  const std::size_t cells = std::size_t(std::max(0, knee)) * std::size_t(ways);
  std::vector<MaxLoadResult> runs(cells);
  for_each_index(config.exec, cells, [&](std::size_t i) {
    const int w = int(i) / ways + 1;
    const int x = int(i) % ways + 1;
    runs[i] = measure_max_load(zoo, node, model, w, x, model_seed(seed, model),
                               config.probe);
  });
  for (std::size_t i = 0; i < cells; ++i) {
    out.raw.set(int(i) / ways + 1, int(i) % ways + 1, runs[i].max_scale);
    out.probes += runs[i].trace.size();
  }
  if (knee < 1) return out;

  std::vector<std::vector<double>> grid(
      std::size_t(knee), std::vector<double>(std::size_t(ways), 0.0));
  for (int w = 1; w <= knee; ++w)
    for (int x = 1; x <= ways; ++x) grid[w - 1][x - 1] = out.raw.at(w, x);
  for (auto& row : grid) row = isotonic_non_decreasing(row);
  for (int x = 0; x < ways; ++x) {
    std::vector<double> col;
    for (int w = 0; w < knee; ++w) col.push_back(grid[w][x]);
    col = isotonic_non_decreasing(col);
    for (int w = 0; w < knee; ++w) grid[w][x] = col[w];
  }
  // PAVA on one axis can undo the other; a running max restores both.
  for (auto& row : grid)
    for (int x = 1; x < ways; ++x) row[x] = std::max(row[x], row[x - 1]);
  for (int w = 1; w < knee; ++w)
    for (int x = 0; x < ways; ++x)
      grid[w][x] = std::max(grid[w][x], grid[w - 1][x]);
  for (int w = 1; w <= knee; ++w)
    for (int x = 1; x <= ways; ++x) out.smoothed.set(w, x, grid[w - 1][x - 1]);
  return out;
}

double top_quartile_gain(const std::map<int, double>& qps_by_workers, int cores) {
  const int top = cores;
  const int base = std::max(1, 3 * cores / 4);
  auto hi = qps_by_workers.find(top);
  auto lo = qps_by_workers.find(base);
  if (hi == qps_by_workers.end() || lo == qps_by_workers.end())
    throw Error(Errc::insufficient_profile, "curve lacks top-quartile points");
  if (!(lo->second > 0)) return std::numeric_limits<double>::infinity();
  return (hi->second - lo->second) / lo->second;
}

Scalability classify_scalability(const std::map<int, double>& qps_by_workers,
                                 int cores, double threshold) {
  if (qps_by_workers.size() < 2)
    throw Error(Errc::insufficient_profile,
                "scalability needs at least two curve points");
  if (qps_by_workers.rbegin()->first < cores) return Scalability::Low;
  return top_quartile_gain(qps_by_workers, cores) < threshold ? Scalability::Low
                                                              : Scalability::High;
}

ProfilingCost profiling_cost(const NodeConfig& node) {
  return {node.cores, node.cores * node.llc_ways};
}

ProfileSet profile_model(const Zoo& zoo, const NodeConfig& node,
                         const std::string& model, std::uint64_t seed,
                         const ProfileConfig& config) {
  ProfileSet p;
  p.model = model;
  p.zoo_version = zoo.version;
  p.seed = seed;
  p.capacity_knee = capacity_knee(zoo.at(model), node);
  if (p.capacity_knee < 1)
    throw Error(Errc::capacity, "model '" + model + "' cannot host one worker");

  auto workers = profile_worker_scalability(zoo, node, model, seed, config);
  p.qps_by_workers = workers.qps;
  p.membw_by_workers = workers.membw;
  p.probes_run += workers.probes;

  p.reference_workers = std::clamp(node.cores / 2, 1, p.capacity_knee);
  auto ways = profile_llc_sensitivity(zoo, node, model, p.reference_workers,
                                      seed, config);
  p.qps_by_ways = ways.qps;
  p.probes_run += ways.probes;

  auto table = build_qps_table(zoo, node, model, seed, config);
  p.qps_table = std::move(table.smoothed);
  p.probes_run += table.probes;

  p.isolated_max_load = p.qps_table.max_value();
  p.scalability = p.qps_by_workers.size() < 2
                      ? Scalability::Low
                      : classify_scalability(p.qps_by_workers, node.cores,
                                             config.slope_threshold);
  return p;
}

Profiles profile_zoo(const Zoo& zoo, const NodeConfig& node, std::uint64_t seed,
                     const ProfileConfig& config) {
  Profiles out;
  for (const auto& m : zoo.models)
    out[m.id] = profile_model(zoo, node, m.id, seed, config);
  return out;
}

}  // namespace tenantsim
