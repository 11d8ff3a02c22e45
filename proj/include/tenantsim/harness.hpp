#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tenantsim/affinity.hpp"
#include "tenantsim/io.hpp"
#include "tenantsim/profiler.hpp"
#include "tenantsim/rmu.hpp"
#include "tenantsim/scheduler.hpp"

namespace tenantsim {

inline const std::vector<std::string> kScenarios = {
    "emu_constant",  "fluctuating",           "cluster_even",
    "cluster_skewed", "ablation_cat",         "sensitivity_sysconfig",
    "affinity_validation"};

struct EmuConfig {
  int settle_ticks = 4;
  int eval_ticks = 2;
  double fx_step = 0.1;
  double fy_resolution = 0.02;
};

struct FluctuatingConfig {
  std::string low_model = "DLRM-D";
  std::string high_model = "NCF";
  double t1 = 120.0;
  double t2 = 240.0;
  double duration = 360.0;
  int ramp_steps = 12;
  // Constant-load steady-state check: both models at this fraction of their
  // isolated max load.
  double steady_fraction = 0.3;
  double steady_duration = 120.0;
};

struct ExperimentConfig {
  std::string scenario;
  Zoo zoo;
  NodeConfig node;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path out = "out";
  std::vector<std::string> policies{"deeprecsys", "random", "random+", "hera"};
  std::vector<double> target_levels{0, 250, 500, 1000, 2000, 4000, 8000};
  double mid_level = 1000;
  std::vector<double> low_shares{1.0, 0.9, 0.7, 0.5, 0.3, 0.1, 0.0};
  std::vector<NodeConfig> node_variants;
  RmuConfig rmu;
  EmuConfig emu;
  FluctuatingConfig fluctuating;
  ProfileConfig profile;
  bool simulated_pair_qps = false;

  std::uint64_t seed() const { return seeds.at(0); }
  void validate() const;
};

std::vector<NodeConfig> default_node_variants();

/// Profiles and affinity matrix every scenario starts from.
struct Context {
  Zoo zoo;
  NodeConfig node;
  std::uint64_t seed = 0;
  Profiles profiles;
  CoAffinityMatrix matrix;
  RmuConfig rmu;

  std::string profile_version() const;
};

Context make_context(const Zoo& zoo, const NodeConfig& node, std::uint64_t seed,
                     const ProfileConfig& profile = {}, const RmuConfig& rmu = {});
Context make_context(const Zoo& zoo, const NodeConfig& node, std::uint64_t seed,
                     Profiles profiles, const RmuConfig& rmu = {});

// ---- EMU -------------------------------------------------------------------

struct PairEmu {
  std::string x;  // the model whose load is swept
  std::string y;
  double fx = 0.0;
  double fy = 0.0;
  double emu = 0.0;  // percent
  int probes = 0;
};

/// Highest (fx + fy) a pair server sustains under the Hera RMU: sweep fx in
/// steps, bisect fy, each probe settling then judging the p95 of both models.
PairEmu measure_pair_emu(const Context& ctx, const std::string& a,
                         const std::string& b, bool partitioning,
                         const EmuConfig& config = {});

struct EmuStats {
  std::vector<double> values;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

EmuStats emu_stats(std::vector<double> values);

struct EmuReport {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> pairs;
  std::map<std::string, EmuStats> stats;
  std::map<std::pair<std::string, std::string>, PairEmu> pair_emu;
};

/// Pairs each policy co-locates: Random any two models, Random+ all but
/// High-High, Hera the co-located servers of its plan at the mid target.
std::map<std::string, std::vector<std::pair<std::string, std::string>>>
policy_pairs(const Context& ctx, const ExperimentConfig& cfg);

EmuReport run_emu_constant(const Context& ctx, const ExperimentConfig& cfg,
                           bool partitioning = true);

// ---- fluctuating load ------------------------------------------------------

struct PolicyRun {
  std::string policy;
  SimResult sim;
  std::map<std::string, double> violation_time_frac;
};

struct FluctuatingReport {
  std::vector<PolicyRun> runs;  // hera, parties
  double steady_duration = 0.0;
  /// First tick (1-based) from which the constant-load Hera run neither
  /// resizes nor violates; nullopt if it never settles.
  std::optional<int> steady_tick;
  SimResult steady_sim;
};

/// Fraction of windows whose p95 exceeds the model's SLA.
double violation_time_fraction(const std::vector<WindowRecord>& windows,
                               const std::string& model, double sla_ms);

std::optional<int> steady_state_tick(const SimResult& sim, const RmuConfig& rmu);

FluctuatingReport run_fluctuating(const Context& ctx, const ExperimentConfig& cfg);

// ---- cluster ---------------------------------------------------------------

struct ClusterRow {
  std::string label;  // target level or low share
  double level = 0.0;
  std::map<std::string, int> servers;  // policy -> servers required
};

ClusterPlan plan_for(const std::string& policy, const Targets& targets,
                     const Context& ctx, std::uint64_t seed,
                     const PairQps& pair_qps = {});

std::vector<ClusterRow> run_cluster_even(const Context& ctx,
                                         const ExperimentConfig& cfg);
std::vector<ClusterRow> run_cluster_skewed(const Context& ctx,
                                           const ExperimentConfig& cfg);

// ---- ablation / sensitivity ------------------------------------------------

struct AblationReport {
  double deeprecsys = 100.0;
  EmuStats hera_cat;
  EmuStats hera_no_cat;
};

AblationReport run_ablation(const Context& ctx, const ExperimentConfig& cfg);

struct VariantResult {
  NodeConfig node;
  double hera_mean_emu = 0.0;
  double deeprecsys_emu = 100.0;
  std::map<std::string, int> servers_mid;
};

std::vector<VariantResult> run_sensitivity(const ExperimentConfig& cfg);

// ---- affinity validation ---------------------------------------------------

struct PairValidation {
  std::string a;
  std::string b;
  double estimated = 0.0;
  double measured = 0.0;
};

struct AffinityValidation {
  std::vector<PairValidation> pairs;
  std::optional<double> pearson_r;
};

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

AffinityValidation run_affinity_validation(const Context& ctx,
                                           const ExperimentConfig& cfg);

// ---- reports ---------------------------------------------------------------

Json report_header(const Context& ctx, const ExperimentConfig& cfg);

/// Runs one scenario and writes its files under cfg.out / scenario.
void run_scenario(const ExperimentConfig& cfg, const Context& ctx);

}  // namespace tenantsim
