#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tenantsim/affinity.hpp"
#include "tenantsim/perfmodel.hpp"
#include "tenantsim/profiler.hpp"
#include "tenantsim/scheduler.hpp"
#include "tenantsim/simcore.hpp"

namespace tenantsim {

using Json = nlohmann::json;

/// Calibrated default zoo and node; data/default_*.json hold the same values.
Zoo default_zoo();
NodeConfig default_node();

Json to_json(const ModelSpec& m);
Json to_json(const Zoo& zoo);
Json to_json(const NodeConfig& node);
Json to_json(const ProfileSet& p);
Json to_json(const CoAffinityMatrix& m);
Json to_json(const ClusterPlan& plan);
Json to_json(const SimMetrics& s);

/// Parsers throw Error(config) on malformed input.
Zoo zoo_from_json(const Json& j);
NodeConfig node_from_json(const Json& j);
ProfileSet profile_from_json(const Json& j);

Zoo load_zoo(const std::filesystem::path& path);
NodeConfig load_node(const std::filesystem::path& path);

/// Fingerprint of the inputs a report depends on.
std::string config_hash(const Zoo& zoo, const NodeConfig& node,
                        std::uint64_t seed);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);
std::string read_text(const std::filesystem::path& path);

void save_profiles(const std::filesystem::path& dir, const Profiles& profiles);
/// Throws Error(missing_profile) when a zoo model has no profile file or the
/// profile was built from another zoo version.
Profiles load_profiles(const std::filesystem::path& dir, const Zoo& zoo);

std::string windows_csv(const std::vector<WindowRecord>& rows);
std::string affinity_csv(const CoAffinityMatrix& m);

/// Fixed-precision decimal rendering used in CSV cells.
std::string fmt(double v, int digits = 6);

}  // namespace tenantsim
