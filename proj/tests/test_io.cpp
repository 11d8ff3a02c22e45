#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "support.hpp"
#include "tenantsim/error.hpp"
#include "tenantsim/io.hpp"

using namespace tenantsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tenantsim_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("shipped data files match the built-in defaults") {
  const fs::path data = fs::path(TENANTSIM_SOURCE_DIR) / "data";
  CHECK(to_json(load_zoo(data / "default_zoo.json")) == to_json(default_zoo()));
  CHECK(to_json(load_node(data / "default_node.json")) == to_json(default_node()));
}

TEST_CASE("zoo and node round-trip") {
  const Zoo zoo = default_zoo();
  CHECK(to_json(zoo_from_json(to_json(zoo))) == to_json(zoo));
  const NodeConfig node{24, 16, 192.0, 224.0};
  CHECK(to_json(node_from_json(to_json(node))) == to_json(node));
}

TEST_CASE("malformed configs are rejected") {
  // Zoo checks need the node's way count, so they run after parsing.
  Json j = to_json(default_zoo());
  j["models"][0]["sla_ms"] = -3;
  CHECK_THROWS_AS(zoo_from_json(j).validate(11), Error);
  Json dup = to_json(default_zoo());
  dup["models"][1]["id"] = dup["models"][0]["id"];
  CHECK_THROWS_AS(zoo_from_json(dup).validate(11), Error);
  Json missing = to_json(default_zoo());
  missing["models"][0].erase("sla_ms");
  CHECK_THROWS_AS(zoo_from_json(missing), Error);
  Json n = to_json(default_node());
  n["cores"] = "sixteen";
  CHECK_THROWS_AS(node_from_json(n), Error);
}

TEST_CASE("profiles round-trip through disk") {
  const Zoo zoo = testing::toy_zoo();
  const NodeConfig node{8, 4, 64.0, 64.0};
  ProfileConfig cfg;
  cfg.probe.expected_queries = 400;
  const Profiles p = profile_zoo(zoo, node, 3, cfg);
  const fs::path dir = scratch("profiles");
  save_profiles(dir, p);
  const Profiles q = load_profiles(dir, zoo);
  for (const auto& [id, prof] : p) CHECK(to_json(prof) == to_json(q.at(id)));
}

TEST_CASE("missing or stale profiles") {
  const Zoo zoo = testing::toy_zoo();
  const fs::path empty = scratch("empty");
  try {
    (void)load_profiles(empty, zoo);
    FAIL("expected missing_profile");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_profile);
  }

  const NodeConfig node{8, 4, 64.0, 64.0};
  ProfileConfig cfg;
  cfg.probe.expected_queries = 300;
  const fs::path dir = scratch("stale");
  save_profiles(dir, profile_zoo(zoo, node, 3, cfg));
  Zoo bumped = zoo;
  bumped.version = "toy-2";
  try {
    (void)load_profiles(dir, bumped);
    FAIL("expected missing_profile");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_profile);
  }
}

TEST_CASE("config hash tracks its inputs") {
  const Zoo zoo = default_zoo();
  const NodeConfig node;
  const auto h = config_hash(zoo, node, 1);
  CHECK(h == config_hash(zoo, node, 1));
  CHECK(h != config_hash(zoo, node, 2));
  NodeConfig other = node;
  other.llc_ways = 12;
  CHECK(h != config_hash(zoo, other, 1));
}

TEST_CASE("fixed-point rendering") {
  CHECK(fmt(1.0) == "1.000000");
  CHECK(fmt(2.5, 1) == "2.5");
}
