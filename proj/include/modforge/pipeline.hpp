#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modforge/assembly.hpp"
#include "modforge/ecat_sim.hpp"
#include "modforge/model_gen.hpp"
#include "modforge/topo_recon.hpp"

namespace modforge {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Contents of the four bundle files.
struct Bundle {
  std::string urdf;
  std::string srdf;
  std::string homing;
  std::string manifest;
};

struct DiscoverOptions {
  std::string robot_name = "modular_robot";
  /// Manifest timestamp. Defaults to SOURCE_DATE_EPOCH when set, else now.
  std::optional<std::string> generated_at;
};

struct DiscoveryResult {
  EcatNetwork network;
  TopologyGraph chi;
  PhysicalGraph phi;
  Bundle bundle;
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;

  double total_seconds() const;
};

/// build_network -> recognize_topology -> expand -> name -> customize -> emit.
/// ESC-less placements are attached as add-ons before the user's
/// customization is applied.
DiscoveryResult discover(const AssemblySpec& assembly, const ModuleDatabase& db, const Customization& cust = {},
                         const DiscoverOptions& options = {});

/// Hex SHA-256 of the canonical assembly JSON.
std::string assembly_hash(const AssemblySpec& assembly);

/// ISO 8601 UTC timestamp as used in the manifest.
std::string generation_timestamp();

/// Writes the bundle files into `out_dir` through a staging directory, so a
/// failure leaves no partial output behind.
void write_bundle(const Bundle& bundle, const std::filesystem::path& out_dir);

Bundle read_bundle(const std::filesystem::path& dir);

/// Per-chain summary used by the CLI and the service.
nlohmann::json chain_summary(const PhysicalGraph& phi);

nlohmann::json timings_to_json(const std::vector<StageTiming>& timings);

/// Loads an assembly, customization or catalog file; throws Error{Io} or
/// Error{Parse}.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Catalog path from MODFORGE_DB, falling back to the shipped catalog.
std::filesystem::path default_db_path();

}  // namespace modforge
