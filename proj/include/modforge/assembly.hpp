#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modforge/module_db.hpp"

namespace modforge {

/// One module instance bolted onto an output connector of an already-placed
/// parent. The root placement has no parent and hangs off the master.
struct Placement {
  std::string instance_id;
  std::string module_id;
  std::optional<std::string> parent_instance;
  std::string parent_connector;
  /// Upside-down mounting; only meaningful in violation scenarios.
  bool flipped = false;

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct AssemblySpec {
  std::vector<Placement> placements;
  std::string root;

  const Placement* find(std::string_view instance) const;

  friend bool operator==(const AssemblySpec&, const AssemblySpec&) = default;
};

/// Throws Error{Assembly} (or Error{NotFound} for unknown module ids) when the
/// placements do not form a tree over free output connectors.
void validate_assembly(const AssemblySpec& assembly, const ModuleDatabase& db);

AssemblySpec assembly_from_json(const nlohmann::json& j);
nlohmann::json assembly_to_json(const AssemblySpec& assembly);

/// Accepts JSON or YAML (by extension, falling back to content sniffing).
AssemblySpec load_assembly(const std::filesystem::path& path);

}  // namespace modforge
