#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "modforge/se3.hpp"

namespace modforge {

enum class ModuleType { Joint, Link, Hub, EndEffector };
enum class ActuatorType { LargeA, LargeB, Medium, SmallA, SmallB };
enum class SemanticTag { None, Gripper, Wheel, Drill, Sander, Sprayer };
enum class ConnectorKind { Input, Output };
enum class ConnectorSize { Small, Medium, Large };

std::string_view to_string(ModuleType v);
std::string_view to_string(ActuatorType v);
std::string_view to_string(SemanticTag v);
std::string_view to_string(ConnectorKind v);
std::string_view to_string(ConnectorSize v);
std::string_view to_string(JointKind v);

/// Mass properties of one rigid body. The CoM is expressed in the body frame
/// and the inertia is taken about the CoM with axes parallel to that frame.
struct BodyInertia {
  double mass = 0.0;
  Vector3d com = Vector3d::Zero();
  Matrix3d inertia = Matrix3d::Zero();

  friend bool operator==(const BodyInertia& a, const BodyInertia& b) {
    return a.mass == b.mass && a.com == b.com && a.inertia == b.inertia;
  }
};

struct ConnectorSpec {
  std::string name;
  ConnectorKind kind = ConnectorKind::Output;
  int esc_index = 0;
  int esc_port = 0;
  ConnectorSize size = ConnectorSize::Large;

  friend bool operator==(const ConnectorSpec&, const ConnectorSpec&) = default;
};

struct ActuatorSpec {
  ActuatorType actuator_type = ActuatorType::LargeA;
  double gear_ratio = 1.0;
  double max_velocity = 0.0;       // rad/s
  double peak_torque = 0.0;        // N m
  double continuous_torque = 0.0;  // N m
  double lower = 0.0;              // rad (or m for prismatic joints)
  double upper = 0.0;
  double actuator_mass = 0.0;  // kg, motor unit only

  friend bool operator==(const ActuatorSpec&, const ActuatorSpec&) = default;
};

struct JointSpec {
  TwistAxis axis;
  ActuatorSpec actuator;

  friend bool operator==(const JointSpec&, const JointSpec&) = default;
};

struct EscPort {
  int esc = 0;
  int port = 0;
  friend bool operator==(const EscPort&, const EscPort&) = default;
  friend auto operator<=>(const EscPort&, const EscPort&) = default;
};

/// Wiring between two ESCs embedded in the same module.
struct InternalLink {
  EscPort from;
  EscPort to;  // always port 0 of the downstream ESC
  friend bool operator==(const InternalLink&, const InternalLink&) = default;
};

struct MeshRef {
  std::string path;
  Origin origin;
  friend bool operator==(const MeshRef&, const MeshRef&) = default;
};

struct ModuleDescription {
  std::string module_identifier;
  std::string name;  // catalog display name, e.g. "ElbowA"
  ModuleType module_type = ModuleType::Link;
  std::vector<ConnectorSpec> connectors;
  int esc_count = 1;
  std::vector<InternalLink> internal_links;
  std::map<std::string, Origin> frames;
  std::vector<JointSpec> joints;       // 0 for passive, 1 for Joint, 1..2 for actuated EE
  std::vector<BodyInertia> inertia;    // joints.size() + 1 bodies, proximal first
  SemanticTag semantic_tag = SemanticTag::None;
  std::optional<MeshRef> mesh;
  std::map<std::string, std::string> provenance;  // field path -> "published" | "nominal"

  bool actuated() const { return !joints.empty(); }
  const ConnectorSpec* connector(std::string_view name) const;
  const ConnectorSpec* input_connector() const;
  std::vector<const ConnectorSpec*> output_connectors() const;

  friend bool operator==(const ModuleDescription&, const ModuleDescription&) = default;
};

/// Where the moving joints, output connectors and terminal frame of a module
/// live, derived from its type. Every frame named here must be present in
/// `ModuleDescription::frames`.
struct ModuleLayout {
  struct Stage {
    std::string frame;  // previous body frame -> joint frame
    std::size_t joint;  // index into ModuleDescription::joints
  };
  std::vector<Stage> stages;
  std::map<std::string, std::string> outputs;  // connector name -> frame name
  std::optional<std::string> terminal;         // TCP / wheel marker frame
};

ModuleLayout layout_of(const ModuleDescription& desc);

enum class Severity { Warning, Error };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string module;
  std::string field;
  std::string message;
};

std::vector<Diagnostic> validate_module(const ModuleDescription& desc);

bool has_errors(std::span<const Diagnostic> diagnostics);

class ModuleDatabase {
 public:
  ModuleDatabase() = default;
  explicit ModuleDatabase(std::string version) : version_(std::move(version)) {}

  const std::string& version() const { return version_; }
  const std::map<std::string, ModuleDescription, std::less<>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  const ModuleDescription* find(std::string_view id) const;
  /// Throws Error{NotFound}.
  const ModuleDescription& at(std::string_view id) const;

  /// Throws Error{Conflict} on a duplicate identifier.
  void insert(ModuleDescription desc);

  friend bool operator==(const ModuleDatabase&, const ModuleDatabase&) = default;

 private:
  std::string version_ = "unversioned";
  std::map<std::string, ModuleDescription, std::less<>> entries_;
};

inline const ModuleDescription* lookup(const ModuleDatabase& db, std::string_view id) {
  return db.find(id);
}

struct LoadReport {
  ModuleDatabase database;
  std::vector<Diagnostic> diagnostics;
};

/// Loads every `*.json` file of a directory (or a single file). A file holds
/// either one module object or an aggregate `{"version", "modules": [...]}`.
/// Parse failures and duplicate identifiers throw; invariant violations are
/// collected.
LoadReport load_database_report(const std::filesystem::path& path);

/// As above but throws Error{Validation} on the first error diagnostic.
ModuleDatabase load_database(const std::filesystem::path& path);

ModuleDescription module_from_json(const nlohmann::json& j);
nlohmann::json module_to_json(const ModuleDescription& desc);
nlohmann::json database_to_json(const ModuleDatabase& db);

nlohmann::json origin_to_json(const Origin& o);
Origin origin_from_json(const nlohmann::json& j);
nlohmann::json inertia_to_json(const BodyInertia& b);
BodyInertia inertia_from_json(const nlohmann::json& j);

/// The catalog shipped with the project.
std::filesystem::path default_catalog_path();

}  // namespace modforge
