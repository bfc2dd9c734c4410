#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modforge/module_db.hpp"
#include "modforge/se3.hpp"
#include "modforge/topo_recon.hpp"

namespace modforge {

enum class BodyRole { Base, Whole, Proximal, Distal, TcpMarker, Addon };
enum class EdgeKind { Fixed, Revolute, Prismatic };
enum class ChainClass { Arm, Leg, Unclassified };

std::string_view to_string(BodyRole v);
std::string_view to_string(EdgeKind v);
std::string_view to_string(ChainClass v);

struct BodyNode {
  std::string name;
  BodyInertia inertia;
  std::optional<MeshRef> mesh;
  std::string instance_id;  // owning module instance; empty for base_link
  BodyRole role = BodyRole::Whole;
  std::string chain;                      // chain tag, empty for base_link
  std::optional<std::size_t> parent_edge;  // index into PhysicalGraph::edges
};

struct JointLimits {
  double effort = 0.0;
  double velocity = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct JointEdge {
  std::string name;
  EdgeKind kind = EdgeKind::Fixed;
  Origin origin;  // parent body frame -> child body frame at q = 0
  std::optional<TwistAxis> axis;
  std::optional<JointLimits> limits;
  std::size_t parent = 0;
  std::size_t child = 0;

  bool moving() const { return kind != EdgeKind::Fixed; }
};

struct Chain {
  std::string tag;
  std::size_t base = 0;              // body the chain hangs from
  std::vector<std::size_t> bodies;   // downstream of `base`, in path order
  ChainClass semantics = ChainClass::Unclassified;
  SemanticTag end_effector = SemanticTag::None;
  std::optional<std::size_t> tcp;    // TCP marker body, arm chains only
};

struct ModuleInstance {
  std::string instance_id;  // "m<module_idx>"
  std::string module_identifier;
  std::vector<int> slave_positions;  // one per ESC; empty for add-ons
  std::vector<std::size_t> bodies;
};

/// Bodies and joints of the assembled robot, the single source of truth for
/// URDF and SRDF emission.
struct PhysicalGraph {
  std::size_t root = 0;
  std::vector<BodyNode> nodes;
  std::vector<JointEdge> edges;
  std::vector<Chain> chains;
  std::vector<ModuleInstance> modules;
  std::map<std::string, double> homing;
  std::string catalog_version;

  std::size_t add_body(BodyNode body);
  std::size_t add_edge(JointEdge edge);

  std::optional<std::size_t> find_body(std::string_view name) const;
  std::optional<std::size_t> find_edge(std::string_view name) const;
  const Chain* find_chain(std::string_view tag) const;
  /// Edges from the root to `body`, root side first.
  std::vector<std::size_t> path_to(std::size_t body) const;
  std::vector<std::size_t> moving_edges() const;
  double total_mass() const;
};

struct Addon {
  std::string name;
  std::string target;                    // body the add-on is fixed to
  std::optional<std::string> connector;  // output connector of the target's module
  std::optional<std::string> module_id;  // catalog module, or a literal body below
  BodyInertia inertia;
  Origin origin;
  std::optional<MeshRef> mesh;
};

struct Customization {
  std::map<std::string, double> homing;  // moving joint name -> displacement
  std::vector<Addon> addons;

  bool empty() const { return homing.empty() && addons.empty(); }
};

nlohmann::json customization_to_json(const Customization& c);
Customization customization_from_json(const nlohmann::json& j);

/// Input-frame to output-frame transform of `parent` for one of its output
/// connectors. Mating EMI frames coincide, so this is also the transform
/// between the input frames of parent and child. Actuated parents use `q`
/// (zero when omitted).
Isometry3d parent_child_transform(const ModuleDescription& parent, std::string_view connector,
                                  std::span<const double> q = {});

/// Modular kinematics of one module: joints compose their proximal offset,
/// the joint motion and the distal offset; links and hubs return their stored
/// input-to-output offset; end-effectors the input-to-TCP (or wheel) offset.
Isometry3d module_transform(const ModuleDescription& desc, std::span<const double> q = {},
                            std::optional<std::string_view> connector = std::nullopt);

/// Expands every network node into its bodies and joints. Multi-ESC modules
/// collapse into one body; chains are tagged A, B, ... and only hubs open new
/// chains.
PhysicalGraph expand(const TopologyGraph& chi, const ModuleDatabase& db);

/// Assigns deterministic names: moving joints `J<joint><tag>`, distal bodies
/// `L_<joint><tag>`, passive bodies `L_<joint>_<link><tag>`, TCP markers
/// `TCP_<tag>` and fixed joints `fixed_<parent>_<child>`.
PhysicalGraph name_model(PhysicalGraph phi);

PhysicalGraph apply_customization(PhysicalGraph phi, const Customization& cust, const ModuleDatabase& db);

/// Throws Error{Model} unless `phi` is a tree rooted at `phi.root`.
void check_tree(const PhysicalGraph& phi);

std::string emit_urdf(const PhysicalGraph& phi, std::string_view robot_name = "modular_robot");
std::string emit_srdf(const PhysicalGraph& phi, std::string_view robot_name = "modular_robot");

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace modforge
