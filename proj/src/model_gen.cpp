#include "modforge/model_gen.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include "modforge/error.hpp"

namespace modforge {

using nlohmann::json;

std::string_view to_string(BodyRole v) {
  switch (v) {
    case BodyRole::Base: return "base";
    case BodyRole::Whole: return "whole";
    case BodyRole::Proximal: return "proximal";
    case BodyRole::Distal: return "distal";
    case BodyRole::TcpMarker: return "tcp_marker";
    case BodyRole::Addon: return "addon";
  }
  return "?";
}

std::string_view to_string(EdgeKind v) {
  switch (v) {
    case EdgeKind::Fixed: return "fixed";
    case EdgeKind::Revolute: return "revolute";
    case EdgeKind::Prismatic: return "prismatic";
  }
  return "?";
}

std::string_view to_string(ChainClass v) {
  switch (v) {
    case ChainClass::Arm: return "arm";
    case ChainClass::Leg: return "leg";
    case ChainClass::Unclassified: return "chain";
  }
  return "?";
}

std::size_t PhysicalGraph::add_body(BodyNode body) {
  nodes.push_back(std::move(body));
  return nodes.size() - 1;
}

std::size_t PhysicalGraph::add_edge(JointEdge edge) {
  const std::size_t idx = edges.size();
  nodes.at(edge.child).parent_edge = idx;
  edges.push_back(std::move(edge));
  return idx;
}

std::optional<std::size_t> PhysicalGraph::find_body(std::string_view name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> PhysicalGraph::find_edge(std::string_view name) const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].name == name) return i;
  }
  return std::nullopt;
}

const Chain* PhysicalGraph::find_chain(std::string_view tag) const {
  for (const auto& c : chains) {
    if (c.tag == tag) return &c;
  }
  return nullptr;
}

std::vector<std::size_t> PhysicalGraph::path_to(std::size_t body) const {
  std::vector<std::size_t> path;
  std::size_t guard = 0;
  while (nodes.at(body).parent_edge) {
    const std::size_t e = *nodes[body].parent_edge;
    path.push_back(e);
    body = edges[e].parent;
    if (++guard > edges.size()) throw Error(ErrorKind::Model, "model_gen", nodes[body].name, "cycle in model");
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<std::size_t> PhysicalGraph::moving_edges() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].moving()) out.push_back(i);
  }
  return out;
}

double PhysicalGraph::total_mass() const {
  double m = 0.0;
  for (const auto& n : nodes) m += n.inertia.mass;
  return m;
}

json customization_to_json(const Customization& c) {
  json j{{"homing", c.homing}, {"addons", json::array()}};
  for (const auto& a : c.addons) {
    json aj{{"name", a.name}, {"target", a.target}};
    if (a.connector) aj["connector"] = *a.connector;
    if (a.module_id) {
      aj["module_id"] = *a.module_id;
    } else {
      aj["inertia"] = inertia_to_json(a.inertia);
    }
    aj["origin"] = origin_to_json(a.origin);
    if (a.mesh) aj["mesh_ref"] = {{"path", a.mesh->path}, {"origin", origin_to_json(a.mesh->origin)}};
    j["addons"].push_back(std::move(aj));
  }
  return j;
}

Customization customization_from_json(const json& j) {
  Customization c;
  try {
    if (j.contains("homing")) {
      for (const auto& [k, v] : j.at("homing").items()) c.homing[k] = v.get<double>();
    }
    if (j.contains("addons")) {
      for (const auto& aj : j.at("addons")) {
        Addon a;
        a.target = aj.at("target").get<std::string>();
        a.name = aj.value("name", std::string{});
        if (aj.contains("connector")) a.connector = aj.at("connector").get<std::string>();
        if (aj.contains("module_id")) a.module_id = aj.at("module_id").get<std::string>();
        if (aj.contains("inertia")) a.inertia = inertia_from_json(aj.at("inertia"));
        if (aj.contains("origin")) a.origin = origin_from_json(aj.at("origin"));
        if (aj.contains("mesh_ref")) {
          MeshRef m;
          m.path = aj.at("mesh_ref").at("path").get<std::string>();
          if (aj.at("mesh_ref").contains("origin")) m.origin = origin_from_json(aj.at("mesh_ref").at("origin"));
          a.mesh = m;
        }
        if (!a.module_id && a.name.empty()) {
          throw Error(ErrorKind::Customization, "customize", a.target, "literal add-ons need a name");
        }
        c.addons.push_back(std::move(a));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "customize", "", std::string("malformed customization: ") + e.what());
  }
  return c;
}

namespace {

const Origin& frame_of(const ModuleDescription& desc, const std::string& frame) {
  auto it = desc.frames.find(frame);
  if (it == desc.frames.end()) {
    throw Error(ErrorKind::Model, "model_gen", desc.module_identifier,
                "module '" + desc.module_identifier + "' has no frame " + frame);
  }
  return it->second;
}

std::string output_frame(const ModuleDescription& desc, const ModuleLayout& layout,
                         std::optional<std::string_view> connector) {
  if (layout.outputs.empty()) {
    throw Error(ErrorKind::NotFound, "model_gen", desc.module_identifier,
                "module '" + desc.module_identifier + "' has no output connector");
  }
  if (!connector) return layout.outputs.begin()->second;
  auto it = layout.outputs.find(std::string(*connector));
  if (it == layout.outputs.end()) {
    throw Error(ErrorKind::NotFound, "model_gen", desc.module_identifier,
                "module '" + desc.module_identifier + "' has no output connector '" + std::string(*connector) + "'");
  }
  return it->second;
}

void check_range(const ModuleDescription& desc, std::size_t joint, double q) {
  const auto& a = desc.joints[joint].actuator;
  if (q < a.lower || q > a.upper) {
    throw Error(ErrorKind::Limit, "kinematics", desc.module_identifier,
                "q = " + format_double(q) + " outside [" + format_double(a.lower) + ", " + format_double(a.upper) +
                    "] for module '" + desc.module_identifier + "'");
  }
}

Isometry3d stages_transform(const ModuleDescription& desc, const ModuleLayout& layout, std::span<const double> q) {
  Isometry3d t = Isometry3d::Identity();
  for (const auto& s : layout.stages) {
    check_range(desc, s.joint, q[s.joint]);
    t = t * frame_of(desc, s.frame).isometry() * twist_exp(desc.joints[s.joint].axis, q[s.joint]);
  }
  return t;
}

JointLimits limits_of(const ActuatorSpec& a) { return {a.peak_torque, a.max_velocity, a.lower, a.upper}; }

EdgeKind edge_kind(JointKind k) { return k == JointKind::Revolute ? EdgeKind::Revolute : EdgeKind::Prismatic; }

std::string chain_tag(std::size_t index) {
  std::string tag;
  ++index;
  while (index > 0) {
    --index;
    tag.insert(tag.begin(), static_cast<char>('A' + index % 26));
    index /= 26;
  }
  return tag;
}

/// Bodies of one catalog module appended under `parent`. Returns the body
/// carrying the output frames (last moving body, or the single body).
struct ExpandedModule {
  std::vector<std::size_t> bodies;
  std::size_t output_body = 0;
  std::optional<std::size_t> tcp;
};

ExpandedModule append_module(PhysicalGraph& phi, const ModuleDescription& desc, const std::string& instance,
                             const std::string& chain, std::size_t parent, const Origin& origin, bool addon) {
  const ModuleLayout layout = layout_of(desc);
  ExpandedModule out;

  BodyNode b0;
  b0.inertia = desc.inertia.at(0);
  b0.mesh = desc.mesh;
  b0.instance_id = instance;
  b0.role = addon ? BodyRole::Addon : (desc.actuated() ? BodyRole::Proximal : BodyRole::Whole);
  b0.chain = chain;
  std::size_t prev = phi.add_body(std::move(b0));
  phi.add_edge({"", EdgeKind::Fixed, origin, std::nullopt, std::nullopt, parent, prev});
  out.bodies.push_back(prev);

  for (const auto& s : layout.stages) {
    const auto& js = desc.joints.at(s.joint);
    BodyNode b;
    b.inertia = desc.inertia.at(s.joint + 1);
    b.instance_id = instance;
    b.role = BodyRole::Distal;
    b.chain = chain;
    const std::size_t body = phi.add_body(std::move(b));
    phi.add_edge({"", edge_kind(js.axis.kind), frame_of(desc, s.frame), js.axis, limits_of(js.actuator), prev, body});
    out.bodies.push_back(body);
    prev = body;
  }
  out.output_body = prev;

  if (layout.terminal) {
    BodyNode m;
    m.instance_id = instance;
    m.role = BodyRole::TcpMarker;
    m.chain = chain;
    const std::size_t marker = phi.add_body(std::move(m));
    phi.add_edge({"", EdgeKind::Fixed, frame_of(desc, *layout.terminal), std::nullopt, std::nullopt, prev, marker});
    out.bodies.push_back(marker);
    out.tcp = marker;
  }
  return out;
}

void classify(PhysicalGraph& phi, Chain& chain, const ModuleDatabase* db) {
  chain.semantics = ChainClass::Unclassified;
  chain.end_effector = SemanticTag::None;
  chain.tcp.reset();
  if (chain.bodies.empty()) return;
  const auto& tip = phi.nodes[chain.bodies.back()];
  const ModuleInstance* inst = nullptr;
  for (const auto& m : phi.modules) {
    if (m.instance_id == tip.instance_id) inst = &m;
  }
  if (!inst || !db) return;
  const auto* desc = db->find(inst->module_identifier);
  if (!desc || desc->module_type != ModuleType::EndEffector) return;
  chain.end_effector = desc->semantic_tag;
  if (desc->semantic_tag == SemanticTag::Wheel) {
    chain.semantics = ChainClass::Leg;
  } else if (tip.role == BodyRole::TcpMarker) {
    chain.semantics = ChainClass::Arm;
    chain.tcp = chain.bodies.back();
  }
}

}  // namespace

Isometry3d module_transform(const ModuleDescription& desc, std::span<const double> q,
                            std::optional<std::string_view> connector) {
  if (q.size() != desc.joints.size()) {
    throw Error(ErrorKind::Contract, "kinematics", desc.module_identifier,
                desc.joints.empty() ? "joint value supplied for passive module '" + desc.module_identifier + "'"
                                    : "module '" + desc.module_identifier + "' expects " +
                                          std::to_string(desc.joints.size()) + " joint value(s)");
  }
  const ModuleLayout layout = layout_of(desc);
  Isometry3d t = stages_transform(desc, layout, q);
  switch (desc.module_type) {
    case ModuleType::Joint:
    case ModuleType::Link:
    case ModuleType::Hub:
      t = t * frame_of(desc, output_frame(desc, layout, connector)).isometry();
      break;
    case ModuleType::EndEffector:
      if (layout.terminal) t = t * frame_of(desc, *layout.terminal).isometry();
      break;
  }
  return t;
}

Isometry3d parent_child_transform(const ModuleDescription& parent, std::string_view connector,
                                  std::span<const double> q) {
  const auto* c = parent.connector(connector);
  if (!c || c->kind != ConnectorKind::Output) {
    throw Error(ErrorKind::NotFound, "model_gen", parent.module_identifier,
                "module '" + parent.module_identifier + "' has no output connector '" + std::string(connector) + "'");
  }
  std::vector<double> zeros(parent.joints.size(), 0.0);
  if (q.empty()) q = zeros;
  return module_transform(parent, q, connector);
}

PhysicalGraph expand(const TopologyGraph& chi, const ModuleDatabase& db) {
  struct Inst {
    const ModuleDescription* desc = nullptr;
    std::vector<int> positions;
    std::string parent_connector;
    std::vector<std::size_t> children;
  };
  const int n = static_cast<int>(chi.nodes.size());
  std::vector<Inst> insts;
  std::vector<std::size_t> inst_of(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> esc_of(static_cast<std::size_t>(n) + 1, 0);

  auto model_error = [](int pos, const std::string& msg) {
    throw Error(ErrorKind::Model, "model_gen", std::to_string(pos), msg);
  };

  for (int pos = 1; pos <= n; ++pos) {
    const auto& node = chi.node(pos);
    const auto* desc = db.find(node.module_identifier);
    if (!desc) model_error(pos, "unknown module_identifier '" + node.module_identifier + "' at slave " + std::to_string(pos));
    std::string connector;
    std::optional<std::size_t> parent_inst;
    if (node.parent_position != 0) {
      const int q = node.parent_position;
      const int port = node.parent_port.value_or(0);
      auto& parent = insts[inst_of[q]];
      const int e = esc_of[q];
      if (parent.desc->module_identifier == node.module_identifier) {
        auto it = std::find_if(parent.desc->internal_links.begin(), parent.desc->internal_links.end(),
                               [&](const InternalLink& l) { return l.from == EscPort{e, port}; });
        if (it != parent.desc->internal_links.end()) {
          inst_of[pos] = inst_of[q];
          esc_of[pos] = it->to.esc;
          if (parent.positions.at(it->to.esc) != 0) model_error(pos, "ESC claimed twice within one module");
          parent.positions[it->to.esc] = pos;
          continue;
        }
      }
      auto c = std::find_if(parent.desc->connectors.begin(), parent.desc->connectors.end(), [&](const auto& cs) {
        return cs.kind == ConnectorKind::Output && cs.esc_index == e && cs.esc_port == port;
      });
      if (c == parent.desc->connectors.end()) {
        model_error(pos, "module '" + parent.desc->module_identifier + "' has no connector on ESC " +
                             std::to_string(e) + " port " + std::to_string(port));
      }
      connector = c->name;
      parent_inst = inst_of[q];
    }
    if (desc->esc_count < 1) model_error(pos, "module '" + desc->module_identifier + "' has no ESC");
    Inst inst;
    inst.desc = desc;
    inst.positions.assign(static_cast<std::size_t>(desc->esc_count), 0);
    inst.positions[0] = pos;
    inst.parent_connector = connector;
    insts.push_back(std::move(inst));
    inst_of[pos] = insts.size() - 1;
    esc_of[pos] = 0;
    if (parent_inst) insts[*parent_inst].children.push_back(insts.size() - 1);
  }
  for (std::size_t i = 0; i < insts.size(); ++i) {
    for (int p : insts[i].positions) {
      if (p == 0) model_error(insts[i].positions[0], "module m" + std::to_string(i) + " is missing one of its ESCs");
    }
  }

  PhysicalGraph phi;
  phi.catalog_version = db.version();
  BodyNode base;
  base.name = "base_link";
  base.role = BodyRole::Base;
  phi.root = phi.add_body(std::move(base));
  if (insts.empty()) return phi;

  std::size_t next_tag = 0;
  std::map<std::string, std::size_t> chain_index;
  auto open_chain = [&](std::size_t base_body) {
    Chain c;
    c.tag = chain_tag(next_tag++);
    c.base = base_body;
    chain_index[c.tag] = phi.chains.size();
    phi.chains.push_back(c);
    return phi.chains.back().tag;
  };

  std::function<void(std::size_t, std::size_t, const Origin&, const std::string&)> build =
      [&](std::size_t i, std::size_t parent_body, const Origin& origin, const std::string& tag) {
        const auto& inst = insts[i];
        const auto& desc = *inst.desc;
        const std::string id = "m" + std::to_string(i);
        ExpandedModule em = append_module(phi, desc, id, tag, parent_body, origin, false);
        phi.modules.push_back({id, desc.module_identifier, inst.positions, em.bodies});

        auto& chain = phi.chains[chain_index.at(tag)];
        for (std::size_t k = 0; k < em.bodies.size(); ++k) {
          // A hub that opens a chain is its base, not a member.
          if (k == 0 && desc.module_type == ModuleType::Hub && chain.bodies.empty()) {
            chain.base = em.bodies[0];
            continue;
          }
          chain.bodies.push_back(em.bodies[k]);
        }

        const ModuleLayout layout = layout_of(desc);
        for (std::size_t k = 0; k < inst.children.size(); ++k) {
          const std::size_t child = inst.children[k];
          const std::string child_tag =
              (desc.module_type == ModuleType::Hub && k > 0) ? open_chain(em.output_body) : tag;
          const auto& out_frame = layout.outputs.at(insts[child].parent_connector);
          build(child, em.output_body, frame_of(desc, out_frame), child_tag);
        }
      };

  const std::string root_tag = open_chain(phi.root);
  build(0, phi.root, Origin{}, root_tag);
  for (auto& c : phi.chains) classify(phi, c, &db);
  return phi;
}

PhysicalGraph name_model(PhysicalGraph phi) {
  std::vector<std::vector<std::size_t>> children(phi.nodes.size());
  for (std::size_t e = 0; e < phi.edges.size(); ++e) children[phi.edges[e].parent].push_back(e);

  std::map<std::string, std::pair<int, int>> counters;  // chain -> (joint index, link index)
  phi.nodes[phi.root].name = "base_link";
  std::function<void(std::size_t)> visit = [&](std::size_t body) {
    for (std::size_t e : children[body]) {
      auto& edge = phi.edges[e];
      auto& child = phi.nodes[edge.child];
      if (child.role != BodyRole::Addon && !(child.role == BodyRole::TcpMarker && child.instance_id.empty())) {
        auto& [joint_idx, link_idx] = counters[child.chain];
        if (edge.moving()) {
          edge.name = "J" + std::to_string(joint_idx) + child.chain;
          ++joint_idx;
          link_idx = 0;
          child.name = "L_" + std::to_string(joint_idx) + child.chain;
        } else if (child.role == BodyRole::TcpMarker) {
          child.name = "TCP_" + child.chain;
        } else {
          child.name = "L_" + std::to_string(joint_idx) + "_" + std::to_string(link_idx) + child.chain;
          ++link_idx;
        }
      }
      if (!edge.moving()) edge.name = "fixed_" + phi.nodes[edge.parent].name + "_" + child.name;
      visit(edge.child);
    }
  };
  visit(phi.root);
  return phi;
}

PhysicalGraph apply_customization(PhysicalGraph phi, const Customization& cust, const ModuleDatabase& db) {
  auto fail = [](const std::string& entity, const std::string& msg) {
    throw Error(ErrorKind::Customization, "customize", entity, msg);
  };
  auto body_name_taken = [&](const std::string& name) { return phi.find_body(name).has_value(); };

  for (const auto& [joint, value] : cust.homing) {
    const auto e = phi.find_edge(joint);
    if (!e || !phi.edges[*e].moving()) fail(joint, "homing refers to unknown joint '" + joint + "'");
    const auto& lim = *phi.edges[*e].limits;
    if (value < lim.lower || value > lim.upper) {
      throw Error(ErrorKind::Limit, "customize", joint,
                  "homing " + format_double(value) + " for '" + joint + "' outside [" + format_double(lim.lower) +
                      ", " + format_double(lim.upper) + "]");
    }
    phi.homing[joint] = value;
  }

  std::size_t addon_count = 0;
  for (const auto& addon : cust.addons) {
    const auto target_opt = phi.find_body(addon.target);
    if (!target_opt) fail(addon.target, "add-on target body '" + addon.target + "' not found");
    std::size_t target = *target_opt;
    Origin origin = addon.origin;

    if (addon.connector) {
      const std::string inst_id = phi.nodes[target].instance_id;
      const ModuleInstance* inst = nullptr;
      for (const auto& m : phi.modules) {
        if (m.instance_id == inst_id) inst = &m;
      }
      if (!inst) fail(addon.target, "target body '" + addon.target + "' does not belong to a catalog module");
      const auto& desc = db.at(inst->module_identifier);
      const ModuleLayout layout = layout_of(desc);
      auto it = layout.outputs.find(*addon.connector);
      if (it == layout.outputs.end()) fail(*addon.connector, "unknown connector '" + *addon.connector + "'");
      origin = frame_of(desc, it->second);
      // Output frames hang off the module's last moving body.
      for (auto b : inst->bodies) {
        if (phi.nodes[b].role != BodyRole::TcpMarker) target = b;
      }
    }

    const std::string chain = phi.nodes[target].chain;
    const std::string inst_id = "a" + std::to_string(addon_count++);
    if (addon.module_id) {
      const auto* desc = db.find(*addon.module_id);
      if (!desc) fail(*addon.module_id, "unknown add-on module '" + *addon.module_id + "'");
      if (desc->actuated()) fail(*addon.module_id, "add-on modules must be passive");
      const std::string name = addon.name.empty() ? desc->module_identifier : addon.name;
      if (body_name_taken(name)) fail(name, "add-on name '" + name + "' already in use");
      ExpandedModule em = append_module(phi, *desc, inst_id, chain, target, origin, true);
      phi.nodes[em.bodies[0]].name = name;
      if (em.tcp) phi.nodes[*em.tcp].name = name + "_tcp";
      phi.modules.push_back({inst_id, desc->module_identifier, {}, em.bodies});
      for (auto b : em.bodies) {
        const auto& edge = phi.edges[*phi.nodes[b].parent_edge];
        phi.edges[*phi.nodes[b].parent_edge].name = "fixed_" + phi.nodes[edge.parent].name + "_" + phi.nodes[b].name;
      }
      // A passive end-effector closing a chain makes it an arm (or leg).
      for (auto& c : phi.chains) {
        if (!c.bodies.empty() && c.bodies.back() == target && desc->module_type == ModuleType::EndEffector) {
          c.bodies.insert(c.bodies.end(), em.bodies.begin(), em.bodies.end());
          classify(phi, c, &db);
        }
      }
    } else {
      if (body_name_taken(addon.name)) fail(addon.name, "add-on name '" + addon.name + "' already in use");
      BodyNode b;
      b.name = addon.name;
      b.inertia = addon.inertia;
      b.mesh = addon.mesh;
      b.instance_id = inst_id;
      b.role = BodyRole::Addon;
      b.chain = chain;
      const std::size_t body = phi.add_body(std::move(b));
      phi.add_edge({"fixed_" + phi.nodes[target].name + "_" + addon.name, EdgeKind::Fixed, origin, std::nullopt,
                    std::nullopt, target, body});
    }
  }
  return phi;
}

void check_tree(const PhysicalGraph& phi) {
  auto fail = [](const std::string& entity, const std::string& msg) {
    throw Error(ErrorKind::Model, "emit", entity, msg);
  };
  if (phi.root >= phi.nodes.size()) fail("", "root body missing");
  if (phi.edges.size() + 1 != phi.nodes.size()) fail("", "body and joint counts do not form a tree");
  std::vector<int> incoming(phi.nodes.size(), 0);
  for (const auto& e : phi.edges) {
    if (e.parent >= phi.nodes.size() || e.child >= phi.nodes.size()) fail(e.name, "joint references a missing body");
    ++incoming[e.child];
  }
  for (std::size_t i = 0; i < phi.nodes.size(); ++i) {
    const int expected = i == phi.root ? 0 : 1;
    if (incoming[i] != expected) fail(phi.nodes[i].name, "body '" + phi.nodes[i].name + "' is orphaned or has several parents");
  }
  std::vector<std::vector<std::size_t>> children(phi.nodes.size());
  for (const auto& e : phi.edges) children[e.parent].push_back(e.child);
  std::vector<bool> seen(phi.nodes.size(), false);
  std::vector<std::size_t> stack{phi.root};
  std::size_t reached = 0;
  while (!stack.empty()) {
    const std::size_t b = stack.back();
    stack.pop_back();
    if (seen[b]) fail(phi.nodes[b].name, "cycle through body '" + phi.nodes[b].name + "'");
    seen[b] = true;
    ++reached;
    for (auto c : children[b]) stack.push_back(c);
  }
  if (reached != phi.nodes.size()) fail("", "model contains a cycle or a detached body");
  std::set<std::string> names;
  for (const auto& n : phi.nodes) {
    if (n.name.empty() || !names.insert(n.name).second) fail(n.name, "body names must be unique and non-empty");
  }
  names.clear();
  for (const auto& e : phi.edges) {
    if (e.name.empty() || !names.insert(e.name).second) fail(e.name, "joint names must be unique and non-empty");
  }
}

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string triple(const Vector3d& v) {
  return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

std::string origin_element(const Origin& o) {
  return "<origin xyz=\"" + triple(o.xyz) + "\" rpy=\"" + triple(o.rpy) + "\"/>";
}

}  // namespace

std::string emit_urdf(const PhysicalGraph& phi, std::string_view robot_name) {
  check_tree(phi);
  std::ostringstream x;
  x << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  x << "<robot name=\"" << xml_escape(robot_name) << "\">\n";
  for (const auto& n : phi.nodes) {
    const auto& I = n.inertia.inertia;
    x << "  <link name=\"" << xml_escape(n.name) << "\">\n";
    x << "    <inertial>\n";
    x << "      " << origin_element(Origin{n.inertia.com, Vector3d::Zero()}) << "\n";
    x << "      <mass value=\"" << format_double(n.inertia.mass) << "\"/>\n";
    x << "      <inertia ixx=\"" << format_double(I(0, 0)) << "\" ixy=\"" << format_double(I(0, 1)) << "\" ixz=\""
      << format_double(I(0, 2)) << "\" iyy=\"" << format_double(I(1, 1)) << "\" iyz=\"" << format_double(I(1, 2))
      << "\" izz=\"" << format_double(I(2, 2)) << "\"/>\n";
    x << "    </inertial>\n";
    if (n.mesh) {
      for (const char* tag : {"visual", "collision"}) {
        x << "    <" << tag << ">\n";
        x << "      " << origin_element(n.mesh->origin) << "\n";
        x << "      <geometry>\n";
        x << "        <mesh filename=\"" << xml_escape(n.mesh->path) << "\"/>\n";
        x << "      </geometry>\n";
        x << "    </" << tag << ">\n";
      }
    }
    x << "  </link>\n";
  }
  for (const auto& e : phi.edges) {
    x << "  <joint name=\"" << xml_escape(e.name) << "\" type=\"" << to_string(e.kind) << "\">\n";
    x << "    <parent link=\"" << xml_escape(phi.nodes[e.parent].name) << "\"/>\n";
    x << "    <child link=\"" << xml_escape(phi.nodes[e.child].name) << "\"/>\n";
    x << "    " << origin_element(e.origin) << "\n";
    if (e.moving()) {
      x << "    <axis xyz=\"0 0 1\"/>\n";
      const auto& l = *e.limits;
      x << "    <limit effort=\"" << format_double(l.effort) << "\" velocity=\"" << format_double(l.velocity)
        << "\" lower=\"" << format_double(l.lower) << "\" upper=\"" << format_double(l.upper) << "\"/>\n";
    }
    x << "  </joint>\n";
  }
  x << "</robot>\n";
  return x.str();
}

std::string emit_srdf(const PhysicalGraph& phi, std::string_view robot_name) {
  check_tree(phi);
  std::ostringstream x;
  x << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  x << "<robot name=\"" << xml_escape(robot_name) << "\">\n";
  for (const auto& c : phi.chains) {
    if (c.bodies.empty()) continue;
    const std::string group = std::string(to_string(c.semantics)) + "_" + c.tag;
    x << "  <group name=\"" << group << "\">\n";
    x << "    <chain base_link=\"" << xml_escape(phi.nodes[c.base].name) << "\" tip_link=\""
      << xml_escape(phi.nodes[c.bodies.back()].name) << "\"/>\n";
    x << "  </group>\n";
  }
  for (const auto& c : phi.chains) {
    if (c.bodies.empty() || c.semantics == ChainClass::Unclassified) continue;
    const std::string group = std::string(to_string(c.semantics)) + "_" + c.tag;
    x << "  <end_effector name=\"" << to_string(c.end_effector) << "_" << c.tag << "\" parent_link=\""
      << xml_escape(phi.nodes[c.bodies.back()].name) << "\" group=\"" << group << "\"/>\n";
  }
  x << "</robot>\n";
  return x.str();
}

}  // namespace modforge
