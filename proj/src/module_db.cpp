#include "modforge/module_db.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "modforge/error.hpp"

#ifndef MODFORGE_DATA_DIR
#define MODFORGE_DATA_DIR "data"
#endif

namespace modforge {

using nlohmann::json;

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Assembly: return "assembly";
    case ErrorKind::Range: return "range";
    case ErrorKind::Topology: return "topology";
    case ErrorKind::Model: return "model";
    case ErrorKind::Limit: return "limit";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Customization: return "customization";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(const std::array<std::pair<std::string_view, Enum>, N>& table, const std::string& s,
                const std::string& field) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  throw Error(ErrorKind::Validation, "module_db", field, "unknown value '" + s + "' for " + field);
}

template <typename Enum, std::size_t N>
std::string_view enum_name(const std::array<std::pair<std::string_view, Enum>, N>& table, Enum v) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<std::string_view, ModuleType>, 4> kModuleTypes{{
    {"Joint", ModuleType::Joint},
    {"Link", ModuleType::Link},
    {"Hub", ModuleType::Hub},
    {"EndEffector", ModuleType::EndEffector},
}};
constexpr std::array<std::pair<std::string_view, ActuatorType>, 5> kActuatorTypes{{
    {"LargeA", ActuatorType::LargeA},
    {"LargeB", ActuatorType::LargeB},
    {"Medium", ActuatorType::Medium},
    {"SmallA", ActuatorType::SmallA},
    {"SmallB", ActuatorType::SmallB},
}};
constexpr std::array<std::pair<std::string_view, SemanticTag>, 6> kSemanticTags{{
    {"none", SemanticTag::None},
    {"gripper", SemanticTag::Gripper},
    {"wheel", SemanticTag::Wheel},
    {"drill", SemanticTag::Drill},
    {"sander", SemanticTag::Sander},
    {"sprayer", SemanticTag::Sprayer},
}};
constexpr std::array<std::pair<std::string_view, ConnectorKind>, 2> kConnectorKinds{{
    {"input", ConnectorKind::Input},
    {"output", ConnectorKind::Output},
}};
constexpr std::array<std::pair<std::string_view, ConnectorSize>, 3> kConnectorSizes{{
    {"small", ConnectorSize::Small},
    {"medium", ConnectorSize::Medium},
    {"large", ConnectorSize::Large},
}};
constexpr std::array<std::pair<std::string_view, JointKind>, 2> kJointKinds{{
    {"revolute", JointKind::Revolute},
    {"prismatic", JointKind::Prismatic},
}};

Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw json::type_error::create(302, "expected 3-element array", &j);
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json vec3_to_json(const Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

ActuatorSpec actuator_from_json(const json& j) {
  ActuatorSpec a;
  a.actuator_type = parse_enum(kActuatorTypes, j.at("actuator_type").get<std::string>(), "actuator_type");
  a.gear_ratio = j.at("gear_ratio").get<double>();
  a.max_velocity = j.at("max_velocity").get<double>();
  a.peak_torque = j.at("peak_torque").get<double>();
  a.continuous_torque = j.at("continuous_torque").get<double>();
  const auto& range = j.at("position_range");
  a.lower = range.at(0).get<double>();
  a.upper = range.at(1).get<double>();
  a.actuator_mass = j.value("actuator_mass", 0.0);
  return a;
}

json actuator_to_json(const ActuatorSpec& a) {
  return {
      {"actuator_type", enum_name(kActuatorTypes, a.actuator_type)},
      {"gear_ratio", a.gear_ratio},
      {"max_velocity", a.max_velocity},
      {"peak_torque", a.peak_torque},
      {"continuous_torque", a.continuous_torque},
      {"position_range", json::array({a.lower, a.upper})},
      {"actuator_mass", a.actuator_mass},
  };
}

JointSpec joint_from_json(const json& j) {
  JointSpec js;
  js.axis.kind = parse_enum(kJointKinds, j.at("kind").get<std::string>(), "joint.kind");
  js.actuator = actuator_from_json(j.at("actuator"));
  return js;
}

json joint_to_json(const JointSpec& js) {
  return {{"kind", enum_name(kJointKinds, js.axis.kind)}, {"actuator", actuator_to_json(js.actuator)}};
}

std::string module_label(const ModuleDescription& d) {
  return d.module_identifier.empty() ? std::string("<unnamed>") : d.module_identifier;
}

}  // namespace

std::string_view to_string(ModuleType v) { return enum_name(kModuleTypes, v); }
std::string_view to_string(ActuatorType v) { return enum_name(kActuatorTypes, v); }
std::string_view to_string(SemanticTag v) { return enum_name(kSemanticTags, v); }
std::string_view to_string(ConnectorKind v) { return enum_name(kConnectorKinds, v); }
std::string_view to_string(ConnectorSize v) { return enum_name(kConnectorSizes, v); }
std::string_view to_string(JointKind v) { return enum_name(kJointKinds, v); }

const ConnectorSpec* ModuleDescription::connector(std::string_view n) const {
  auto it = std::find_if(connectors.begin(), connectors.end(), [&](const auto& c) { return c.name == n; });
  return it == connectors.end() ? nullptr : &*it;
}

const ConnectorSpec* ModuleDescription::input_connector() const {
  auto it = std::find_if(connectors.begin(), connectors.end(),
                         [](const auto& c) { return c.kind == ConnectorKind::Input; });
  return it == connectors.end() ? nullptr : &*it;
}

std::vector<const ConnectorSpec*> ModuleDescription::output_connectors() const {
  std::vector<const ConnectorSpec*> out;
  for (const auto& c : connectors) {
    if (c.kind == ConnectorKind::Output) out.push_back(&c);
  }
  return out;
}

ModuleLayout layout_of(const ModuleDescription& desc) {
  ModuleLayout layout;
  switch (desc.module_type) {
    case ModuleType::Joint:
      layout.stages.push_back({"T_in_joint", 0});
      for (const auto* c : desc.output_connectors()) layout.outputs[c->name] = "T_joint_" + c->name;
      break;
    case ModuleType::Link:
    case ModuleType::Hub:
      for (const auto* c : desc.output_connectors()) layout.outputs[c->name] = "T_in_" + c->name;
      break;
    case ModuleType::EndEffector: {
      const bool wheel = desc.semantic_tag == SemanticTag::Wheel;
      if (desc.joints.empty()) {
        layout.terminal = wheel ? "T_in_wheel" : "T_in_tcp";
      } else if (desc.joints.size() == 1) {
        if (wheel) {
          layout.stages.push_back({"T_in_wheel", 0});
        } else {
          layout.stages.push_back({"T_in_joint", 0});
          layout.terminal = "T_joint_tcp";
        }
      } else {
        // Steered wheel: steering axis first, wheel axle at the wheel center.
        layout.stages.push_back({"T_in_joint", 0});
        layout.stages.push_back({"T_joint_wheel", 1});
      }
      break;
    }
  }
  return layout;
}

bool has_errors(std::span<const Diagnostic> diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::vector<Diagnostic> validate_module(const ModuleDescription& desc) {
  std::vector<Diagnostic> out;
  const std::string id = module_label(desc);
  auto error = [&](std::string field, std::string message) {
    out.push_back({Severity::Error, id, std::move(field), std::move(message)});
  };

  if (desc.module_identifier.empty()) error("module_identifier", "empty identifier");
  if (desc.esc_count < 0) error("esc_count", "negative ESC count");

  // Connectors.
  int inputs = 0;
  std::set<EscPort> used_ports;
  std::set<std::string> names;
  for (std::size_t i = 0; i < desc.connectors.size(); ++i) {
    const auto& c = desc.connectors[i];
    const std::string path = "connectors[" + std::to_string(i) + "]";
    if (!names.insert(c.name).second) error(path + ".name", "duplicate connector name '" + c.name + "'");
    if (c.esc_port < 0 || c.esc_port > 3) error(path + ".esc_port", "port must be in {0,1,2,3}");
    if (desc.esc_count > 0 && (c.esc_index < 0 || c.esc_index >= desc.esc_count)) {
      error(path + ".esc_index", "ESC index out of range");
    }
    if (c.kind == ConnectorKind::Input) {
      ++inputs;
      if (c.esc_index != 0 || c.esc_port != 0) error(path, "input connector must map to ESC 0 port 0");
    } else if (c.esc_port == 0) {
      error(path + ".esc_port", "output connector cannot use an upstream port");
    }
    if (desc.esc_count > 0 && !used_ports.insert({c.esc_index, c.esc_port}).second) {
      error(path, "ESC port already assigned");
    }
  }
  if (inputs != 1) error("connectors", "exactly one input connector required, found " + std::to_string(inputs));

  if (desc.module_type == ModuleType::EndEffector && !desc.output_connectors().empty()) {
    error("connectors", "end-effectors cannot have output connectors");
  }

  // Internal ESC wiring.
  if (desc.esc_count >= 2) {
    for (int e = 1; e < desc.esc_count; ++e) {
      const auto n = std::count_if(desc.internal_links.begin(), desc.internal_links.end(),
                                   [&](const InternalLink& l) { return l.to == EscPort{e, 0}; });
      if (n != 1) error("internal_links", "ESC " + std::to_string(e) + " must be wired upstream via its port 0");
    }
  }
  for (std::size_t i = 0; i < desc.internal_links.size(); ++i) {
    const auto& l = desc.internal_links[i];
    const std::string path = "internal_links[" + std::to_string(i) + "]";
    if (l.to.port != 0) error(path + ".to", "internal link must end at port 0");
    if (l.from.esc < 0 || l.from.esc >= desc.esc_count || l.to.esc <= 0 || l.to.esc >= desc.esc_count ||
        l.from.esc >= l.to.esc) {
      error(path, "internal link ESC indices out of order or range");
    }
    if (l.from.port < 1 || l.from.port > 3) error(path + ".from", "internal link must leave a downstream port");
    if (!used_ports.insert(l.from).second) error(path + ".from", "ESC port already assigned");
  }
  if (desc.esc_count < 2 && !desc.internal_links.empty()) {
    error("internal_links", "internal links require at least two ESCs");
  }

  // Joints and bodies.
  const std::size_t nj = desc.joints.size();
  switch (desc.module_type) {
    case ModuleType::Joint:
      if (nj != 1) error("joint", "Joint modules carry exactly one joint");
      break;
    case ModuleType::Link:
    case ModuleType::Hub:
      if (nj != 0) error("joint", "passive modules carry no joint");
      break;
    case ModuleType::EndEffector:
      if (nj > 2) error("joint", "end-effectors carry at most two joints");
      if (nj == 2 && desc.semantic_tag != SemanticTag::Wheel) {
        error("wheel_joint", "a second joint is only allowed on wheel end-effectors");
      }
      break;
  }
  if (desc.inertia.size() != nj + 1) {
    error("inertia", "expected " + std::to_string(nj + 1) + " bodies, found " + std::to_string(desc.inertia.size()));
  }
  for (std::size_t i = 0; i < nj; ++i) {
    const auto& a = desc.joints[i].actuator;
    const std::string path = (i == 0 ? std::string("joint") : std::string("wheel_joint")) + ".actuator";
    if (!(a.continuous_torque > 0.0 && a.continuous_torque <= a.peak_torque)) {
      error(path + ".continuous_torque", "require 0 < continuous_torque <= peak_torque");
    }
    if (!(a.max_velocity > 0.0)) error(path + ".max_velocity", "max_velocity must be positive");
    if (!(a.lower < a.upper)) error(path + ".position_range", "position_range.min must be below max");
    if (!(a.gear_ratio > 0.0)) error(path + ".gear_ratio", "gear_ratio must be positive");
  }
  for (std::size_t i = 0; i < desc.inertia.size(); ++i) {
    const auto& b = desc.inertia[i];
    const std::string path = "inertia[" + std::to_string(i) + "]";
    if (!(b.mass >= 0.0)) error(path + ".mass", "mass must be non-negative");
    if (!b.com.allFinite() || !b.inertia.allFinite()) {
      error(path, "non-finite inertial values");
      continue;
    }
    if ((b.inertia - b.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      error(path + ".inertia", "inertia tensor is not symmetric");
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Matrix3d> es(b.inertia);
    const Vector3d p = es.eigenvalues();
    if (p.minCoeff() < -1e-12) error(path + ".inertia", "inertia tensor is not positive semi-definite");
    if (p(0) + p(1) < p(2) - 1e-9 || p(0) + p(2) < p(1) - 1e-9 || p(1) + p(2) < p(0) - 1e-9) {
      error(path + ".inertia", "principal moments violate the triangle inequality");
    }
  }

  // Frames required by the module type.
  const ModuleLayout layout = layout_of(desc);
  auto require_frame = [&](const std::string& f) {
    auto it = desc.frames.find(f);
    if (it == desc.frames.end()) {
      error("frames." + f, "missing frame " + f);
    } else if (!it->second.xyz.allFinite() || !it->second.rpy.allFinite()) {
      error("frames." + f, "non-finite frame values");
    }
  };
  for (const auto& s : layout.stages) {
    if (s.joint < nj) require_frame(s.frame);
  }
  for (const auto& [connector, frame] : layout.outputs) require_frame(frame);
  if (layout.terminal) require_frame(*layout.terminal);
  if (desc.module_type == ModuleType::Joint && layout.outputs.empty()) require_frame("T_joint_out");
  if (desc.module_type == ModuleType::Link && layout.outputs.empty()) {
    error("connectors", "Link modules need an output connector");
  }

  if (desc.esc_count == 0 && desc.module_type != ModuleType::EndEffector) {
    error("esc_count", "only end-effectors may omit the ESC");
  }
  return out;
}

const ModuleDescription* ModuleDatabase::find(std::string_view id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

const ModuleDescription& ModuleDatabase::at(std::string_view id) const {
  if (const auto* d = find(id)) return *d;
  throw Error(ErrorKind::NotFound, "module_db", std::string(id), "unknown module_identifier '" + std::string(id) + "'");
}

void ModuleDatabase::insert(ModuleDescription desc) {
  const std::string id = desc.module_identifier;
  if (!entries_.emplace(id, std::move(desc)).second) {
    throw Error(ErrorKind::Conflict, "module_db", id, "duplicate module_identifier '" + id + "'");
  }
}

json origin_to_json(const Origin& o) { return {{"translation", vec3_to_json(o.xyz)}, {"rpy", vec3_to_json(o.rpy)}}; }

Origin origin_from_json(const json& j) {
  Origin o;
  o.xyz = vec3_from_json(j.at("translation"));
  o.rpy = vec3_from_json(j.at("rpy"));
  return o;
}

json inertia_to_json(const BodyInertia& b) {
  const auto& I = b.inertia;
  return {{"mass", b.mass},
          {"com", vec3_to_json(b.com)},
          {"inertia",
           {{"ixx", I(0, 0)}, {"ixy", I(0, 1)}, {"ixz", I(0, 2)}, {"iyy", I(1, 1)}, {"iyz", I(1, 2)}, {"izz", I(2, 2)}}}};
}

BodyInertia inertia_from_json(const json& j) {
  BodyInertia b;
  b.mass = j.at("mass").get<double>();
  b.com = vec3_from_json(j.at("com"));
  const auto& t = j.at("inertia");
  const double ixx = t.at("ixx").get<double>(), ixy = t.at("ixy").get<double>(), ixz = t.at("ixz").get<double>();
  const double iyy = t.at("iyy").get<double>(), iyz = t.at("iyz").get<double>(), izz = t.at("izz").get<double>();
  b.inertia << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
  return b;
}

ModuleDescription module_from_json(const json& j) {
  ModuleDescription d;
  d.module_identifier = j.value("module_identifier", std::string{});
  std::string field = "module_identifier";
  try {
    field = "module_identifier";
    d.module_identifier = j.at("module_identifier").get<std::string>();
    field = "name";
    d.name = j.value("name", d.module_identifier);
    field = "module_type";
    d.module_type = parse_enum(kModuleTypes, j.at("module_type").get<std::string>(), field);
    field = "esc_count";
    d.esc_count = j.at("esc_count").get<int>();
    field = "connectors";
    for (const auto& c : j.at("connectors")) {
      ConnectorSpec cs;
      cs.name = c.at("name").get<std::string>();
      cs.kind = parse_enum(kConnectorKinds, c.at("kind").get<std::string>(), "connectors.kind");
      cs.esc_index = c.at("esc_index").get<int>();
      cs.esc_port = c.at("esc_port").get<int>();
      cs.size = parse_enum(kConnectorSizes, c.value("size", std::string("large")), "connectors.size");
      d.connectors.push_back(std::move(cs));
    }
    field = "internal_links";
    if (j.contains("internal_links")) {
      for (const auto& l : j.at("internal_links")) {
        InternalLink il;
        il.from = {l.at("from").at(0).get<int>(), l.at("from").at(1).get<int>()};
        il.to = {l.at("to").at(0).get<int>(), l.at("to").at(1).get<int>()};
        d.internal_links.push_back(il);
      }
    }
    field = "frames";
    for (const auto& [name, value] : j.at("frames").items()) {
      field = "frames." + name;
      d.frames[name] = origin_from_json(value);
    }
    field = "joint";
    if (j.contains("joint") && !j.at("joint").is_null()) d.joints.push_back(joint_from_json(j.at("joint")));
    field = "wheel_joint";
    if (j.contains("wheel_joint") && !j.at("wheel_joint").is_null()) {
      d.joints.push_back(joint_from_json(j.at("wheel_joint")));
    }
    field = "inertia";
    for (const auto& b : j.at("inertia")) d.inertia.push_back(inertia_from_json(b));
    field = "semantic_tag";
    d.semantic_tag = parse_enum(kSemanticTags, j.value("semantic_tag", std::string("none")), field);
    field = "mesh_ref";
    if (j.contains("mesh_ref") && !j.at("mesh_ref").is_null()) {
      const auto& m = j.at("mesh_ref");
      MeshRef mr;
      mr.path = m.at("path").get<std::string>();
      if (m.contains("origin")) mr.origin = origin_from_json(m.at("origin"));
      d.mesh = std::move(mr);
    }
    field = "provenance";
    if (j.contains("provenance")) {
      for (const auto& [k, v] : j.at("provenance").items()) d.provenance[k] = v.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, "module_db", module_label(d),
                "module '" + module_label(d) + "', field '" + field + "': " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::Validation, "module_db", module_label(d),
                "module '" + module_label(d) + "', field '" + field + "': " + e.what());
  }
  return d;
}

json module_to_json(const ModuleDescription& d) {
  json j;
  j["module_identifier"] = d.module_identifier;
  j["name"] = d.name;
  j["module_type"] = to_string(d.module_type);
  j["esc_count"] = d.esc_count;
  j["connectors"] = json::array();
  for (const auto& c : d.connectors) {
    j["connectors"].push_back({{"name", c.name},
                               {"kind", to_string(c.kind)},
                               {"esc_index", c.esc_index},
                               {"esc_port", c.esc_port},
                               {"size", to_string(c.size)}});
  }
  j["internal_links"] = json::array();
  for (const auto& l : d.internal_links) {
    j["internal_links"].push_back(
        {{"from", json::array({l.from.esc, l.from.port})}, {"to", json::array({l.to.esc, l.to.port})}});
  }
  j["frames"] = json::object();
  for (const auto& [name, o] : d.frames) j["frames"][name] = origin_to_json(o);
  if (!d.joints.empty()) j["joint"] = joint_to_json(d.joints[0]);
  if (d.joints.size() > 1) j["wheel_joint"] = joint_to_json(d.joints[1]);
  j["inertia"] = json::array();
  for (const auto& b : d.inertia) j["inertia"].push_back(inertia_to_json(b));
  j["semantic_tag"] = to_string(d.semantic_tag);
  if (d.mesh) j["mesh_ref"] = {{"path", d.mesh->path}, {"origin", origin_to_json(d.mesh->origin)}};
  if (!d.provenance.empty()) j["provenance"] = d.provenance;
  return j;
}

json database_to_json(const ModuleDatabase& db) {
  json j{{"version", db.version()}, {"modules", json::array()}};
  for (const auto& [id, d] : db.entries()) j["modules"].push_back(module_to_json(d));
  return j;
}

namespace {

json parse_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "module_db", file.string(), "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "module_db", file.string(),
                file.string() + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void check_mesh(const ModuleDescription& d, const std::filesystem::path& base, std::vector<Diagnostic>& out) {
  if (!d.mesh) return;
  std::filesystem::path p(d.mesh->path);
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::exists(p)) {
    out.push_back({Severity::Warning, d.module_identifier, "mesh_ref.path", "mesh not found: " + d.mesh->path});
  }
}

}  // namespace

LoadReport load_database_report(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw Error(ErrorKind::Io, "module_db", path.string(), "no such path: " + path.string());

  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }

  std::optional<std::string> version;
  std::vector<std::pair<ModuleDescription, fs::path>> modules;
  for (const auto& file : files) {
    const json doc = parse_file(file);
    if (doc.is_object() && doc.contains("modules")) {
      if (!version && doc.contains("version")) version = doc.at("version").get<std::string>();
      for (const auto& m : doc.at("modules")) modules.emplace_back(module_from_json(m), file.parent_path());
    } else {
      modules.emplace_back(module_from_json(doc), file.parent_path());
    }
  }

  LoadReport report{ModuleDatabase(version.value_or("unversioned")), {}};
  // Insertion into an ordered map makes the result independent of file order.
  for (auto& [desc, base] : modules) {
    auto diags = validate_module(desc);
    check_mesh(desc, base, diags);
    report.diagnostics.insert(report.diagnostics.end(), diags.begin(), diags.end());
    report.database.insert(std::move(desc));
  }
  return report;
}

ModuleDatabase load_database(const std::filesystem::path& path) {
  LoadReport report = load_database_report(path);
  for (const auto& d : report.diagnostics) {
    if (d.severity == Severity::Error) {
      throw Error(ErrorKind::Validation, "module_db", d.module,
                  "module '" + d.module + "', field '" + d.field + "': " + d.message);
    }
  }
  return std::move(report.database);
}

std::filesystem::path default_catalog_path() {
  return std::filesystem::path(MODFORGE_DATA_DIR) / "catalog" / "catalog.json";
}

}  // namespace modforge
