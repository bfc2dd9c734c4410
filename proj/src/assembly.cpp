#include "modforge/assembly.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "modforge/error.hpp"

namespace modforge {

using nlohmann::json;

const Placement* AssemblySpec::find(std::string_view instance) const {
  for (const auto& p : placements) {
    if (p.instance_id == instance) return &p;
  }
  return nullptr;
}

void validate_assembly(const AssemblySpec& assembly, const ModuleDatabase& db) {
  auto fail = [](const std::string& entity, const std::string& msg) {
    throw Error(ErrorKind::Assembly, "assembly", entity, msg);
  };
  if (assembly.placements.empty()) fail("", "assembly has no placements");

  std::set<std::string> placed;
  std::set<std::pair<std::string, std::string>> occupied;
  for (std::size_t i = 0; i < assembly.placements.size(); ++i) {
    const auto& p = assembly.placements[i];
    if (p.instance_id.empty()) fail("placements[" + std::to_string(i) + "]", "empty instance_id");
    if (placed.count(p.instance_id)) fail(p.instance_id, "duplicate instance_id '" + p.instance_id + "'");
    const auto* desc = db.find(p.module_id);
    if (!desc) {
      throw Error(ErrorKind::NotFound, "assembly", p.instance_id,
                  "unknown module_identifier '" + p.module_id + "' for instance '" + p.instance_id + "'");
    }
    if (!p.parent_instance) {
      if (p.instance_id != assembly.root) fail(p.instance_id, "only the root may have no parent");
      if (i != 0) fail(p.instance_id, "the root must be the first placement");
    } else {
      if (p.instance_id == assembly.root) fail(p.instance_id, "the root cannot have a parent");
      if (!placed.count(*p.parent_instance)) {
        fail(p.instance_id, "parent '" + *p.parent_instance + "' is not placed before '" + p.instance_id + "'");
      }
      const auto* parent = assembly.find(*p.parent_instance);
      const auto& pdesc = db.at(parent->module_id);
      const auto* c = pdesc.connector(p.parent_connector);
      if (!c || c->kind != ConnectorKind::Output) {
        fail(p.instance_id, "unknown connector '" + p.parent_connector + "' on '" + *p.parent_instance + "'");
      }
      if (!occupied.emplace(*p.parent_instance, p.parent_connector).second) {
        throw Error(ErrorKind::Conflict, "assembly", p.instance_id,
                    "connector '" + p.parent_connector + "' of '" + *p.parent_instance + "' is already occupied");
      }
    }
    placed.insert(p.instance_id);
  }
  if (assembly.placements.front().instance_id != assembly.root) fail(assembly.root, "root is not the first placement");
}

AssemblySpec assembly_from_json(const json& j) {
  AssemblySpec a;
  try {
    for (const auto& p : j.at("placements")) {
      Placement pl;
      pl.instance_id = p.at("instance_id").get<std::string>();
      pl.module_id = p.at("module_id").get<std::string>();
      if (p.contains("parent_instance") && !p.at("parent_instance").is_null()) {
        pl.parent_instance = p.at("parent_instance").get<std::string>();
        pl.parent_connector = p.at("parent_connector").get<std::string>();
      }
      pl.flipped = p.value("flipped", false);
      a.placements.push_back(std::move(pl));
    }
    if (j.contains("root")) {
      a.root = j.at("root").get<std::string>();
    } else if (!a.placements.empty()) {
      a.root = a.placements.front().instance_id;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "assembly", "", std::string("malformed assembly: ") + e.what());
  }
  return a;
}

json assembly_to_json(const AssemblySpec& a) {
  json j{{"root", a.root}, {"placements", json::array()}};
  for (const auto& p : a.placements) {
    json pj{{"instance_id", p.instance_id}, {"module_id", p.module_id}};
    if (p.parent_instance) {
      pj["parent_instance"] = *p.parent_instance;
      pj["parent_connector"] = p.parent_connector;
    }
    if (p.flipped) pj["flipped"] = true;
    j["placements"].push_back(std::move(pj));
  }
  return j;
}

namespace {

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& e : n) arr.push_back(yaml_to_json(e));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : n) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = n.Scalar();
      if (s == "true" || s == "false") return s == "true";
      return s;
    }
    default:
      return nullptr;
  }
}

}  // namespace

AssemblySpec load_assembly(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "assembly", path.string(), "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto ext = path.extension().string();
  const bool yaml = ext == ".yaml" || ext == ".yml";
  if (!yaml) {
    try {
      return assembly_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, "assembly", path.string(),
                  path.string() + ": parse error at byte " + std::to_string(e.byte));
    }
  }
  try {
    return assembly_from_json(yaml_to_json(YAML::Load(text)));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::Parse, "assembly", path.string(), path.string() + ": " + e.what());
  }
}

}  // namespace modforge
