#include "modforge/urdf_reader.hpp"

#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "modforge/error.hpp"

namespace modforge::urdf {

namespace pt = boost::property_tree;

namespace {

Eigen::Vector3d parse_triple(const std::string& text) {
  std::istringstream in(text);
  Eigen::Vector3d v;
  if (!(in >> v.x() >> v.y() >> v.z())) {
    throw Error(ErrorKind::Parse, "urdf", text, "expected three numbers, got '" + text + "'");
  }
  return v;
}

std::string required(const pt::ptree& node, const std::string& attr, const std::string& where) {
  auto v = node.get_optional<std::string>("<xmlattr>." + attr);
  if (!v) throw Error(ErrorKind::Parse, "urdf", where, where + " lacks attribute '" + attr + "'");
  return *v;
}

double number(const pt::ptree& node, const std::string& attr, const std::string& where) {
  const std::string text = required(node, attr, where);
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parse, "urdf", where, "attribute '" + attr + "' of " + where + " is not a number");
  }
}

void read_origin(const pt::ptree& parent, Eigen::Vector3d& xyz, Eigen::Vector3d& rpy) {
  if (auto o = parent.get_child_optional("origin")) {
    xyz = parse_triple(o->get<std::string>("<xmlattr>.xyz", "0 0 0"));
    rpy = parse_triple(o->get<std::string>("<xmlattr>.rpy", "0 0 0"));
  }
}

Eigen::Isometry3d origin_pose(const Eigen::Vector3d& xyz, const Eigen::Vector3d& rpy) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                   .toRotationMatrix();
  t.translation() = xyz;
  return t;
}

}  // namespace

const Link* Model::link(const std::string& n) const {
  for (const auto& l : links) {
    if (l.name == n) return &l;
  }
  return nullptr;
}

const Joint* Model::joint(const std::string& n) const {
  for (const auto& j : joints) {
    if (j.name == n) return &j;
  }
  return nullptr;
}

std::string Model::root() const {
  for (const auto& l : links) {
    bool is_child = false;
    for (const auto& j : joints) is_child = is_child || j.child == l.name;
    if (!is_child) return l.name;
  }
  throw Error(ErrorKind::Parse, "urdf", name, "no root link");
}

std::vector<std::string> Model::moving_joints() const {
  std::vector<std::string> out;
  for (const auto& j : joints) {
    if (j.moving()) out.push_back(j.name);
  }
  return out;
}

Model parse(const std::string& xml) {
  pt::ptree tree;
  try {
    std::istringstream in(xml);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorKind::Parse, "urdf", "", std::string("malformed URDF: ") + e.what());
  }
  auto robot = tree.get_child_optional("robot");
  if (!robot) throw Error(ErrorKind::Parse, "urdf", "", "missing <robot> element");

  Model model;
  model.name = robot->get<std::string>("<xmlattr>.name", "");
  for (const auto& [tag, node] : *robot) {
    if (tag == "link") {
      Link l;
      l.name = required(node, "name", "link");
      if (auto in = node.get_child_optional("inertial")) {
        Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
        read_origin(*in, l.com, rpy);
        if (auto m = in->get_child_optional("mass")) l.mass = number(*m, "value", "mass of " + l.name);
        if (auto i = in->get_child_optional("inertia")) {
          const std::string where = "inertia of " + l.name;
          const double ixx = number(*i, "ixx", where), ixy = number(*i, "ixy", where), ixz = number(*i, "ixz", where);
          const double iyy = number(*i, "iyy", where), iyz = number(*i, "iyz", where), izz = number(*i, "izz", where);
          l.inertia << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
          const Eigen::Matrix3d r = origin_pose(Eigen::Vector3d::Zero(), rpy).linear();
          l.inertia = r * l.inertia * r.transpose();
        }
      }
      model.links.push_back(std::move(l));
    } else if (tag == "joint") {
      Joint j;
      j.name = required(node, "name", "joint");
      j.type = required(node, "type", "joint " + j.name);
      j.parent = required(node.get_child("parent", pt::ptree{}), "link", "parent of " + j.name);
      j.child = required(node.get_child("child", pt::ptree{}), "link", "child of " + j.name);
      read_origin(node, j.xyz, j.rpy);
      if (auto a = node.get_child_optional("axis")) j.axis = parse_triple(required(*a, "xyz", "axis of " + j.name));
      if (auto lim = node.get_child_optional("limit")) {
        const std::string where = "limit of " + j.name;
        Limit l;
        l.effort = number(*lim, "effort", where);
        l.velocity = number(*lim, "velocity", where);
        l.lower = lim->get<double>("<xmlattr>.lower", 0.0);
        l.upper = lim->get<double>("<xmlattr>.upper", 0.0);
        j.limit = l;
      }
      model.joints.push_back(std::move(j));
    }
  }
  return model;
}

Eigen::Isometry3d forward_kinematics(const Model& model, const std::map<std::string, double>& q,
                                     const std::string& link) {
  if (!model.link(link)) throw Error(ErrorKind::NotFound, "urdf", link, "unknown frame '" + link + "'");
  std::vector<const Joint*> path;
  std::string current = link;
  while (true) {
    const Joint* parent = nullptr;
    for (const auto& j : model.joints) {
      if (j.child == current) parent = &j;
    }
    if (!parent) break;
    if (path.size() > model.joints.size()) throw Error(ErrorKind::Parse, "urdf", link, "cycle in URDF");
    path.push_back(parent);
    current = parent->parent;
  }
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    const Joint& j = **it;
    t = t * origin_pose(j.xyz, j.rpy);
    const auto v = q.find(j.name);
    const double value = v == q.end() ? 0.0 : v->second;
    if (j.type == "revolute" || j.type == "continuous") {
      t = t * Eigen::AngleAxisd(value, j.axis.normalized());
    } else if (j.type == "prismatic") {
      t = t * Eigen::Translation3d(value * j.axis.normalized());
    }
  }
  return t;
}

}  // namespace modforge::urdf
