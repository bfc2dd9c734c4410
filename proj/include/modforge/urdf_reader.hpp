#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace modforge::urdf {

struct Link {
  std::string name;
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
};

struct Limit {
  double effort = 0.0;
  double velocity = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct Joint {
  std::string name;
  std::string type;
  std::string parent;
  std::string child;
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();  // URDF default
  std::optional<Limit> limit;

  bool moving() const { return type != "fixed"; }
};

struct Model {
  std::string name;
  std::vector<Link> links;
  std::vector<Joint> joints;

  const Link* link(const std::string& name) const;
  const Joint* joint(const std::string& name) const;
  std::string root() const;
  /// Moving joints in document order.
  std::vector<std::string> moving_joints() const;
};

/// Parses a URDF document. Throws Error{Parse} on malformed XML or missing
/// required attributes.
Model parse(const std::string& xml);

/// Pose of `link` in the root link frame. Joints absent from `q` are at 0.
Eigen::Isometry3d forward_kinematics(const Model& model, const std::map<std::string, double>& q,
                                     const std::string& link);

}  // namespace modforge::urdf
