#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "modforge/model_gen.hpp"

namespace modforge {

/// Moving-joint name -> displacement (rad or m).
using JointState = std::map<std::string, double, std::less<>>;

struct FkResult {
  std::string frame;
  Isometry3d pose;  // root frame -> frame
};

struct Jacobian {
  std::vector<std::string> joints;  // moving joints on the root -> target path
  Eigen::Matrix<double, 6, Eigen::Dynamic> matrix;  // rows [linear; angular], root frame
};

struct ReachEnvelope {
  std::string chain;
  double min_height = 0.0;
  double max_height = 0.0;
  double max_radius = 0.0;
  std::size_t samples = 0;
  std::vector<std::string> joints;  // sampled joints; all others held at 0
};

/// Throws Error{Contract} for unknown joints and Error{Limit} for values
/// outside the joint range.
void check_joint_state(const PhysicalGraph& phi, const JointState& q);

/// Edge origin followed by the joint motion.
Isometry3d edge_transform(const JointEdge& edge, double q);

FkResult fk(const PhysicalGraph& phi, const JointState& q, std::string_view target);

/// Pose of `to` in the frame of `from`.
Isometry3d relative_fk(const PhysicalGraph& phi, const JointState& q, std::string_view from, std::string_view to);

Jacobian jacobian(const PhysicalGraph& phi, const JointState& q, std::string_view target);

/// Mass, CoM and inertia about the CoM of rigidly joined bodies, expressed in
/// the common frame each transform maps into. Throws Error{Contract} if empty.
BodyInertia aggregate_inertia(std::span<const std::pair<BodyInertia, Isometry3d>> bodies);

/// `body` and every body reachable from it through fixed joints, each with
/// its transform into the frame of `body`.
std::vector<std::pair<BodyInertia, Isometry3d>> rigid_group(const PhysicalGraph& phi, std::string_view body);

/// Sum of edge-origin translation norms from the chain's first body to its
/// tip. Throws Error{NotFound} for an unknown chain.
double chain_length(const PhysicalGraph& phi, std::string_view chain);

/// Extrema of the TCP over a Halton sampling of the chain's joint box.
/// Height is the TCP z in the root frame; radius is its distance from the
/// input frame of the chain's first module. `offset` skips that many leading
/// points of the sequence.
ReachEnvelope reach_envelope(const PhysicalGraph& phi, std::string_view chain, std::size_t samples = 65536,
                             std::size_t offset = 0);

/// Radical inverse of `index` in `base`.
double halton(std::size_t index, unsigned base);

}  // namespace modforge
