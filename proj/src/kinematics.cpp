#include "modforge/kinematics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "modforge/error.hpp"

namespace modforge {

namespace {

std::size_t body_or_throw(const PhysicalGraph& phi, std::string_view name) {
  auto b = phi.find_body(name);
  if (!b) throw Error(ErrorKind::NotFound, "kinematics", std::string(name), "unknown frame '" + std::string(name) + "'");
  return *b;
}

double joint_value(const JointEdge& e, const JointState& q) {
  auto it = q.find(e.name);
  if (it == q.end()) {
    throw Error(ErrorKind::Contract, "kinematics", e.name, "missing value for joint '" + e.name + "'");
  }
  return it->second;
}

Isometry3d pose_along(const PhysicalGraph& phi, const JointState& q, std::span<const std::size_t> path) {
  Isometry3d t = Isometry3d::Identity();
  for (auto e : path) {
    const auto& edge = phi.edges[e];
    t = t * edge_transform(edge, edge.moving() ? joint_value(edge, q) : 0.0);
  }
  return t;
}

constexpr std::array<unsigned, 32> kPrimes{2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,  37,  41,  43,  47,  53,
                                           59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

}  // namespace

void check_joint_state(const PhysicalGraph& phi, const JointState& q) {
  for (const auto& [name, value] : q) {
    auto e = phi.find_edge(name);
    if (!e || !phi.edges[*e].moving()) {
      throw Error(ErrorKind::Contract, "kinematics", name, "unknown joint '" + name + "'");
    }
    const auto& lim = *phi.edges[*e].limits;
    if (!(value >= lim.lower && value <= lim.upper)) {
      throw Error(ErrorKind::Limit, "kinematics", name,
                  "q = " + format_double(value) + " for '" + name + "' outside [" + format_double(lim.lower) + ", " +
                      format_double(lim.upper) + "]");
    }
  }
}

Isometry3d edge_transform(const JointEdge& edge, double q) {
  Isometry3d t = edge.origin.isometry();
  if (edge.moving()) t = t * twist_exp(*edge.axis, q);
  return t;
}

FkResult fk(const PhysicalGraph& phi, const JointState& q, std::string_view target) {
  const std::size_t body = body_or_throw(phi, target);
  check_joint_state(phi, q);
  const auto path = phi.path_to(body);
  return {std::string(target), pose_along(phi, q, path)};
}

Isometry3d relative_fk(const PhysicalGraph& phi, const JointState& q, std::string_view from, std::string_view to) {
  return fk(phi, q, from).pose.inverse(Eigen::Isometry) * fk(phi, q, to).pose;
}

Jacobian jacobian(const PhysicalGraph& phi, const JointState& q, std::string_view target) {
  const std::size_t body = body_or_throw(phi, target);
  check_joint_state(phi, q);
  const auto path = phi.path_to(body);

  std::vector<std::pair<std::size_t, Isometry3d>> axes;  // joint frame before its motion
  Isometry3d t = Isometry3d::Identity();
  for (auto e : path) {
    const auto& edge = phi.edges[e];
    t = t * edge.origin.isometry();
    if (edge.moving()) {
      axes.emplace_back(e, t);
      t = t * twist_exp(*edge.axis, joint_value(edge, q));
    }
  }
  const Vector3d p = t.translation();

  Jacobian jac;
  jac.matrix.setZero(6, static_cast<Eigen::Index>(axes.size()));
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const auto& [e, frame] = axes[k];
    const Vector3d z = frame.linear().col(2);
    const auto col = static_cast<Eigen::Index>(k);
    if (phi.edges[e].kind == EdgeKind::Revolute) {
      jac.matrix.col(col).head<3>() = z.cross(p - frame.translation());
      jac.matrix.col(col).tail<3>() = z;
    } else {
      jac.matrix.col(col).head<3>() = z;
    }
    jac.joints.push_back(phi.edges[e].name);
  }
  return jac;
}

BodyInertia aggregate_inertia(std::span<const std::pair<BodyInertia, Isometry3d>> bodies) {
  if (bodies.empty()) throw Error(ErrorKind::Contract, "kinematics", "", "no bodies to aggregate");
  BodyInertia out;
  Vector3d weighted = Vector3d::Zero();
  for (const auto& [b, t] : bodies) {
    out.mass += b.mass;
    weighted += b.mass * (t * b.com);
  }
  out.com = out.mass > 0.0 ? Vector3d(weighted / out.mass) : Vector3d::Zero();
  for (const auto& [b, t] : bodies) {
    const Matrix3d& r = t.linear();
    const Vector3d d = t * b.com - out.com;
    out.inertia += r * b.inertia * r.transpose() + b.mass * (d.squaredNorm() * Matrix3d::Identity() - d * d.transpose());
  }
  return out;
}

std::vector<std::pair<BodyInertia, Isometry3d>> rigid_group(const PhysicalGraph& phi, std::string_view body) {
  const std::size_t root = body_or_throw(phi, body);
  std::vector<std::vector<std::size_t>> children(phi.nodes.size());
  for (std::size_t e = 0; e < phi.edges.size(); ++e) children[phi.edges[e].parent].push_back(e);

  std::vector<std::pair<BodyInertia, Isometry3d>> out;
  std::vector<std::pair<std::size_t, Isometry3d>> stack{{root, Isometry3d::Identity()}};
  while (!stack.empty()) {
    auto [b, t] = stack.back();
    stack.pop_back();
    out.emplace_back(phi.nodes[b].inertia, t);
    for (auto e = children[b].rbegin(); e != children[b].rend(); ++e) {
      const auto& edge = phi.edges[*e];
      if (!edge.moving()) stack.emplace_back(edge.child, t * edge.origin.isometry());
    }
  }
  return out;
}

double chain_length(const PhysicalGraph& phi, std::string_view tag) {
  const Chain* chain = phi.find_chain(tag);
  if (!chain) throw Error(ErrorKind::NotFound, "kinematics", std::string(tag), "unknown chain '" + std::string(tag) + "'");
  // Extended precision keeps sums of catalog decimals at their nearest double.
  long double length = 0.0L;
  for (std::size_t k = 1; k < chain->bodies.size(); ++k) {
    const auto& edge = phi.edges[*phi.nodes[chain->bodies[k]].parent_edge];
    length += std::sqrt(edge.origin.xyz.cast<long double>().squaredNorm());
  }
  return static_cast<double>(length);
}

double halton(std::size_t index, unsigned base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

ReachEnvelope reach_envelope(const PhysicalGraph& phi, std::string_view tag, std::size_t samples, std::size_t offset) {
  const Chain* chain = phi.find_chain(tag);
  if (!chain) throw Error(ErrorKind::NotFound, "kinematics", std::string(tag), "unknown chain '" + std::string(tag) + "'");
  if (!chain->tcp) {
    throw Error(ErrorKind::Contract, "kinematics", std::string(tag), "chain '" + std::string(tag) + "' has no TCP");
  }
  if (samples == 0) throw Error(ErrorKind::Contract, "kinematics", std::string(tag), "sample count must be positive");

  const auto path = phi.path_to(*chain->tcp);
  const std::size_t start = *phi.nodes[chain->bodies.front()].parent_edge;
  std::vector<std::size_t> sampled;  // positions in `path`
  std::size_t start_at = 0;
  bool in_chain = false;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (path[k] == start) {
      in_chain = true;
      start_at = k + 1;
    }
    if (in_chain && phi.edges[path[k]].moving()) sampled.push_back(k);
  }
  if (sampled.size() > kPrimes.size()) {
    throw Error(ErrorKind::Contract, "kinematics", std::string(tag), "too many joints for the sampling sequence");
  }

  ReachEnvelope env;
  env.chain = std::string(tag);
  env.samples = samples;
  for (auto k : sampled) env.joints.push_back(phi.edges[path[k]].name);

  struct Partial {
    double min_h = std::numeric_limits<double>::infinity();
    double max_h = -std::numeric_limits<double>::infinity();
    double max_r = 0.0;
  };
  auto evaluate = [&](std::size_t begin, std::size_t end) {
    Partial p;
    std::vector<double> q(path.size(), 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t d = 0; d < sampled.size(); ++d) {
        const auto& lim = *phi.edges[path[sampled[d]]].limits;
        q[sampled[d]] = lim.lower + (lim.upper - lim.lower) * halton(offset + i + 1, kPrimes[d]);
      }
      Isometry3d t = Isometry3d::Identity();
      Isometry3d chain_start = Isometry3d::Identity();
      for (std::size_t k = 0; k < path.size(); ++k) {
        t = t * edge_transform(phi.edges[path[k]], q[k]);
        if (k + 1 == start_at) chain_start = t;
      }
      const double h = t.translation().z();
      p.min_h = std::min(p.min_h, h);
      p.max_h = std::max(p.max_h, h);
      p.max_r = std::max(p.max_r, (t.translation() - chain_start.translation()).norm());
    }
    return p;
  };

  // Min and max are exact, so any split yields the sequential result.
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  const std::size_t chunk = (samples + workers - 1) / workers;
  std::vector<std::future<Partial>> parts;
  for (std::size_t b = 0; b < samples; b += chunk) {
    parts.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, evaluate, b,
                               std::min(samples, b + chunk)));
  }
  Partial total;
  for (auto& f : parts) {
    const Partial p = f.get();
    total.min_h = std::min(total.min_h, p.min_h);
    total.max_h = std::max(total.max_h, p.max_h);
    total.max_r = std::max(total.max_r, p.max_r);
  }
  env.min_height = total.min_h;
  env.max_height = total.max_h;
  env.max_radius = total.max_r;
  return env;
}

}  // namespace modforge
