// One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include "modforge/error.hpp"
#include "modforge/kinematics.hpp"
#include "modforge/pipeline.hpp"
#include "modforge/urdf_reader.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace modforge;
using modforge::fixtures::catalog;
using modforge::fixtures::data_assembly;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome round_trip() {
  std::mt19937_64 rng(20240601);
  constexpr int kAssemblies = 1000;
  int failures = 0;
  std::size_t slaves = 0;
  for (int i = 0; i < kAssemblies; ++i) {
    const AssemblySpec a = fixtures::random_assembly(rng, 2, 30);
    const auto truth = fixtures::expected_ring(a, catalog());
    slaves += truth.size();
    try {
      const auto records = recognize_topology(build_network(a, catalog()));
      bool ok = records.size() == truth.size();
      for (std::size_t k = 0; ok && k < records.size(); ++k) {
        ok = records[k].parent_position == truth[k].parent_position && records[k].parent_port == truth[k].parent_port &&
             records[k].module_identifier == truth[k].module_id;
      }
      failures += !ok;
    } catch (const Error&) {
      ++failures;
    }
  }
  return {failures == 0, std::to_string(kAssemblies) + " assemblies, " + std::to_string(slaves) + " ESCs, " +
                             std::to_string(failures) + " failures"};
}

Outcome ring_examples() {
  std::ostringstream d;
  bool pass = true;

  const AssemblySpec one = fixtures::two_slave_example(false);
  const EcatNetwork n1 = build_network(one, catalog());
  const bool order1 = n1.slave_count() == 2 && n1.at(1).instance_id == "A" && n1.at(2).instance_id == "B";
  const auto r1 = recognize_topology(n1);
  const bool port1 = r1.size() == 2 && r1[1].parent_position == 1 && r1[1].parent_port == 2;
  pass = pass && order1 && port1;
  d << "plain: ring [" << n1.at(1).instance_id << "," << n1.at(2).instance_id << "] B.parent_port="
    << (r1.size() == 2 && r1[1].parent_port ? std::to_string(*r1[1].parent_port) : "-");

  const AssemblySpec two = fixtures::two_slave_example(true);
  const EcatNetwork n2 = build_network(two, catalog());
  const bool order2 = n2.slave_count() == 2 && n2.at(1).instance_id == "B" && n2.at(2).instance_id == "A";
  d << "; flipped: ring [" << n2.at(1).instance_id << "," << n2.at(2).instance_id << "]";
  // Truth: A is the root and B hangs from A's port 2.
  bool differs = true;
  try {
    const auto r2 = recognize_topology(n2);
    differs = !(r2.size() == 2 && r2[0].module_identifier == "torso_hub" && r2[1].parent_position == 1 &&
                r2[1].parent_port == 2);
    d << " recognized B->A@" << (r2[1].parent_port ? std::to_string(*r2[1].parent_port) : "-");
  } catch (const Error& e) {
    d << " recognition rejected (" << to_string(e.kind()) << ")";
  }
  d << (differs ? " != truth" : " == truth");
  pass = pass && order2 && differs;
  return {pass, d.str()};
}

Outcome module_transform_oracle() {
  std::mt19937_64 rng(7);
  std::vector<const ModuleDescription*> modules;
  for (const auto& [id, d] : catalog().entries()) modules.push_back(&d);
  std::uniform_int_distribution<std::size_t> pick(0, modules.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kDraws = 2000;
  double worst = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const ModuleDescription& d = *modules[pick(rng)];
    const ModuleLayout layout = layout_of(d);
    std::vector<double> q;
    for (const auto& j : d.joints) q.push_back(j.actuator.lower + (j.actuator.upper - j.actuator.lower) * unit(rng));
    Matrix4d expected = Matrix4d::Identity();
    for (const auto& s : layout.stages) {
      expected = expected * oracle::origin_matrix(d.frames.at(s.frame)) *
                 oracle::series_exp(oracle::twist_matrix(d.joints[s.joint].axis.kind, q[s.joint]));
    }
    std::optional<std::string> connector;
    if (d.module_type == ModuleType::EndEffector) {
      if (layout.terminal) expected = expected * oracle::origin_matrix(d.frames.at(*layout.terminal));
    } else {
      auto it = layout.outputs.begin();
      std::advance(it, static_cast<long>(rng() % layout.outputs.size()));
      connector = it->first;
      expected = expected * oracle::origin_matrix(d.frames.at(it->second));
    }
    const Isometry3d got = connector ? module_transform(d, q, *connector) : module_transform(d, q);
    worst = std::max(worst, (got.matrix() - expected).cwiseAbs().maxCoeff());

    // The bare exponential over the full revolute range and a prismatic stroke.
    const double theta = -M_PI + 2 * M_PI * unit(rng);
    const double stroke = -1.0 + 2.0 * unit(rng);
    worst = std::max(worst, (twist_exp(TwistAxis{JointKind::Revolute}, theta).matrix() -
                             oracle::series_exp(oracle::twist_matrix(JointKind::Revolute, theta)))
                                .cwiseAbs()
                                .maxCoeff());
    worst = std::max(worst, (twist_exp(TwistAxis{JointKind::Prismatic}, stroke).matrix() -
                             oracle::series_exp(oracle::twist_matrix(JointKind::Prismatic, stroke)))
                                .cwiseAbs()
                                .maxCoeff());
  }
  return {worst <= 1e-12, std::to_string(kDraws) + " draws, max entry error " + sci(worst)};
}

Outcome parse_back() {
  DiscoverOptions opts;
  opts.generated_at = "2000-01-01T00:00:00Z";
  const DiscoveryResult r = discover(data_assembly("mobile_manipulator.json"), catalog(), {}, opts);
  const urdf::Model model = urdf::parse(r.bundle.urdf);
  std::mt19937_64 rng(99);
  constexpr int kSamples = 200;
  double worst_t = 0.0;
  double worst_r = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const JointState q = fixtures::random_q(r.phi, rng, 0.0);
    const std::map<std::string, double> qm(q.begin(), q.end());
    for (const auto& body : r.phi.nodes) {
      const Isometry3d ours = fk(r.phi, q, body.name).pose;
      const Eigen::Isometry3d theirs = urdf::forward_kinematics(model, qm, body.name);
      worst_t = std::max(worst_t, (ours.translation() - theirs.translation()).norm());
      worst_r = std::max(worst_r, (ours.linear() - theirs.linear()).norm());
    }
  }
  return {worst_t <= 1e-9 && worst_r <= 1e-9, std::to_string(kSamples) + " q x " + std::to_string(r.phi.nodes.size()) +
                                                  " links, max translation " + sci(worst_t) + " m, rotation " +
                                                  sci(worst_r)};
}

Outcome jacobian_fd() {
  std::mt19937_64 rng(5);
  int cases = 0;
  double worst = 0.0;
  for (const char* name : {"morphology_a.json", "morphology_b.json", "morphology_c.json", "collab_arm.json",
                           "mobile_manipulator.json", "dual_arm_torso.json"}) {
    const PhysicalGraph phi = fixtures::model_of(data_assembly(name));
    for (const auto& c : phi.chains) {
      const std::size_t tip = c.tcp ? *c.tcp : c.bodies.back();
      const std::string target = phi.nodes[tip].name;
      for (int k = 0; k < 20; ++k) {
        const JointState q = fixtures::random_q(phi, rng);
        const Jacobian j = jacobian(phi, q, target);
        if (j.joints.empty()) continue;
        const auto fd = oracle::fd_jacobian(phi, q, j.joints, target);
        const double scale = std::max(j.matrix.norm(), 1e-12);
        worst = std::max(worst, (j.matrix - fd).norm() / scale);
        ++cases;
      }
    }
  }
  return {cases >= 100 && worst <= 1e-5, std::to_string(cases) + " (chain, q) cases, max relative error " + sci(worst)};
}

Outcome catalog_facts() {
  std::ostringstream d;
  bool pass = true;
  const DiscoveryResult r = discover(data_assembly("mobile_manipulator.json"), catalog());
  const urdf::Model model = urdf::parse(r.bundle.urdf);
  struct Want {
    const char* module;
    double effort;
    double velocity;
  };
  const Want wants[] = {{"elbow_a", 460.0, 2.14}, {"elbow_b", 314.0, 2.85}, {"steering_wheel", 24.0, 13.7}};
  for (const auto& w : wants) {
    int seen = 0;
    bool exact = true;
    for (const auto& m : r.phi.modules) {
      if (m.module_identifier != w.module) continue;
      std::vector<std::string> joints;
      for (const auto& e : r.phi.edges) {
        if (e.moving() && r.phi.nodes[e.child].instance_id == m.instance_id) joints.push_back(e.name);
      }
      // The wheel drive is the module's last joint; a steering stage may precede it.
      if (joints.empty()) continue;
      const urdf::Joint* j = model.joint(joints.back());
      ++seen;
      exact = exact && j && j->limit && j->limit->effort == w.effort && j->limit->velocity == w.velocity;
    }
    pass = pass && seen > 0 && exact;
    d << w.module << " " << format_double(w.effort) << "/" << format_double(w.velocity) << " x" << seen
      << (exact ? " exact" : " MISMATCH") << "; ";
  }
  auto length = [](const char* name) { return chain_length(fixtures::model_of(data_assembly(name)), "A"); };
  const double a = length("morphology_a.json");
  const double b = length("morphology_b.json");
  const double c = length("morphology_c.json");
  const bool deltas = std::abs((b - a) - 0.4) <= 1e-12 && std::abs((c - b) - 0.6) <= 1e-12;
  pass = pass && deltas;
  char buf[96];
  std::snprintf(buf, sizeof buf, "B-A %.3f m, C-B %.3f m (|err| %s, %s)", b - a, c - b, sci(std::abs(b - a - 0.4)).c_str(),
                sci(std::abs(c - b - 0.6)).c_str());
  d << buf;
  return {pass, d.str()};
}

Outcome classification() {
  const DiscoveryResult r = discover(data_assembly("mobile_manipulator.json"), catalog());
  auto count = [&](const char* pattern) {
    const std::regex re(pattern);
    return std::distance(std::sregex_iterator(r.bundle.srdf.begin(), r.bundle.srdf.end(), re), std::sregex_iterator());
  };
  const auto legs = count(R"(<group name="leg_[A-Z]+">)");
  const auto arms = count(R"(<group name="arm_[A-Z]+">)");
  const auto groups = count(R"(<group name=")");
  return {legs == 4 && arms == 1 && groups == 5,
          std::to_string(legs) + " leg groups, " + std::to_string(arms) + " arm group(s), " + std::to_string(groups) +
              " groups total"};
}

struct CliRun {
  int code = -1;
  double seconds = 0.0;
};

CliRun run_discover(const fs::path& assembly, const fs::path& out) {
  const std::string cmd = "SOURCE_DATE_EPOCH=946684800 \"" MODFORGE_CLI_PATH "\" discover \"" + assembly.string() +
                          "\" --out \"" + out.string() + "\" > /dev/null 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Outcome performance() {
  const fs::path tmp = fs::temp_directory_path() / ("modforge_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(tmp);
  const fs::path dir = fs::path(MODFORGE_DATA_DIR) / "assemblies";
  std::ostringstream d;
  bool pass = true;
  struct Case {
    const char* file;
    std::size_t modules;
    double budget;
  };
  for (const Case& c : {Case{"morphology_b.json", 9, 1.0}, Case{"long_30.json", 30, 2.0}}) {
    const std::size_t placed = data_assembly(c.file).placements.size();
    const CliRun first = run_discover(dir / c.file, tmp / (std::string(c.file) + ".1"));
    const CliRun second = run_discover(dir / c.file, tmp / (std::string(c.file) + ".2"));
    bool same = true;
    for (const char* f : {"robot.urdf", "robot.srdf", "homing.json", "manifest.json"}) {
      same = same && slurp(tmp / (std::string(c.file) + ".1") / f) == slurp(tmp / (std::string(c.file) + ".2") / f);
    }
    const double worst = std::max(first.seconds, second.seconds);
    const bool ok = first.code == 0 && second.code == 0 && placed == c.modules && worst < c.budget && same;
    pass = pass && ok;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu modules %.3f s (< %.0f s)%s; ", placed, worst, c.budget,
                  same ? " byte-identical" : " DIFFERENT");
    d << buf;
  }
  std::error_code ec;
  fs::remove_all(tmp, ec);
  return {pass, d.str()};
}

Outcome inertia() {
  int groups = 0;
  double worst = 0.0;
  bool exact = true;
  for (const char* name : {"mobile_manipulator.json", "dual_arm_torso.json", "collab_arm.json", "morphology_c.json"}) {
    const PhysicalGraph phi = fixtures::model_of(data_assembly(name));
    for (const auto& body : phi.nodes) {
      if (groups == 10) break;
      if (body.parent_edge && !phi.edges[*body.parent_edge].moving()) continue;  // start at rigid-group roots
      const auto group = rigid_group(phi, body.name);
      if (group.size() < 2) continue;
      const BodyInertia got = aggregate_inertia(group);
      double mass = 0.0;
      Vector3d moment = Vector3d::Zero();
      std::vector<oracle::PointMass> cloud;
      for (const auto& [b, t] : group) {
        mass += b.mass;
        moment += b.mass * (t * b.com);
        const auto pts = oracle::discretize(b, t);
        cloud.insert(cloud.end(), pts.begin(), pts.end());
      }
      exact = exact && got.mass == mass && got.com == moment / mass;
      const BodyInertia ref = oracle::cloud_inertia(cloud);
      worst = std::max(worst, (got.inertia - ref.inertia).norm() / ref.inertia.norm());
      ++groups;
    }
  }
  return {groups == 10 && exact && worst <= 1e-6, std::to_string(groups) + " composite bodies, mass/CoM " +
                                                        (exact ? "exact" : "MISMATCH") + ", max inertia relative error " +
                                                        sci(worst)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"topology round-trip", round_trip},
      {"two-slave ring, plain and flipped root", ring_examples},
      {"module transform oracle", module_transform_oracle},
      {"URDF parse-back", parse_back},
      {"Jacobian vs finite differences", jacobian_fd},
      {"catalog facts and length deltas", catalog_facts},
      {"semantic classification", classification},
      {"performance and determinism", performance},
      {"inertia aggregation", inertia},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
