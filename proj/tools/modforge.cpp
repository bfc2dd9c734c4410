#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "modforge/error.hpp"
#include "modforge/kinematics.hpp"
#include "modforge/pipeline.hpp"
#include "modforge/service.hpp"
#include "modforge/urdf_reader.hpp"

using namespace modforge;
using nlohmann::json;

namespace {

void print_error(const Error& e) {
  std::cerr << "error [" << to_string(e.kind()) << "] stage=" << e.stage();
  if (!e.entity().empty()) std::cerr << " entity=" << e.entity();
  std::cerr << ": " << e.what() << "\n";
}

Customization load_customization(const std::string& homing_path, const std::string& addons_path) {
  Customization c;
  if (!homing_path.empty()) {
    json j = read_json_file(homing_path);
    if (!j.contains("homing")) j = json{{"homing", j}};
    c.homing = customization_from_json(j).homing;
  }
  if (!addons_path.empty()) {
    json j = read_json_file(addons_path);
    if (j.is_array()) j = json{{"addons", j}};
    c.addons = customization_from_json(j).addons;
  }
  return c;
}

int cmd_validate(const std::string& db_path, bool as_json) {
  const LoadReport report = load_database_report(db_path);
  json diags = json::array();
  for (const auto& d : report.diagnostics) {
    const char* sev = d.severity == Severity::Error ? "error" : "warning";
    if (as_json) {
      diags.push_back({{"severity", sev}, {"module", d.module}, {"field", d.field}, {"message", d.message}});
    } else {
      std::cout << sev << ": " << d.module << " " << d.field << ": " << d.message << "\n";
    }
  }
  const bool ok = !has_errors(report.diagnostics);
  if (as_json) {
    std::cout << json{{"ok", ok}, {"modules", report.database.size()}, {"version", report.database.version()},
                      {"diagnostics", diags}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << report.database.size() << " modules, catalog " << report.database.version() << ": "
              << (ok ? "ok" : "invalid") << "\n";
  }
  return ok ? 0 : 1;
}

int cmd_discover(const std::string& assembly_path, const std::string& db_path, const std::string& out_dir,
                 const std::string& homing, const std::string& addons, bool as_json) {
  const ModuleDatabase db = load_database(db_path);
  const AssemblySpec assembly = load_assembly(assembly_path);
  const Customization cust = load_customization(homing, addons);
  const auto start = std::chrono::steady_clock::now();
  const DiscoveryResult r = discover(assembly, db, cust);
  write_bundle(r.bundle, out_dir);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (as_json) {
    std::cout << json{{"out", out_dir},
                      {"timings", timings_to_json(r.timings)},
                      {"total_seconds", total},
                      {"slaves", r.network.slave_count()},
                      {"bodies", r.phi.nodes.size()},
                      {"joints", r.phi.edges.size()},
                      {"chains", chain_summary(r.phi)}}
                     .dump(2)
              << "\n";
  } else {
    for (const auto& t : r.timings) std::printf("%-12s %10.3f ms\n", t.stage.c_str(), t.seconds * 1e3);
    std::printf("%-12s %10.3f ms\n", "total", total * 1e3);
    std::cout << r.network.slave_count() << " slaves, " << r.phi.nodes.size() << " bodies, " << r.phi.edges.size()
              << " joints, " << r.phi.chains.size() << " chains -> " << out_dir << "\n";
  }
  return 0;
}

int cmd_fk(const std::string& bundle_dir, const std::vector<std::string>& q_text, std::string frame, bool as_json) {
  const Bundle b = read_bundle(bundle_dir);
  const urdf::Model model = urdf::parse(b.urdf);
  const auto moving = model.moving_joints();
  std::map<std::string, double> q;
  for (const auto& name : moving) q[name] = 0.0;
  bool named = false;
  for (const auto& t : q_text) named = named || t.find('=') != std::string::npos;
  if (!named && !q_text.empty() && q_text.size() != moving.size()) {
    throw Error(ErrorKind::Contract, "fk", "q",
                "expected " + std::to_string(moving.size()) + " joint values, got " + std::to_string(q_text.size()));
  }
  for (std::size_t i = 0; i < q_text.size(); ++i) {
    std::string name = named ? q_text[i].substr(0, q_text[i].find('=')) : moving[i];
    std::string value = named ? q_text[i].substr(q_text[i].find('=') + 1) : q_text[i];
    if (named && !q.count(name)) throw Error(ErrorKind::Contract, "fk", name, "unknown joint '" + name + "'");
    try {
      q[name] = std::stod(value);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Contract, "fk", name, "joint value '" + value + "' is not a number");
    }
  }
  if (frame.empty()) frame = model.root();
  const Eigen::Isometry3d pose = urdf::forward_kinematics(model, q, frame);
  const Origin o = Origin::from_isometry(pose);
  if (as_json) {
    std::cout << json{{"frame", frame},
                      {"translation", {o.xyz.x(), o.xyz.y(), o.xyz.z()}},
                      {"rpy", {o.rpy.x(), o.rpy.y(), o.rpy.z()}}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << frame << "\n  xyz " << format_double(o.xyz.x()) << " " << format_double(o.xyz.y()) << " "
              << format_double(o.xyz.z()) << "\n  rpy " << format_double(o.rpy.x()) << " "
              << format_double(o.rpy.y()) << " " << format_double(o.rpy.z()) << "\n";
  }
  return 0;
}

int cmd_reach(const std::string& assembly_path, const std::string& db_path, const std::string& chain,
              std::size_t samples, bool as_json) {
  const ModuleDatabase db = load_database(db_path);
  const DiscoveryResult r = discover(load_assembly(assembly_path), db);
  const ReachEnvelope env = reach_envelope(r.phi, chain, samples);
  const double length = chain_length(r.phi, chain);
  if (as_json) {
    std::cout << json{{"chain", env.chain},
                      {"min_height", env.min_height},
                      {"max_height", env.max_height},
                      {"max_radius", env.max_radius},
                      {"samples", env.samples},
                      {"joints", env.joints},
                      {"length", length}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "chain " << env.chain << " (" << env.joints.size() << " joints, " << env.samples << " samples)\n"
              << "  length     " << format_double(length) << " m\n"
              << "  min height " << format_double(env.min_height) << " m\n"
              << "  max height " << format_double(env.max_height) << " m\n"
              << "  max radius " << format_double(env.max_radius) << " m\n";
  }
  return 0;
}

int cmd_serve(const std::string& db_path, int port, const std::string& static_dir, const std::string& snapshots) {
  ServiceOptions opts;
  if (!static_dir.empty()) opts.static_dir = static_dir;
  if (!snapshots.empty()) opts.snapshot_dir = snapshots;
  Service service(load_database(db_path), opts);
  std::cerr << "serving /v1 on 127.0.0.1:" << port << "\n";
  if (!service.listen("127.0.0.1", port)) {
    std::cerr << "error: cannot listen on port " << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular robot model compiler"};
  app.require_subcommand(1);
  std::string db_path = default_db_path().string();
  bool as_json = false;
  app.add_option("--db", db_path, "Module catalog file or directory (default: $MODFORGE_DB or the shipped catalog)");
  app.add_flag("--json", as_json, "Machine-readable output");

  auto* validate = app.add_subcommand("validate", "Load and check the module catalog");

  std::string assembly, out_dir = "bundle", homing, addons;
  auto* disc = app.add_subcommand("discover", "Simulate the ring, reconstruct the robot and write a bundle");
  disc->add_option("assembly", assembly, "Assembly JSON or YAML")->required();
  disc->add_option("--out", out_dir, "Bundle directory");
  disc->add_option("--homing", homing, "Homing JSON {joint: value}");
  disc->add_option("--addons", addons, "Add-ons JSON");

  std::string bundle_dir, frame;
  std::vector<std::string> q;
  auto* fkc = app.add_subcommand("fk", "Forward kinematics from a bundle's URDF");
  fkc->add_option("bundle", bundle_dir, "Bundle directory")->required();
  fkc->add_option("--frame", frame, "Target link (default: root)");
  fkc->add_option("--q", q, "Joint values in URDF order, or name=value pairs")->delimiter(',');

  std::string chain = "A";
  std::size_t samples = 65536;
  auto* reach = app.add_subcommand("reach", "Reach envelope of a chain");
  reach->add_option("assembly", assembly, "Assembly JSON or YAML")->required();
  reach->add_option("--chain", chain, "Chain tag");
  reach->add_option("--samples", samples, "Halton sample count");

  int port = 8080;
  std::string static_dir, snapshots;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--static", static_dir, "Composer UI asset directory");
  serve->add_option("--snapshots", snapshots, "Session snapshot directory");

  for (auto* sub : {validate, disc, fkc, reach, serve}) {
    sub->add_option("--db", db_path, "Module catalog file or directory");
    sub->add_flag("--json", as_json, "Machine-readable output");
  }

  CLI11_PARSE(app, argc, argv);
  try {
    if (*validate) return cmd_validate(db_path, as_json);
    if (*disc) return cmd_discover(assembly, db_path, out_dir, homing, addons, as_json);
    if (*fkc) return cmd_fk(bundle_dir, q, frame, as_json);
    if (*reach) return cmd_reach(assembly, db_path, chain, samples, as_json);
    if (*serve) return cmd_serve(db_path, port, static_dir, snapshots);
  } catch (const Error& e) {
    print_error(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
