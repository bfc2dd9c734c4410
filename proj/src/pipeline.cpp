#include "modforge/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "modforge/error.hpp"
#include "modforge/kinematics.hpp"

namespace modforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFiles[] = {"robot.urdf", "robot.srdf", "homing.json", "manifest.json"};

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}

  template <typename F>
  auto run(const std::string& stage, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto done = [&] {
      out_.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    };
    try {
      auto result = f();
      done();
      return result;
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Model, stage, "", e.what());
    }
  }

 private:
  std::vector<StageTiming>& out_;
};

/// ESC-less placements never show up on the ring; they are re-attached to
/// the model as catalog add-ons on the connector they were placed on.
Customization network_addons(const AssemblySpec& assembly, const ModuleDatabase& db, const EcatNetwork& net,
                             const PhysicalGraph& phi) {
  Customization out;
  std::map<std::string, std::string> body_of;  // assembly instance -> body name carrying its outputs
  for (const auto& m : phi.modules) {
    if (m.slave_positions.empty()) continue;
    body_of[net.at(m.slave_positions.front()).instance_id] = phi.nodes[m.bodies.front()].name;
  }
  for (const auto& p : assembly.placements) {
    if (db.at(p.module_id).esc_count != 0 || !p.parent_instance) continue;
    auto parent = body_of.find(*p.parent_instance);
    if (parent == body_of.end()) continue;
    Addon a;
    a.name = p.instance_id;
    a.target = parent->second;
    a.connector = p.parent_connector;
    a.module_id = p.module_id;
    out.addons.push_back(std::move(a));
    body_of[p.instance_id] = p.instance_id;
  }
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

double DiscoveryResult::total_seconds() const {
  double s = 0.0;
  for (const auto& t : timings) s += t.seconds;
  return s;
}

std::string assembly_hash(const AssemblySpec& assembly) {
  const std::string text = assembly_to_json(assembly).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string generation_timestamp() {
  std::time_t now = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      now = static_cast<std::time_t>(std::stoll(epoch));
    } catch (const std::exception&) {
    }
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

DiscoveryResult discover(const AssemblySpec& assembly, const ModuleDatabase& db, const Customization& cust,
                         const DiscoverOptions& options) {
  DiscoveryResult r;
  StageClock clock(r.timings);
  r.network = clock.run("ecat_sim", [&] { return build_network(assembly, db); });
  r.warnings = r.network.warnings;
  r.chi = clock.run("topo_recon", [&] { return build_chi(recognize_topology(r.network)); });
  PhysicalGraph phi = clock.run("expand", [&] { return expand(r.chi, db); });
  phi = clock.run("name", [&] { return name_model(std::move(phi)); });
  phi = clock.run("customize", [&] {
    const Customization auto_addons = network_addons(assembly, db, r.network, phi);
    PhysicalGraph out = apply_customization(std::move(phi), auto_addons, db);
    return apply_customization(std::move(out), cust, db);
  });
  r.bundle = clock.run("emit", [&] {
    Bundle b;
    b.urdf = emit_urdf(phi, options.robot_name);
    b.srdf = emit_srdf(phi, options.robot_name);
    b.homing = dump(json(phi.homing));
    json manifest{{"robot_name", options.robot_name},
                  {"catalog_version", phi.catalog_version},
                  {"assembly_hash", assembly_hash(assembly)},
                  {"generated_at", options.generated_at.value_or(generation_timestamp())},
                  {"files", json::array({"robot.urdf", "robot.srdf", "homing.json"})}};
    b.manifest = dump(manifest);
    return b;
  });
  r.phi = std::move(phi);
  return r;
}

void write_bundle(const Bundle& bundle, const fs::path& out_dir) {
  std::random_device rd;
  const fs::path parent = out_dir.has_parent_path() ? out_dir.parent_path() : fs::path(".");
  const fs::path staging = parent / (".modforge-staging-" + std::to_string(rd()));
  try {
    fs::create_directories(staging);
    const std::string* contents[] = {&bundle.urdf, &bundle.srdf, &bundle.homing, &bundle.manifest};
    for (std::size_t i = 0; i < 4; ++i) {
      std::ofstream f(staging / kFiles[i], std::ios::binary);
      f << *contents[i];
      if (!f) throw Error(ErrorKind::Io, "bundle", kFiles[i], "cannot write " + (staging / kFiles[i]).string());
    }
    fs::create_directories(out_dir);
    for (const char* name : kFiles) fs::rename(staging / name, out_dir / name);
    fs::remove_all(staging);
  } catch (const fs::filesystem_error& e) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw Error(ErrorKind::Io, "bundle", out_dir.string(), e.what());
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

Bundle read_bundle(const fs::path& dir) {
  Bundle b;
  std::string* contents[] = {&b.urdf, &b.srdf, &b.homing, &b.manifest};
  for (std::size_t i = 0; i < 4; ++i) {
    std::ifstream f(dir / kFiles[i], std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "bundle", (dir / kFiles[i]).string(), "cannot read " + (dir / kFiles[i]).string());
    std::ostringstream s;
    s << f.rdbuf();
    *contents[i] = s.str();
  }
  return b;
}

json chain_summary(const PhysicalGraph& phi) {
  json out = json::array();
  for (const auto& c : phi.chains) {
    json j{{"tag", c.tag},
           {"semantics", to_string(c.semantics)},
           {"end_effector", to_string(c.end_effector)},
           {"base", phi.nodes[c.base].name},
           {"bodies", c.bodies.size()},
           {"length", chain_length(phi, c.tag)}};
    j["tip"] = c.bodies.empty() ? json(nullptr) : json(phi.nodes[c.bodies.back()].name);
    j["tcp"] = c.tcp ? json(phi.nodes[*c.tcp].name) : json(nullptr);
    out.push_back(std::move(j));
  }
  return out;
}

json timings_to_json(const std::vector<StageTiming>& timings) {
  json out = json::array();
  for (const auto& t : timings) out.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  return out;
}

json read_json_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "load", path.string(), "cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "load", path.string(),
                path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

fs::path default_db_path() {
  if (const char* env = std::getenv("MODFORGE_DB"); env && *env) return env;
  return default_catalog_path();
}

}  // namespace modforge
