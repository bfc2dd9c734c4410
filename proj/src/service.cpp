#include "modforge/service.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <shared_mutex>
#include <sstream>

// The default backlog of 5 drops SYNs under a burst of clients; each drop costs a 1 s retransmit.
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>

#include "modforge/error.hpp"
#include "modforge/kinematics.hpp"
#include "modforge/pipeline.hpp"

namespace modforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Session {
  std::string id;
  AssemblySpec assembly;
  Customization customization;
  std::optional<PhysicalGraph> last_model;
  std::optional<Bundle> last_bundle;
  std::size_t next_instance = 0;
  std::mutex mutex;
};

int status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Contract:
      return 400;
    case ErrorKind::NotFound:
      return 404;
    case ErrorKind::Conflict:
      return 409;
    case ErrorKind::Io:
      return 500;
    default:
      return 422;
  }
}

json error_body(std::string_view kind, const std::string& stage, const std::string& entity, const std::string& msg) {
  return {{"error", {{"kind", kind}, {"stage", stage}, {"entity", entity}, {"message", msg}}}};
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json session_json(const Session& s) {
  return {{"id", s.id},
          {"assembly", assembly_to_json(s.assembly)},
          {"customization", customization_to_json(s.customization)},
          {"has_model", s.last_model.has_value()}};
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "request", "", std::string("malformed JSON body: ") + e.what());
  }
}

/// `J0A:0.1,J1A:0.2` by name, or `0.1,0.2` in moving-joint order.
JointState parse_q(const PhysicalGraph& phi, const std::string& text) {
  JointState q;
  const auto moving = phi.moving_edges();
  for (auto e : moving) q[phi.edges[e].name] = 0.0;
  if (text.empty()) return q;
  std::vector<std::string> items;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) items.push_back(item);
  const bool named = text.find(':') != std::string::npos;
  if (!named && items.size() != moving.size()) {
    throw Error(ErrorKind::Contract, "kinematics", "q",
                "expected " + std::to_string(moving.size()) + " joint values, got " + std::to_string(items.size()));
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::string name;
    std::string value = items[i];
    if (named) {
      const auto colon = items[i].find(':');
      if (colon == std::string::npos) throw Error(ErrorKind::Contract, "kinematics", items[i], "expected name:value");
      name = items[i].substr(0, colon);
      value = items[i].substr(colon + 1);
    } else {
      name = phi.edges[moving[i]].name;
    }
    try {
      q[name] = std::stod(value);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Contract, "kinematics", name, "joint value '" + value + "' is not a number");
    }
  }
  return q;
}

}  // namespace

struct Service::Impl {
  ModuleDatabase db;
  ServiceOptions options;
  httplib::Server server;
  std::shared_mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::mutex rng_mutex;
  std::mt19937_64 rng{std::random_device{}()};

  Impl(ModuleDatabase d, ServiceOptions o) : db(std::move(d)), options(std::move(o)) {
    const std::size_t threads = options.threads;
    server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    load_snapshots();
    routes();
  }

  std::string new_id() {
    std::lock_guard lock(rng_mutex);
    std::ostringstream s;
    s << std::hex << rng() << rng();
    return s.str();
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::shared_lock lock(sessions_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorKind::NotFound, "session", id, "unknown session '" + id + "'");
    return it->second;
  }

  void snapshot(const Session& s) {
    if (!options.snapshot_dir) return;
    fs::create_directories(*options.snapshot_dir);
    const fs::path file = *options.snapshot_dir / (s.id + ".json");
    const fs::path tmp = *options.snapshot_dir / (s.id + ".json.tmp");
    {
      std::ofstream f(tmp);
      json j = session_json(s);
      j["next_instance"] = s.next_instance;
      f << j.dump(2);
    }
    fs::rename(tmp, file);
  }

  void load_snapshots() {
    if (!options.snapshot_dir || !fs::is_directory(*options.snapshot_dir)) return;
    for (const auto& entry : fs::directory_iterator(*options.snapshot_dir)) {
      if (entry.path().extension() != ".json") continue;
      const json j = read_json_file(entry.path());
      auto s = std::make_shared<Session>();
      s->id = j.at("id").get<std::string>();
      if (!j.at("assembly").at("placements").empty()) s->assembly = assembly_from_json(j.at("assembly"));
      s->customization = customization_from_json(j.at("customization"));
      s->next_instance = j.value("next_instance", std::size_t{0});
      sessions[s->id] = s;
    }
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        reply(res, status_of(e.kind()), error_body(to_string(e.kind()), e.stage(), e.entity(), e.what()));
      } catch (const json::exception& e) {
        reply(res, 400, error_body("parse", "request", "", e.what()));
      } catch (const std::exception& e) {
        reply(res, 500, error_body("internal", "service", "", e.what()));
      }
    };
  }

  /// Runs `f` on the session named in the path with the session locked.
  template <typename F>
  Handler with_session(F f) {
    return guarded([this, f](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      std::lock_guard lock(s->mutex);
      f(*s, req, res);
    });
  }

  void routes() {
    const std::string sid = R"(/v1/sessions/([0-9a-f]+))";

    server.Get("/v1/catalog", guarded([this](const httplib::Request&, httplib::Response& res) {
                 reply(res, 200, database_to_json(db));
               }));

    server.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  auto s = std::make_shared<Session>();
                  s->id = new_id();
                  if (body.contains("assembly")) {
                    s->assembly = assembly_from_json(body.at("assembly"));
                    validate_assembly(s->assembly, db);
                    s->next_instance = s->assembly.placements.size();
                  }
                  if (body.contains("customization")) s->customization = customization_from_json(body.at("customization"));
                  {
                    std::unique_lock lock(sessions_mutex);
                    sessions[s->id] = s;
                  }
                  snapshot(*s);
                  reply(res, 201, session_json(*s));
                }));

    server.Get(sid, with_session([](Session& s, const httplib::Request&, httplib::Response& res) {
                 reply(res, 200, session_json(s));
               }));

    server.Delete(sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
                    const std::string id = req.matches[1];
                    {
                      std::unique_lock lock(sessions_mutex);
                      if (!sessions.erase(id)) throw Error(ErrorKind::NotFound, "session", id, "unknown session '" + id + "'");
                    }
                    if (options.snapshot_dir) {
                      std::error_code ec;
                      fs::remove(*options.snapshot_dir / (id + ".json"), ec);
                    }
                    reply(res, 200, {{"deleted", id}});
                  }));

    server.Post(sid + "/attach", with_session([this](Session& s, const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  Placement p;
                  p.module_id = body.at("module_id").get<std::string>();
                  p.instance_id = body.value("instance_id", std::string{});
                  if (p.instance_id.empty()) p.instance_id = p.module_id + "_" + std::to_string(s.next_instance);
                  if (body.contains("parent_instance") && !body.at("parent_instance").is_null()) {
                    p.parent_instance = body.at("parent_instance").get<std::string>();
                    p.parent_connector = body.at("parent_connector").get<std::string>();
                  }
                  p.flipped = body.value("flipped", false);
                  AssemblySpec draft = s.assembly;
                  if (draft.placements.empty()) draft.root = p.instance_id;
                  draft.placements.push_back(p);
                  validate_assembly(draft, db);
                  s.assembly = std::move(draft);
                  ++s.next_instance;
                  s.last_model.reset();
                  s.last_bundle.reset();
                  snapshot(s);
                  reply(res, 200, {{"instance_id", p.instance_id}, {"assembly", assembly_to_json(s.assembly)}});
                }));

    server.Post(sid + "/detach", with_session([this](Session& s, const httplib::Request& req, httplib::Response& res) {
                  const std::string target = parse_body(req).at("instance_id").get<std::string>();
                  if (!s.assembly.find(target)) {
                    throw Error(ErrorKind::NotFound, "session", target, "unknown instance '" + target + "'");
                  }
                  std::set<std::string> removed{target};
                  AssemblySpec draft;
                  draft.root = s.assembly.root;
                  for (const auto& p : s.assembly.placements) {
                    if (p.instance_id == target || (p.parent_instance && removed.count(*p.parent_instance))) {
                      removed.insert(p.instance_id);
                    } else {
                      draft.placements.push_back(p);
                    }
                  }
                  if (draft.placements.empty()) draft.root.clear();
                  s.assembly = std::move(draft);
                  s.last_model.reset();
                  s.last_bundle.reset();
                  snapshot(s);
                  reply(res, 200, {{"removed", removed}, {"assembly", assembly_to_json(s.assembly)}});
                }));

    server.Put(sid + "/customization",
               with_session([this](Session& s, const httplib::Request& req, httplib::Response& res) {
                 s.customization = customization_from_json(parse_body(req));
                 s.last_model.reset();
                 s.last_bundle.reset();
                 snapshot(s);
                 reply(res, 200, session_json(s));
               }));

    server.Post(sid + "/discover", with_session([this](Session& s, const httplib::Request&, httplib::Response& res) {
                  DiscoverOptions opts;
                  opts.generated_at = options.generated_at;
                  DiscoveryResult r = discover(s.assembly, db, s.customization, opts);
                  json stats{{"timings", timings_to_json(r.timings)},
                             {"total_seconds", r.total_seconds()},
                             {"slaves", r.network.slave_count()},
                             {"bodies", r.phi.nodes.size()},
                             {"joints", r.phi.edges.size()},
                             {"moving_joints", r.phi.moving_edges().size()},
                             {"chains", chain_summary(r.phi)},
                             {"warnings", r.warnings}};
                  reply(res, 200,
                        {{"urdf", r.bundle.urdf},
                         {"srdf", r.bundle.srdf},
                         {"homing", json::parse(r.bundle.homing)},
                         {"manifest", json::parse(r.bundle.manifest)},
                         {"stats", std::move(stats)}});
                  s.last_model = std::move(r.phi);
                  s.last_bundle = std::move(r.bundle);
                }));

    server.Get(sid + "/fk", with_session([](Session& s, const httplib::Request& req, httplib::Response& res) {
                 if (!s.last_model) throw Error(ErrorKind::Contract, "session", s.id, "no model; run discover first");
                 const std::string frame = req.has_param("frame") ? req.get_param_value("frame") : "base_link";
                 const JointState q = parse_q(*s.last_model, req.get_param_value("q"));
                 const FkResult r = fk(*s.last_model, q, frame);
                 const Origin o = Origin::from_isometry(r.pose);
                 json matrix = json::array();
                 for (int i = 0; i < 4; ++i) {
                   json row = json::array();
                   for (int j = 0; j < 4; ++j) row.push_back(r.pose.matrix()(i, j));
                   matrix.push_back(row);
                 }
                 reply(res, 200,
                       {{"frame", r.frame},
                        {"translation", {o.xyz.x(), o.xyz.y(), o.xyz.z()}},
                        {"rpy", {o.rpy.x(), o.rpy.y(), o.rpy.z()}},
                        {"matrix", matrix}});
               }));

    server.Get(sid + "/reach", with_session([](Session& s, const httplib::Request& req, httplib::Response& res) {
                 if (!s.last_model) throw Error(ErrorKind::Contract, "session", s.id, "no model; run discover first");
                 const std::string chain = req.has_param("chain") ? req.get_param_value("chain") : "A";
                 std::size_t samples = 65536;
                 if (req.has_param("samples")) {
                   try {
                     samples = std::stoul(req.get_param_value("samples"));
                   } catch (const std::exception&) {
                     throw Error(ErrorKind::Contract, "kinematics", "samples", "samples must be a positive integer");
                   }
                 }
                 const ReachEnvelope env = reach_envelope(*s.last_model, chain, samples);
                 reply(res, 200,
                       {{"chain", env.chain},
                        {"min_height", env.min_height},
                        {"max_height", env.max_height},
                        {"max_radius", env.max_radius},
                        {"samples", env.samples},
                        {"joints", env.joints},
                        {"length", chain_length(*s.last_model, chain)}});
               }));

    if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
  }
};

Service::Service(ModuleDatabase db, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(db), std::move(options))) {}

Service::~Service() { stop(); }

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace modforge
