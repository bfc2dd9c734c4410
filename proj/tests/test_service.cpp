#include <algorithm>
#include <chrono>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "modforge/pipeline.hpp"
#include "modforge/service.hpp"
#include "support.hpp"

// After Eigen: resolv.h, pulled in here, defines a `_res` macro.
#include <httplib.h>

using namespace modforge;
using modforge::fixtures::catalog;
using modforge::fixtures::data_assembly;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kStamp = "2000-01-01T00:00:00Z";

class ServiceTest : public ::testing::Test {
 protected:
  void start(ServiceOptions opts = {}) {
    opts.generated_at = kStamp;
    service_ = std::make_unique<Service>(catalog(), opts);
    port_ = service_->bind_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { service_->listen_after_bind(); });
    service_->wait_until_ready();
  }

  void SetUp() override { start(); }

  void TearDown() override {
    service_->stop();
    if (thread_.joinable()) thread_.join();
  }

  void restart(ServiceOptions opts) {
    TearDown();
    start(std::move(opts));
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

  std::string new_session(const json& body = json::object()) {
    auto res = client().Post("/v1/sessions", body.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    return json::parse(res->body).at("id").get<std::string>();
  }

  std::unique_ptr<Service> service_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace

TEST_F(ServiceTest, CatalogListsModules) {
  auto res = client().Get("/v1/catalog");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const json j = json::parse(res->body);
  EXPECT_EQ(j.at("modules").size(), catalog().size());
  EXPECT_EQ(j.at("version"), catalog().version());
}

TEST_F(ServiceTest, SessionLifecycle) {
  const std::string id = new_session();
  auto c = client();
  auto got = c.Get("/v1/sessions/" + id);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->status, 200);
  EXPECT_EQ(json::parse(got->body).at("assembly").at("placements").size(), 0u);
  EXPECT_EQ(c.Delete("/v1/sessions/" + id)->status, 200);
  EXPECT_EQ(c.Get("/v1/sessions/" + id)->status, 404);
  EXPECT_EQ(c.Delete("/v1/sessions/" + id)->status, 404);
}

TEST_F(ServiceTest, AttachDetachAndConflict) {
  const std::string id = new_session();
  auto c = client();
  const std::string base = "/v1/sessions/" + id;
  auto root = c.Post(base + "/attach", json{{"module_id", "torso_hub"}, {"instance_id", "t"}}.dump(), "application/json");
  ASSERT_EQ(root->status, 200);
  const json left{{"module_id", "straight_a"}, {"parent_instance", "t"}, {"parent_connector", "left_arm"}};
  auto l = c.Post(base + "/attach", left.dump(), "application/json");
  ASSERT_EQ(l->status, 200);
  const std::string left_id = json::parse(l->body).at("instance_id");
  auto tip = c.Post(base + "/attach",
                    json{{"module_id", "drill_ee"}, {"parent_instance", left_id}, {"parent_connector", "out"}}.dump(),
                    "application/json");
  ASSERT_EQ(tip->status, 200);

  auto occupied = c.Post(base + "/attach", left.dump(), "application/json");
  EXPECT_EQ(occupied->status, 409);
  EXPECT_EQ(json::parse(occupied->body).at("error").at("kind"), "conflict");
  auto unknown = c.Post(base + "/attach",
                        json{{"module_id", "nope"}, {"parent_instance", "t"}, {"parent_connector", "right_arm"}}.dump(),
                        "application/json");
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(json::parse(c.Get(base)->body).at("assembly").at("placements").size(), 3u);

  auto detach = c.Post(base + "/detach", json{{"instance_id", left_id}}.dump(), "application/json");
  ASSERT_EQ(detach->status, 200);
  EXPECT_EQ(json::parse(detach->body).at("removed").size(), 2u);
  EXPECT_EQ(json::parse(c.Get(base)->body).at("assembly").at("placements").size(), 1u);
}

TEST_F(ServiceTest, MalformedRequestIs400) {
  const std::string id = new_session();
  auto res = client().Post("/v1/sessions/" + id + "/attach", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  const json body = json::parse(res->body);
  EXPECT_TRUE(body.at("error").contains("stage"));
  EXPECT_TRUE(body.at("error").contains("message"));
}

TEST_F(ServiceTest, DiscoverMatchesPipelineBytes) {
  const AssemblySpec a = data_assembly("mobile_manipulator.json");
  const std::string id = new_session({{"assembly", assembly_to_json(a)}});
  auto c = client();
  auto res = c.Post("/v1/sessions/" + id + "/discover", "", "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  const json j = json::parse(res->body);
  DiscoverOptions opts;
  opts.generated_at = kStamp;
  const Bundle local = discover(a, catalog(), {}, opts).bundle;
  EXPECT_EQ(j.at("urdf").get<std::string>(), local.urdf);
  EXPECT_EQ(j.at("srdf").get<std::string>(), local.srdf);
  EXPECT_EQ(j.at("manifest"), json::parse(local.manifest));
  EXPECT_EQ(j.at("stats").at("slaves"), 15);
  EXPECT_EQ(j.at("stats").at("chains").size(), 5u);
}

TEST_F(ServiceTest, CustomizationFkAndReach) {
  const std::string id = new_session({{"assembly", assembly_to_json(data_assembly("morphology_b.json"))}});
  auto c = client();
  const std::string base = "/v1/sessions/" + id;
  EXPECT_EQ(c.Get(base + "/fk?frame=TCP_A")->status, 400);  // no model yet

  const json cust{{"homing", {{"J1A", 0.5}}}};
  ASSERT_EQ(c.Put(base + "/customization", cust.dump(), "application/json")->status, 200);
  auto d = c.Post(base + "/discover", "", "application/json");
  ASSERT_EQ(d->status, 200);
  EXPECT_EQ(json::parse(d->body).at("homing"), json({{"J1A", 0.5}}));

  auto fk0 = c.Get(base + "/fk?frame=TCP_A");
  ASSERT_EQ(fk0->status, 200);
  const json pose = json::parse(fk0->body);
  EXPECT_NEAR(pose.at("translation")[2].get<double>(), 2.15, 1e-12);
  auto fk_named = c.Get(base + "/fk?frame=TCP_A&q=J0A:0.3,J1A:0.2");
  ASSERT_EQ(fk_named->status, 200);
  EXPECT_EQ(c.Get(base + "/fk?frame=TCP_A&q=0.1,0.2")->status, 400);
  EXPECT_EQ(c.Get(base + "/fk?frame=nowhere")->status, 404);
  EXPECT_EQ(c.Get(base + "/fk?frame=TCP_A&q=J0A:9")->status, 422);

  auto reach = c.Get(base + "/reach?chain=A&samples=512");
  ASSERT_EQ(reach->status, 200);
  const json r = json::parse(reach->body);
  EXPECT_EQ(r.at("samples"), 512);
  EXPECT_NEAR(r.at("length").get<double>(), 2.15, 1e-12);
  EXPECT_LE(r.at("max_radius").get<double>(), 2.15 + 1e-9);
}

TEST_F(ServiceTest, SnapshotsSurviveRestart) {
  const fs::path dir = fs::temp_directory_path() / ("modforge_snap_" + std::to_string(std::random_device{}()));
  ServiceOptions opts;
  opts.snapshot_dir = dir;
  restart(opts);
  const std::string id = new_session({{"assembly", assembly_to_json(data_assembly("morphology_a.json"))}});
  restart(opts);
  auto res = client().Get("/v1/sessions/" + id);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).at("assembly").at("placements").size(), 8u);
  fs::remove_all(dir);
}

TEST_F(ServiceTest, ConcurrentSessionsLatency) {
  const AssemblySpec big = data_assembly("long_30.json");
  constexpr int kSessions = 16;
  constexpr int kRounds = 8;
  std::vector<std::string> ids;
  for (int i = 0; i < kSessions; ++i) ids.push_back(new_session({{"assembly", assembly_to_json(big)}}));
  std::vector<std::vector<double>> latency(kSessions);
  std::vector<std::string> first_urdf(kSessions);
  std::vector<std::thread> workers;
  for (int i = 0; i < kSessions; ++i) {
    workers.emplace_back([&, i] {
      auto c = client();
      for (int r = 0; r < kRounds; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        auto res = c.Post("/v1/sessions/" + ids[i] + "/discover", "", "application/json");
        latency[i].push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        if (res && res->status == 200 && r == 0) first_urdf[i] = json::parse(res->body).at("urdf");
      }
    });
  }
  for (auto& w : workers) w.join();
  std::vector<double> all;
  for (const auto& l : latency) all.insert(all.end(), l.begin(), l.end());
  std::sort(all.begin(), all.end());
  const double p99 = all[static_cast<std::size_t>(0.99 * static_cast<double>(all.size() - 1))];
  EXPECT_LT(p99, 0.250) << "median " << all[all.size() / 2] << " max " << all.back();
  for (const auto& u : first_urdf) EXPECT_EQ(u, first_urdf[0]);
  EXPECT_FALSE(first_urdf[0].empty());
}
