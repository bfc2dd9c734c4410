#include <array>
#include <cstdio>
#include <fstream>
#include <random>
#include <regex>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "modforge/module_db.hpp"
#include "support.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" MODFORGE_CLI_PATH "\" " + args + " 2>&1";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("modforge_cli_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

json shipped_catalog() {
  std::ifstream f(modforge::default_catalog_path());
  return json::parse(f);
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string data(const std::string& name) { return (fs::path(MODFORGE_DATA_DIR) / "assemblies" / name).string(); }

}  // namespace

TEST(Cli, ValidateShippedCatalog) {
  const CliResult r = run("validate");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("17 modules"), std::string::npos) << r.out;
}

TEST(Cli, ValidateNamesMissingField) {
  TempDir dir;
  json cat = shipped_catalog();
  cat["modules"][0]["frames"].erase("T_joint_out");
  write(dir / "catalog.json", cat.dump());
  const CliResult r = run("validate --db " + (dir / "catalog.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("T_joint_out"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("elbow_a"), std::string::npos) << r.out;
}

TEST(Cli, ValidateRejectsDuplicates) {
  TempDir dir;
  const json cat = shipped_catalog();
  write(dir / "a.json", json{{"modules", json::array({cat["modules"][0]})}}.dump());
  write(dir / "b.json", json{{"modules", json::array({cat["modules"][0]})}}.dump());
  const CliResult r = run("validate --db " + dir.path().string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("elbow_a"), std::string::npos) << r.out;
}

TEST(Cli, DiscoverMobileManipulator) {
  TempDir dir;
  const CliResult r = run("discover " + data("mobile_manipulator.json") + " --out " + (dir / "bundle"));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"robot.urdf", "robot.srdf", "homing.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir.path() / "bundle" / f)) << f;
  }
  std::ifstream srdf(dir.path() / "bundle" / "robot.srdf");
  const std::string text((std::istreambuf_iterator<char>(srdf)), {});
  const std::regex leg(R"(<group name="leg_[A-Z]+">)");
  const std::regex arm(R"(<group name="arm_[A-Z]+">)");
  EXPECT_EQ(std::distance(std::sregex_iterator(text.begin(), text.end(), leg), std::sregex_iterator()), 4);
  EXPECT_EQ(std::distance(std::sregex_iterator(text.begin(), text.end(), arm), std::sregex_iterator()), 1);
}

TEST(Cli, DiscoverJsonReportsStages) {
  TempDir dir;
  const CliResult r = run("discover --json " + data("morphology_b.json") + " --out " + (dir / "b"));
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = json::parse(r.out);
  ASSERT_EQ(j.at("timings").size(), 6u);
  EXPECT_EQ(j.at("timings")[0].at("stage"), "ecat_sim");
  EXPECT_EQ(j.at("slaves"), 9);
}

TEST(Cli, UnknownModuleFails) {
  TempDir dir;
  std::ifstream in(data("morphology_b.json"));
  json a = json::parse(in);
  a["placements"].back()["module_id"] = "mystery";
  write(dir / "a.json", a.dump());
  const CliResult r = run("discover " + (dir / "a.json") + " --out " + (dir / "b"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("unknown module_identifier"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir.path() / "b"));
}

TEST(Cli, FkFromBundle) {
  TempDir dir;
  ASSERT_EQ(run("discover " + data("morphology_b.json") + " --out " + (dir / "b")).code, 0);
  const CliResult root = run("fk --json " + (dir / "b"));
  ASSERT_EQ(root.code, 0) << root.out;
  const json j = json::parse(root.out);
  EXPECT_EQ(j.at("frame"), "base_link");
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(j.at("translation")[i].get<double>(), 0.0);
    EXPECT_EQ(j.at("rpy")[i].get<double>(), 0.0);
  }
  const CliResult tcp = run("fk --json " + (dir / "b") + " --frame TCP_A --q 0,0,0,0,0,0");
  ASSERT_EQ(tcp.code, 0) << tcp.out;
  EXPECT_NEAR(json::parse(tcp.out).at("translation")[2].get<double>(), 2.15, 1e-12);

  const CliResult bad = run("fk " + (dir / "b") + " --frame TCP_A --q 0,0");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("expected 6 joint values"), std::string::npos) << bad.out;
}

TEST(Cli, FkHonorsEditedUrdf) {
  TempDir dir;
  ASSERT_EQ(run("discover " + data("morphology_b.json") + " --out " + (dir / "b")).code, 0);
  const std::string urdf_path = (dir.path() / "b" / "robot.urdf").string();
  std::ifstream in(urdf_path);
  std::string urdf((std::istreambuf_iterator<char>(in)), {});
  in.close();
  // Lift the whole robot by 1 m through the first joint origin.
  const std::regex first_origin(R"re(<origin xyz="([^ ]+) ([^ ]+) ([^"]+)")re");
  std::smatch m;
  const std::size_t joint_at = urdf.find("<joint ");
  ASSERT_NE(joint_at, std::string::npos);
  std::string tail = urdf.substr(joint_at);
  ASSERT_TRUE(std::regex_search(tail, m, first_origin));
  const double z = std::stod(m[3]) + 1.0;
  tail = m.prefix().str() + "<origin xyz=\"" + m[1].str() + " " + m[2].str() + " " + std::to_string(z) + "\"" +
         m.suffix().str();
  write(urdf_path, urdf.substr(0, joint_at) + tail);
  const CliResult r = run("fk --json " + (dir / "b") + " --frame TCP_A");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NEAR(json::parse(r.out).at("translation")[2].get<double>(), 3.15, 1e-9);
}

TEST(Cli, DatabaseFromEnvironment) {
  TempDir dir;
  json cat = shipped_catalog();
  cat["modules"][0]["frames"].erase("T_joint_out");
  write(dir / "catalog.json", cat.dump());
  EXPECT_EQ(run("validate", "MODFORGE_DB=" + (dir / "catalog.json")).code, 1);
  EXPECT_EQ(run("validate").code, 0);
}

TEST(Cli, ReachReportsEnvelope) {
  const CliResult r = run("reach --json " + data("morphology_b.json") + " --chain A --samples 256");
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("samples"), 256);
  EXPECT_LE(j.at("max_height").get<double>(), 2.15 + 1e-9);
}

TEST(Cli, UsageErrorsExitNonZero) {
  EXPECT_NE(run("discover").code, 0);
  EXPECT_NE(run("bogus").code, 0);
}
