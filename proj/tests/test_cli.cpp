#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "../tools/cli.hpp"
#include "armforge/config.hpp"
#include "armforge/kinematics.hpp"
#include "net_client.hpp"
#include "support.hpp"

using namespace armforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args, const cli::Context& ctx = {}) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err, ctx);
  return {code, out.str(), err.str()};
}

std::string line_with(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (l.rfind(prefix, 0) == 0) return l;
  return {};
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("armforge_test_" + std::to_string(::getpid()) + "_" + name);
}

std::uint16_t test_port(int salt) {
  return static_cast<std::uint16_t>(20000 + (::getpid() * 7 + salt) % 20000);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fk straight pose") {
  const Run r = invoke({"fk", "--theta", "90,0,0,180,0"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(line_with(r.out, "distance from shoulder axis point") ==
        "distance from shoulder axis point (cm): 41.7800");
  CHECK(line_with(r.out, "tip position") == "tip position (cm): x=0.0000 y=41.7800 z=7.0000");

  const Run j = invoke({"fk", "--theta", "90,0,0,180,0", "--json"});
  REQUIRE(j.code == cli::kExitOk);
  const json doc = json::parse(j.out);
  CHECK(doc["distance_from_shoulder_cm"].get<double>() == doctest::Approx(41.78).epsilon(1e-12));
  CHECK(doc["transform"].size() == 4);
}

TEST_CASE("fk roll does not move the tip") {
  const std::string want = line_with(invoke({"fk", "--theta", "30,60,-45,90,0"}).out, "tip position");
  REQUIRE_FALSE(want.empty());
  for (int t5 = 0; t5 <= 180; t5 += 15) {
    const Run r = invoke({"fk", "--theta", "30,60,-45,90," + std::to_string(t5)});
    CHECK(line_with(r.out, "tip position") == want);
  }
}

TEST_CASE("fk usage errors") {
  const Run r = invoke({"fk", "--theta", "1,2,3,4"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("usage error") != std::string::npos);
  CHECK(invoke({"fk"}).code == cli::kExitUsage);
  CHECK(invoke({"fk", "--theta", "a,b,c,d,e"}).code == cli::kExitUsage);
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"bogus"}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("ik round trip through the cli") {
  const Run r = invoke({"ik", "--target", "5,20,6", "--json"});
  REQUIRE(r.code == cli::kExitOk);
  const json doc = json::parse(r.out);
  REQUIRE(doc["ok"] == true);
  CHECK(doc["position_error_cm"].get<double>() < 1e-4);

  JointState q;
  for (int k = 0; k < 5; ++k) q.theta[k] = doc["theta_deg"][k];
  const Eigen::Vector3d p = forward_kinematics(default_arm_model(), q).translation;
  CHECK((p - Eigen::Vector3d(5, 20, 6)).norm() < 1e-4);

  const Run text = invoke({"ik", "--target", "5,20,6"});
  CHECK(text.code == cli::kExitOk);
  CHECK(line_with(text.out, "branch") == "branch: elbow-up");
}

TEST_CASE("ik failures") {
  const Run far = invoke({"ik", "--target", "100,0,0"});
  CHECK(far.code == cli::kExitError);
  CHECK(far.out.find("unreachable") != std::string::npos);

  const Run axis = invoke({"ik", "--target", "0,0,20"});
  CHECK(axis.code == cli::kExitError);
  CHECK(axis.out.find("singular: theta1 indeterminate") != std::string::npos);

  const Run j = invoke({"ik", "--target", "100,0,0", "--json"});
  CHECK(j.code == cli::kExitError);
  CHECK(json::parse(j.out)["ok"] == false);

  CHECK(invoke({"ik", "--target", "1,2"}).code == cli::kExitUsage);
  CHECK(invoke({"ik", "--target", "1,2,3", "--branch", "sideways"}).code == cli::kExitUsage);
}

TEST_CASE("torque table") {
  const Run r = invoke({"torque", "--load", "100"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("0.767") != std::string::npos);
  CHECK(r.out.find("1.356") != std::string::npos);
  CHECK(r.out.find("DISCREPANT") != std::string::npos);

  const Run j = invoke({"torque", "--load", "100", "--json"});
  REQUIRE(j.code == cli::kExitOk);
  const json doc = json::parse(j.out);
  CHECK(doc["load"] == 100.0);
  CHECK(doc["rows"].size() == 5);
  CHECK(doc["feasible"] == true);

  const Run mp = invoke({"torque", "--max-payload", "--json"});
  REQUIRE(mp.code == cli::kExitOk);
  const json mpd = json::parse(mp.out);
  CHECK(mpd["max_payload_gf"].get<double>() == doctest::Approx(292).epsilon(0.01));

  const Run mpo = invoke({"torque", "--max-payload", "--published-offsets", "--json"});
  CHECK(std::abs(json::parse(mpo.out)["max_payload_gf"].get<double>() - 298) <= 5);
  CHECK(invoke({"torque", "--max-payload", "--paper-offsets", "--json"}).out == mpo.out);

  CHECK(invoke({"torque", "--load", "-5"}).code != cli::kExitOk);
}

TEST_CASE("power budget") {
  const Run r = invoke({"power-budget"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(r.out.find("2265") != std::string::npos);
  CHECK(r.out.find("2250") != std::string::npos);
  CHECK(r.out.find("310") != std::string::npos);

  const json doc = json::parse(invoke({"power-budget", "--json"}).out);
  CHECK(doc.dump().find("2265") != std::string::npos);
  CHECK(doc["servos"].size() == 6);
}

TEST_CASE("workspace") {
  const fs::path csv = temp_file("ws.csv");
  const Run r = invoke({"workspace", "--steps", "5", "--out", csv.string()});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(line_with(r.out, "note:").find("40") != std::string::npos);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,z");
  fs::remove(csv);

  const json doc = json::parse(invoke({"workspace", "--steps", "9", "--json"}).out);
  CHECK(doc["max_reach_cm"].get<double>() == doctest::Approx(41.78).epsilon(1e-9));
  CHECK(doc.contains("note"));

  CHECK(invoke({"workspace", "--steps", "1"}).code == cli::kExitUsage);
  CHECK(invoke({"workspace", "--format", "obj"}).code == cli::kExitUsage);
}

TEST_CASE("simulate matches golden logs") {
  for (const char* name :
       {"op1_empty", "op1_object", "op2_short", "op2_tall", "op3_short", "op3_tall"}) {
    CAPTURE(name);
    const std::string scenario = test::data_path(std::string("scenarios/") + name + ".json");
    const Run a = invoke({"simulate", scenario});
    REQUIRE(a.code == cli::kExitOk);
    CHECK(a.out == test::read_file(test::data_path(std::string("golden/") + name + ".jsonl")));
    CHECK(a.err.find("Done") != std::string::npos);
    const Run b = invoke({"simulate", scenario});
    CHECK(a.out == b.out);
  }

  const fs::path log = temp_file("sim.jsonl");
  const Run r = invoke({"simulate", test::data_path("scenarios/op2_tall.json"), "--log", log.string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("-> LeftBucket") == std::string::npos);
  CHECK(r.out.find("-> RightBucket") != std::string::npos);
  CHECK(test::read_file(log.string()) ==
        test::read_file(test::data_path("golden/op2_tall.jsonl")));
  fs::remove(log);

  CHECK(invoke({"simulate", "/nonexistent/scenario.json"}).code == cli::kExitError);
}

TEST_CASE("config from the environment") {
  const fs::path cfg = temp_file("cfg.json");
  {
    std::ofstream f(cfg);
    f << R"({"dh_table": [{"d": 0}, {}, {}, {}, {}]})";
  }
  ::setenv("ARMFORGE_CONFIG", cfg.c_str(), 1);
  const Run r = invoke({"fk", "--theta", "90,0,0,180,0"});
  ::unsetenv("ARMFORGE_CONFIG");
  REQUIRE(r.code == cli::kExitOk);
  CHECK(line_with(r.out, "distance from base origin") == "distance from base origin (cm): 41.7800");

  const Run bad = invoke({"fk", "--theta", "90,0,0,180,0", "--config", "/nonexistent.json"});
  CHECK(bad.code == cli::kExitError);
  fs::remove(cfg);
}

TEST_CASE("serve answers state requests") {
  for (const bool preload : {false, true}) {
    CAPTURE(preload);
    std::atomic<bool> stop{false};
    std::promise<std::uint16_t> listening;
    cli::Context ctx{&stop, [&](std::uint16_t p) { listening.set_value(p); }};
    std::vector<std::string> args{"serve", "--port", std::to_string(test_port(preload))};
    if (preload) {
      args.push_back("--scenario");
      args.push_back(test::data_path("scenarios/op2_short.json"));
    }
    std::ostringstream out, err;
    std::thread t([&] { cli::run(args, out, err, ctx); });
    auto fut = listening.get_future();
    const bool up = fut.wait_for(std::chrono::seconds(1)) == std::future_status::ready;
    CHECK(up);
    if (up) {
      const auto port = fut.get();
      const auto reply = test::http_get(port, "/api/state");
      CHECK(reply.status == 200);
      const json s = reply.json();
      if (preload) {
        CHECK(s["objects"].size() == 1);
        CHECK(s["program"]["name"] == "op2");
      } else {
        CHECK(s["objects"].empty());
      }
    }
    stop = true;
    t.join();
    CHECK(out.str().find("listening on http://127.0.0.1:") != std::string::npos);
  }
}

TEST_CASE("serve rejects bad ports") {
  CHECK(invoke({"serve", "--port", "0"}).code == cli::kExitUsage);
  CHECK(invoke({"serve", "--port", "70000"}).code == cli::kExitUsage);
  CHECK(invoke({"serve", "--port", "http"}).code == cli::kExitUsage);
}

}  // TEST_SUITE
