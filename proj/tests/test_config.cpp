#include <doctest.h>

#include <cstdio>
#include <random>

#include "armforge/config.hpp"
#include "support.hpp"

using namespace armforge;
using nlohmann::json;

TEST_SUITE("config") {

TEST_CASE("full default document round-trips to the default model") {
  const std::string doc = serialize_arm_model(default_arm_model());
  CHECK(load_arm_config(doc) == default_arm_model());
  CHECK(load_arm_config("{}") == default_arm_model());
}

TEST_CASE("short dh_table is a validation error") {
  json doc = arm_model_to_json(default_arm_model());
  doc["dh_table"].erase(4);
  CHECK_THROWS_WITH_AS(load_arm_config(doc.dump()), "dh_table must have 5 rows",
                       ConfigError);
}

TEST_CASE("base height override leaves the rest at defaults") {
  const ArmModel m = load_arm_config(R"({"dh_table": [{"d": 10.0}, {}, {}, {}, {}]})");
  CHECK(m.base_height() == 10.0);
  ArmModel expect = default_arm_model();
  expect.dh_table[0].d = 10.0;
  CHECK(m == expect);
}

TEST_CASE("nested overrides") {
  const ArmModel m = load_arm_config(R"({
    "sensor": {"noise_sigma": 0.25},
    "supply": {"servo": {"max_current": 3000}},
    "joint_limits": [[0, 180], [0, 180], [-180, 0], [0, 180], [-90, 90]]
  })");
  CHECK(m.sensor.noise_sigma == 0.25);
  CHECK(m.sensor.K == 27.0);
  CHECK(m.supply.servo_supply.max_current == 3000);
  CHECK(m.supply.servo_supply.volts == 6.0);
  CHECK(m.joint_limits[4] == std::array<double, 2>{-90.0, 90.0});
}

TEST_CASE("parse errors carry line and column") {
  try {
    load_arm_config("{\n  \"sensor\": {\n    \"K\": ,\n  }\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("parse error at line 3") != std::string::npos);
    CHECK(what.find("column") != std::string::npos);
  }
}

TEST_CASE("type errors name the field") {
  CHECK_THROWS_AS(load_arm_config(R"({"servos": 3})"), ConfigError);
  try {
    load_arm_config(R"({"sensor": {"K": "big"}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sensor.K") != std::string::npos);
  }
}

TEST_CASE("validation errors surface the violated rule") {
  CHECK_THROWS_WITH_AS(
      load_arm_config(R"({"servos": [{"rated_torque": -1}, {}, {}, {}, {}, {}]})"),
      "servos[0].rated_torque must be > 0", ConfigError);
}

TEST_CASE("file loading") {
  const auto path = std::filesystem::temp_directory_path() / "armforge_cfg_test.json";
  {
    std::ofstream f(path);
    f << R"({"sensor": {"empty_area_distance": 14.0}})";
  }
  CHECK(load_arm_config_file(path).sensor.empty_area_distance == 14.0);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_arm_config_file(path), ConfigError);
}

TEST_CASE("describe_offset") {
  CHECK(describe_offset("ab\ncd", 0) == "line 1, column 1");
  CHECK(describe_offset("ab\ncd", 4) == "line 2, column 2");
}

TEST_CASE("round-trip property over perturbed valid models") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_int_distribution<int> current(1, 2000);
  for (int trial = 0; trial < 200; ++trial) {
    ArmModel m = default_arm_model();
    for (auto& r : m.dh_table) {
      r.a *= scale(rng);
      r.d *= scale(rng);
      r.theta_offset = std::uniform_real_distribution<double>(-180, 180)(rng);
    }
    for (auto& l : m.mass_chain) {
      l.length *= scale(rng);
      l.weight *= scale(rng);
      l.actuator *= scale(rng);
    }
    for (auto& s : m.servos) {
      s.rated_torque *= scale(rng);
      s.stall_current = current(rng);
      s.slew_rate *= scale(rng);
    }
    m.sensor.K *= scale(rng);
    m.sensor.noise_sigma = scale(rng) - 0.5;
    m.supply.servo_supply.max_current = current(rng);
    m.joint_limits[0] = {-std::uniform_real_distribution<double>(0, 180)(rng),
                         std::uniform_real_distribution<double>(1, 180)(rng)};
    REQUIRE(validate_model(m).empty());
    CHECK(load_arm_config(serialize_arm_model(m)) == m);
  }
}

}  // TEST_SUITE
