#include "armforge/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace armforge {

using nlohmann::json;

namespace {

const json* find(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return;
  try {
    out = v->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}.{}: expected {}, got {}", path, key,
                                  std::is_same_v<T, std::string> ? "string"
                                  : std::is_integral_v<T>        ? "integer"
                                                                 : "number",
                                  v->type_name()));
  }
}

void read_range(const json& obj, const char* key, std::array<double, 2>& out,
                const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return;
  if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() ||
      !(*v)[1].is_number()) {
    throw ConfigError(
        fmt::format("{}.{}: expected [lower, upper] numbers", path, key));
  }
  out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
}

const json& require_object(const json& v, const std::string& path) {
  if (!v.is_object()) {
    throw ConfigError(
        fmt::format("{}: expected object, got {}", path, v.type_name()));
  }
  return v;
}

// Lists must be complete; entries merge field-wise over the default entry.
template <typename T, typename Merge>
void read_list(const json& doc, const char* key, std::vector<T>& out,
               std::size_t expected, const char* what, Merge merge) {
  const json* v = find(doc, key);
  if (!v) return;
  if (!v->is_array()) {
    throw ConfigError(fmt::format("{}: expected array", key));
  }
  if (v->size() != expected) {
    throw ConfigError(fmt::format("{} must have {} {}", key, expected, what));
  }
  for (std::size_t i = 0; i < expected; ++i) {
    const std::string path = fmt::format("{}[{}]", key, i);
    merge(require_object((*v)[i], path), out[i], path);
  }
}

void merge_rail(const json& v, Rail& r, const std::string& path) {
  require_object(v, path);
  read(v, "volts", r.volts, path);
  read(v, "max_current", r.max_current, path);
}

}  // namespace

std::string describe_offset(std::string_view text, std::size_t byte_offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t end = std::min(byte_offset, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return fmt::format("line {}, column {}", line, col);
}

ArmModel apply_arm_overrides(const json& doc, ArmModel m) {
  require_object(doc, "document");

  read_list(doc, "dh_table", m.dh_table, kNumJoints, "rows",
            [](const json& v, DHRow& r, const std::string& p) {
              read(v, "a", r.a, p);
              read(v, "alpha", r.alpha, p);
              read(v, "d", r.d, p);
              read(v, "theta_offset", r.theta_offset, p);
              read(v, "joint_index", r.joint_index, p);
            });
  read_list(doc, "mass_chain", m.mass_chain, kNumJoints, "links",
            [](const json& v, LinkMass& l, const std::string& p) {
              read(v, "name", l.name, p);
              read(v, "length", l.length, p);
              read(v, "weight", l.weight, p);
              read(v, "actuator", l.actuator, p);
            });
  read_list(doc, "servos", m.servos, kNumServos, "entries",
            [](const json& v, ServoSpec& s, const std::string& p) {
              read(v, "model", s.model_name, p);
              read(v, "rated_torque", s.rated_torque, p);
              read(v, "stall_current", s.stall_current, p);
              read(v, "comm_current", s.comm_current, p);
              read(v, "slew_rate", s.slew_rate, p);
              read_range(v, "angle_range", s.angle_range, p);
              read(v, "channel", s.channel, p);
            });

  if (const json* s = find(doc, "supply")) {
    require_object(*s, "supply");
    if (const json* r = find(*s, "servo")) merge_rail(*r, m.supply.servo_supply, "supply.servo");
    if (const json* r = find(*s, "logic")) merge_rail(*r, m.supply.logic_supply, "supply.logic");
  }

  if (const json* s = find(doc, "sensor")) {
    const std::string p = "sensor";
    require_object(*s, p);
    auto& q = m.sensor;
    read(*s, "K", q.K, p);
    read(*s, "d0", q.d0, p);
    read_range(*s, "valid_range", q.valid_range, p);
    read_range(*s, "best_accuracy_band", q.best_accuracy_band, p);
    read(*s, "empty_area_distance", q.empty_area_distance, p);
    read(*s, "tall_threshold", q.tall_threshold, p);
    read(*s, "noise_sigma", q.noise_sigma, p);
    read(*s, "no_return_distance", q.no_return_distance, p);
    read(*s, "supply_current", q.supply_current, p);
    read(*s, "comm_current", q.comm_current, p);
  }

  if (const json* v = find(doc, "joint_limits")) {
    if (!v->is_array() || v->size() != kNumJoints) {
      throw ConfigError("joint_limits must have 5 entries");
    }
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const json& e = (*v)[j];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
          !e[1].is_number()) {
        throw ConfigError(
            fmt::format("joint_limits[{}]: expected [lower, upper] numbers", j));
      }
      m.joint_limits[j] = {e[0].get<double>(), e[1].get<double>()};
    }
  }
  return m;
}

ArmModel load_arm_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("parse error at {}: {}",
                                  describe_offset(text, e.byte == 0 ? 0 : e.byte - 1),
                                  e.what()));
  }
  ArmModel m = apply_arm_overrides(doc, default_arm_model());
  if (auto v = validate_model(m); !v.empty()) {
    throw ConfigError(v.front());
  }
  return m;
}

ArmModel load_arm_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_arm_config(ss.str());
}

json arm_model_to_json(const ArmModel& m) {
  json doc;
  for (const auto& r : m.dh_table) {
    doc["dh_table"].push_back({{"a", r.a},
                               {"alpha", r.alpha},
                               {"d", r.d},
                               {"theta_offset", r.theta_offset},
                               {"joint_index", r.joint_index}});
  }
  for (const auto& l : m.mass_chain) {
    doc["mass_chain"].push_back({{"name", l.name},
                                 {"length", l.length},
                                 {"weight", l.weight},
                                 {"actuator", l.actuator}});
  }
  for (const auto& s : m.servos) {
    doc["servos"].push_back({{"model", s.model_name},
                             {"rated_torque", s.rated_torque},
                             {"stall_current", s.stall_current},
                             {"comm_current", s.comm_current},
                             {"slew_rate", s.slew_rate},
                             {"angle_range", s.angle_range},
                             {"channel", s.channel}});
  }
  const auto rail = [](const Rail& r) {
    return json{{"volts", r.volts}, {"max_current", r.max_current}};
  };
  doc["supply"] = {{"servo", rail(m.supply.servo_supply)},
                   {"logic", rail(m.supply.logic_supply)}};
  const auto& q = m.sensor;
  doc["sensor"] = {{"K", q.K},
                   {"d0", q.d0},
                   {"valid_range", q.valid_range},
                   {"best_accuracy_band", q.best_accuracy_band},
                   {"empty_area_distance", q.empty_area_distance},
                   {"tall_threshold", q.tall_threshold},
                   {"noise_sigma", q.noise_sigma},
                   {"no_return_distance", q.no_return_distance},
                   {"supply_current", q.supply_current},
                   {"comm_current", q.comm_current}};
  doc["joint_limits"] = json::array();
  for (const auto& lim : m.joint_limits) doc["joint_limits"].push_back(lim);
  return doc;
}

std::string serialize_arm_model(const ArmModel& m) {
  return arm_model_to_json(m).dump(2);
}

}  // namespace armforge
