#include "epiguide/json_util.hpp"

#include <cmath>
#include <fstream>

namespace epiguide {

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open " + path.string());
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json distance_to_json(double mm) {
  if (std::isinf(mm) && mm > 0) {
    return nullptr;
  }
  return mm;
}

double distance_from_json(const nlohmann::json& j) {
  if (j.is_null()) {
    return kInfinity;
  }
  return j.get<double>();
}

nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(what + ": expected a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

JsonReader::JsonReader(const nlohmann::json& object, std::string context)
    : obj_(object), context_(std::move(context)) {
  if (!obj_.is_object()) {
    throw ConfigError(context_ + ": expected a JSON object");
  }
}

Vec3 JsonReader::get_vec3_or(const std::string& key, const Vec3& fallback) {
  used_.insert(key);
  if (!obj_.contains(key)) {
    return fallback;
  }
  return vec3_from_json(obj_.at(key), context_ + "." + key);
}

std::optional<Vec3> JsonReader::optional_vec3(const std::string& key) {
  used_.insert(key);
  if (!obj_.contains(key) || obj_.at(key).is_null()) {
    return std::nullopt;
  }
  return vec3_from_json(obj_.at(key), context_ + "." + key);
}

void JsonReader::reject_unknown() const {
  for (const auto& item : obj_.items()) {
    if (!used_.count(item.key())) {
      throw ConfigError(context_ + ": unknown key '" + item.key() + "'");
    }
  }
}

} // namespace epiguide
