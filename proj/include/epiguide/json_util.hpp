#pragma once

#include "epiguide/error.hpp"
#include "epiguide/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>

namespace epiguide {

nlohmann::json read_json_file(const std::filesystem::path& path);

/// JSON encoding of a distance that may be +infinity (stored as null).
nlohmann::json distance_to_json(double mm);
double distance_from_json(const nlohmann::json& j);

nlohmann::json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j, const std::string& what);

/// Object reader that remembers which keys were consumed so unknown keys can
/// be rejected.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& object, std::string context);

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    used_.insert(key);
    if (!obj_.contains(key)) {
      return fallback;
    }
    return convert<T>(key);
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    used_.insert(key);
    if (!obj_.contains(key) || obj_.at(key).is_null()) {
      return std::nullopt;
    }
    return convert<T>(key);
  }

  template <typename T>
  T required(const std::string& key) {
    used_.insert(key);
    if (!obj_.contains(key)) {
      throw ConfigError(context_ + ": missing required key '" + key + "'");
    }
    return convert<T>(key);
  }

  Vec3 get_vec3_or(const std::string& key, const Vec3& fallback);
  std::optional<Vec3> optional_vec3(const std::string& key);

  /// Throws ConfigError naming the first key that was never read.
  void reject_unknown() const;

 private:
  template <typename T>
  T convert(const std::string& key) const {
    try {
      return obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  const nlohmann::json& obj_;
  std::string context_;
  std::set<std::string> used_;
};

} // namespace epiguide
