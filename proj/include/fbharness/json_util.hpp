#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fbharness/errors.hpp"

namespace fbh {

/// Rejects keys outside `allowed`; `context` prefixes the diagnostic.
inline void require_known_keys(const nlohmann::json& j,
                               std::initializer_list<std::string_view> allowed,
                               std::string_view context) {
  if (!j.is_object()) {
    throw ConfigError(std::string(context) + ": expected an object");
  }
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) {
      throw ConfigError(std::string(context) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get_field(const nlohmann::json& j, std::string_view key,
            std::string_view context) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(std::string(context) + ": missing key '" +
                      std::string(key) + "'");
  }
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(context) + ": key '" + std::string(key) +
                      "' has the wrong type");
  }
}

template <typename T>
T get_field_or(const nlohmann::json& j, std::string_view key, T fallback,
               std::string_view context) {
  if (!j.contains(key)) return fallback;
  return get_field<T>(j, key, context);
}

}  // namespace fbh
