#include "fbharness/resources.hpp"

#include "fbharness/errors.hpp"

namespace fbh::resources {

std::optional<std::string_view> find(std::string_view path) {
  for (const auto& e : detail::entries()) {
    if (e.path == path) return e.content;
  }
  return std::nullopt;
}

std::string_view get(std::string_view path) {
  if (auto found = find(path)) return *found;
  throw ConfigError("missing bundled resource '" + std::string(path) + "'");
}

std::vector<std::string> list(std::string_view prefix) {
  std::vector<std::string> out;
  for (const auto& e : detail::entries()) {
    if (e.path.substr(0, prefix.size()) == prefix) out.emplace_back(e.path);
  }
  return out;
}

}  // namespace fbh::resources
