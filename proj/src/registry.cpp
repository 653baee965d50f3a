#include "fbharness/registry.hpp"

#include <map>
#include <mutex>

#include "fbharness/cliff_walking.hpp"
#include "fbharness/craft_world.hpp"
#include "fbharness/errors.hpp"
#include "fbharness/grid_world.hpp"
#include "fbharness/gripper_lift.hpp"
#include "fbharness/resources.hpp"

namespace fbh {

const std::vector<std::string>& domain_names() {
  static const std::vector<std::string> names = {
      "cliffwalking", "doorkey-5x5", "doorkey",
      "fourrooms",    "craftworld",  "gripperlift"};
  return names;
}

std::unique_ptr<Environment> make_environment(std::string_view name,
                                              const std::optional<json>& config) {
  const std::string key(name);
  if (key == "cliffwalking") {
    return std::make_unique<CliffWalking>();
  }
  bool known = false;
  for (const auto& n : domain_names()) known = known || n == key;
  if (!known) throw ConfigError("unknown domain '" + key + "'");

  json cfg;
  if (config) {
    cfg = *config;
  } else {
    try {
      cfg = json::parse(resources::get("configs/" + key + ".json"));
    } catch (const json::exception& e) {
      throw ConfigError("bundled config for " + key + " is invalid: " +
                        e.what());
    }
  }
  try {
    if (key == "craftworld") {
      return std::make_unique<CraftWorld>(CraftWorld::from_config(cfg));
    }
    if (key == "gripperlift") {
      return std::make_unique<GripperLift>(GripperLift::from_config(cfg));
    }
    return std::make_unique<GridWorld>(GridWorld::from_config(cfg));
  } catch (const json::exception& e) {
    throw ConfigError(key + " config: " + e.what());
  }
}

std::shared_ptr<const Environment> shared_environment(std::string_view name) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const Environment>, std::less<>>
      cache;
  std::lock_guard lock(mu);
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  std::shared_ptr<const Environment> env = make_environment(name);
  cache.emplace(std::string(name), env);
  return env;
}

}  // namespace fbh
