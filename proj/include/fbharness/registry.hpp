#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fbharness/mdp.hpp"

namespace fbh {

/// Registered domain names, in display order.
const std::vector<std::string>& domain_names();

/// Builds a domain. Without `config` the bundled configs/<name>.json is used.
/// An explicit config must name a registered environment family via "name"
/// or be passed for a registered name. Throws ConfigError for unknown names.
std::unique_ptr<Environment> make_environment(
    std::string_view name, const std::optional<json>& config = std::nullopt);

/// Process-wide cache of bundled-config environments.
std::shared_ptr<const Environment> shared_environment(std::string_view name);

}  // namespace fbh
