#pragma once

// Read-only data files (configs, templates, ICL corpora, goldens) compiled
// into the library so the binaries work from any directory.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fbh::resources {

namespace detail {
struct Entry {
  std::string_view path;
  std::string_view content;
};
const std::vector<Entry>& entries();
}  // namespace detail

/// Path relative to the data directory, e.g. "configs/doorkey.json".
std::optional<std::string_view> find(std::string_view path);
/// Like find(), but throws ConfigError naming the missing path.
std::string_view get(std::string_view path);
/// Paths starting with `prefix`, sorted.
std::vector<std::string> list(std::string_view prefix);

}  // namespace fbh::resources
