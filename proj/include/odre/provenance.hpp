#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "odre/common.hpp"

namespace odre {

inline constexpr std::string_view kMarkerPrefix = "// @odre generated";

inline std::string provenance_marker(Level level, std::size_t reorder_index, std::uint64_t seed,
                                     std::string_view source_relpath) {
  return fmt::format("{} level={} reorder={} seed={} source={}", kMarkerPrefix, to_string(level), reorder_index,
                     seed, source_relpath);
}

/// True when the text starts with a provenance marker line (after an
/// optional hashbang line).
inline bool has_provenance_marker(std::string_view text) {
  if (text.substr(0, 2) == "#!") {
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) return false;
    text.remove_prefix(nl + 1);
  }
  return text.substr(0, kMarkerPrefix.size()) == kMarkerPrefix;
}

inline bool is_generated_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::string head(4096, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  return has_provenance_marker(head);
}

}  // namespace odre
