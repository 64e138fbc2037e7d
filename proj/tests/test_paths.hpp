#pragma once

#include <filesystem>

namespace testpaths {

inline std::filesystem::path fixtures() { return CHANGEGPT_FIXTURES_DIR; }
inline std::filesystem::path golden() { return CHANGEGPT_GOLDEN_DIR; }

/// Fresh scratch directory under the build tree, removed on construction.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::path(CHANGEGPT_SCRATCH_DIR) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testpaths
