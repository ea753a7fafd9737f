#pragma once

#include <filesystem>
#include <string>

#include "cycleik/chain.hpp"

namespace testing {

inline std::filesystem::path robot(const std::string& name) {
  return std::filesystem::path(CYCLEIK_ROBOTS_DIR) / name;
}

inline cycleik::KinematicChain planar2() { return cycleik::load_chain(robot("planar2.urdf"), "base", "tool"); }
inline cycleik::KinematicChain ur5() { return cycleik::load_chain(robot("ur5.urdf"), "base_link", "ee_link"); }
inline cycleik::KinematicChain panda() {
  return cycleik::load_chain(robot("panda.urdf"), "panda_link0", "panda_link8");
}

inline cycleik::KinematicChain polar2() { return cycleik::load_chain(robot("polar2.urdf"), "base", "tool"); }

inline std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cycleik_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace testing
