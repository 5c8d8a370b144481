#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

namespace layerprobe::testing_util {

// Fresh, empty directory unique to the running test.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "layerprobe_unit" /
             (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace layerprobe::testing_util
