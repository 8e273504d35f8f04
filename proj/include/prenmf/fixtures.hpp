#pragma once

#include "prenmf/matcore.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace prenmf {

// Built-in example matrices shipped as CSV under data/fixtures.
// PRENMF_FIXTURE_DIR in the environment overrides the build-time location.
std::filesystem::path fixture_dir();
std::vector<std::string> fixture_names();
Matrix load_fixture(const std::string& name);

}  // namespace prenmf
