#include "prenmf/fixtures.hpp"

#include "prenmf/error.hpp"
#include "prenmf/matrix_io.hpp"

#include <algorithm>
#include <cstdlib>

#ifndef PRENMF_DEFAULT_FIXTURE_DIR
#define PRENMF_DEFAULT_FIXTURE_DIR "data/fixtures"
#endif

namespace prenmf {

std::filesystem::path fixture_dir() {
  if (const char* env = std::getenv("PRENMF_FIXTURE_DIR"); env && *env) return env;
  return PRENMF_DEFAULT_FIXTURE_DIR;
}

std::vector<std::string> fixture_names() {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(fixture_dir(), ec)) {
    if (entry.path().extension() == ".csv") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

Matrix load_fixture(const std::string& name) {
  const auto path = fixture_dir() / (name + ".csv");
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, "unknown fixture '" + name + "' (looked in " + fixture_dir().string() + ")");
  }
  return io::read_matrix(path, io::Format::Csv);
}

}  // namespace prenmf
