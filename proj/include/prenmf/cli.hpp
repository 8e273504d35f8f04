#pragma once

#include "prenmf/matcore.hpp"
#include "prenmf/matrix_io.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace prenmf::cli {

inline constexpr int kReportVersion = 1;

struct RunConfig {
  std::string input;                    // path, or empty when a fixture is named
  std::string fixture;                  // built-in example name
  std::optional<io::Format> format;     // guessed from the extension when unset
  Index rank = 0;                       // 0: numerical rank
  std::vector<std::string> methods{"nmf", "pre-nmf", "snmf"};
  std::vector<double> epsilons{0.0};
  std::string alpha = "1";              // a number in [0, 1] or "auto"
  int seeds = 10;                       // seeds 0 .. seeds-1
  int max_outer = 1000;
  int extra_iters = 100;
  double zero_tol = kDefaultZeroTol;
  std::optional<double> target_su;      // snmf target when no pre-nmf run precedes it
  bool allow_duplicates = false;
  int fk_steps = 3;
  int fk_samples = 1000;
  std::string pgm_shape;                // "HxW": one PGM per U column
  std::filesystem::path out = "prenmf-out";
  bool serial = false;
};

/// Loads the matrix named by the config and a short label for reports.
Matrix load_input(const RunConfig& cfg, std::string* label = nullptr);

/// Each command writes its artifacts under cfg.out and returns the report
/// that it also saved as JSON.
nlohmann::json cmd_preprocess(const RunConfig& cfg);
nlohmann::json cmd_factorize(const RunConfig& cfg);
nlohmann::json cmd_npp(const RunConfig& cfg);
nlohmann::json cmd_uniqueness(const RunConfig& cfg);

/// Grey-level dump of a column reshaped column-major to h x w, scaled to 0..255.
void write_pgm(const std::filesystem::path& path, const Vector& column, Index h, Index w);

}  // namespace prenmf::cli
