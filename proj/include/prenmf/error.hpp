#pragma once

#include <stdexcept>
#include <string>

namespace prenmf {

enum class ErrorCode {
  InvalidArgument,
  NonFinite,
  AllColumnsZero,
  Infeasible,
  InfeasiblePoint,
  MaxIterations,
  KktFailure,
  NonConvergence,
  RankMismatch,
  DegenerateChart,
  EmptyOuter,
  StartInsideQ,
  SingularQ,
  DuplicateColumns,
  IoError,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix, for re-throwing with added context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace prenmf
