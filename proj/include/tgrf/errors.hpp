#ifndef TGRF_ERRORS_HPP
#define TGRF_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace tgrf {

enum class ErrorCode {
  NotPositiveDefinite,
  DimensionMismatch,
  ConvergenceFailure,
  InvalidPerturbation,
  ParamOutOfBox,
  UnsupportedOrder,
  NoVarianceSplit,
  CenteringMismatch,
  IndexOutOfRange,
  SizeCapExceeded,
  MehlerInversionUnavailable,
  AllStartsFailed,
  EmptySample,
  DegenerateScale,
  AllFiltered,
  InvalidArgument,
  ConfigError,
  IoError,
  TooManyFailures,
};

std::string_view to_string(ErrorCode code);

// Numerical failures map to CLI exit code 2; everything else is a usage or
// input problem.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tgrf

#endif  // TGRF_ERRORS_HPP
