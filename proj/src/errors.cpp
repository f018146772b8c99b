#include "tgrf/errors.hpp"

namespace tgrf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InvalidPerturbation: return "InvalidPerturbation";
    case ErrorCode::ParamOutOfBox: return "ParamOutOfBox";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::NoVarianceSplit: return "NoVarianceSplit";
    case ErrorCode::CenteringMismatch: return "CenteringMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SizeCapExceeded: return "SizeCapExceeded";
    case ErrorCode::MehlerInversionUnavailable: return "MehlerInversionUnavailable";
    case ErrorCode::AllStartsFailed: return "AllStartsFailed";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::DegenerateScale: return "DegenerateScale";
    case ErrorCode::AllFiltered: return "AllFiltered";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::SizeCapExceeded:
    case ErrorCode::MehlerInversionUnavailable:
    case ErrorCode::AllStartsFailed:
    case ErrorCode::DegenerateScale:
    case ErrorCode::AllFiltered:
    case ErrorCode::TooManyFailures:
      return true;
    default:
      return false;
  }
}

}  // namespace tgrf
