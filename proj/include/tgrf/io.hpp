#ifndef TGRF_IO_HPP
#define TGRF_IO_HPP

// JSON serialization of reports. Every document carries a "schema" field.

#include "tgrf/asymptotics.hpp"
#include "tgrf/diagnostics.hpp"
#include "tgrf/estimators.hpp"

#include <string>

namespace tgrf {

inline constexpr const char* kReportSchema = "tgrf.asymptotic_report/1";
inline constexpr const char* kDecaySchema = "tgrf.decay_fit/1";
inline constexpr const char* kEstimateSchema = "tgrf.estimation_result/1";
inline constexpr const char* kManifestSchema = "tgrf.manifest/1";

std::string to_json(const AsymptoticReport& report);
std::string to_json(const DecayFit& fit, Eigen::Index n);
std::string to_json(const EstimationResult& result,
                    const std::vector<std::string>& param_names);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
std::string format_double(double x);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace tgrf

#endif  // TGRF_IO_HPP
