#include "tgrf/io.hpp"

#include "tgrf/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>

namespace tgrf {

namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string to_json(const AsymptoticReport& r) {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["population"] = r.population;
  j["mehler_inverted"] = r.mehler_inverted;
  j["n"] = r.n;
  j["theta0"] = vector_json(r.theta0);
  j["M"] = matrix_json(r.M);
  j["Sigma"] = matrix_json(r.Sigma);
  j["N"] = matrix_json(r.N);
  j["Gamma"] = matrix_json(r.Gamma);
  j["D"] = matrix_json(r.D);
  j["Psi"] = matrix_json(r.Psi);
  j["sandwich_ml"] = matrix_json(r.sandwich_ml);
  j["sandwich_cv"] = matrix_json(r.sandwich_cv);
  j["sandwich_joint"] = matrix_json(r.sandwich_joint);
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

std::string to_json(const DecayFit& fit, Eigen::Index n) {
  ordered_json j;
  j["schema"] = kDecaySchema;
  j["n"] = n;
  j["tau"] = fit.tau;
  j["c_sup_fit"] = fit.c_sup_fit;
  j["violations"] = fit.violations;
  ordered_json bins = ordered_json::array();
  for (const auto& b : fit.bins) {
    bins.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count},
                    {"max_abs", b.max_abs}});
  }
  j["bins"] = std::move(bins);
  return j.dump(2) + "\n";
}

std::string to_json(const EstimationResult& r,
                    const std::vector<std::string>& param_names) {
  ordered_json j;
  j["schema"] = kEstimateSchema;
  j["estimator"] = r.estimator;
  ordered_json theta = ordered_json::object();
  for (Eigen::Index i = 0; i < r.theta_hat.size(); ++i) {
    const std::string key = static_cast<std::size_t>(i) < param_names.size()
                                ? param_names[static_cast<std::size_t>(i)]
                                : "theta" + std::to_string(i);
    theta[key] = r.theta_hat(i);
  }
  j["theta_hat"] = std::move(theta);
  j["criterion_value"] = r.criterion_value;
  j["converged"] = r.converged;
  j["at_boundary"] = r.at_boundary;
  j["multistart_spread"] = r.multistart_spread;
  j["jitter_events"] = r.jitter_events;
  j["failed_starts"] = r.failed_starts;
  j["message"] = r.message;
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace tgrf
