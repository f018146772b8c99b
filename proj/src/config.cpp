#include "tgrf/config.hpp"

#include "tgrf/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace tgrf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::ConfigError, "key '" + key + "': " + why);
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  // Allow simple fractions such as 2/15.
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    return to_double(key, trim(s.substr(0, slash))) / to_double(key, trim(s.substr(slash + 1)));
  }
  bad(key, "not a number: '" + s + "'");
}

long long to_int(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  bad(key, "not an integer: '" + s + "'");
}

Vector to_vector(const std::string& key, const std::string& s) {
  const auto items = split_list(s);
  if (items.empty()) bad(key, "empty list");
  Vector v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(key, items[i]);
  return v;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
  return s;
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_same_v<T, std::string>) s += v[i];
    else if constexpr (std::is_floating_point_v<T>) s += fmt(v[i]);
    else s += std::to_string(v[i]);
  }
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"name", [](auto& c, auto&, auto& v) { c.name = v; }},
      {"grid_sides", [](auto& c, auto& k, auto& v) {
         c.grid_sides.clear();
         for (const auto& s : split_list(v)) c.grid_sides.push_back(static_cast<int>(to_int(k, s)));
       }},
      {"dim", [](auto& c, auto& k, auto& v) { c.dim = static_cast<int>(to_int(k, v)); }},
      {"perturb", [](auto& c, auto& k, auto& v) { c.perturb = to_double(k, v); }},
      {"locations", [](auto& c, auto& k, auto& v) {
         if (v == "per_replicate") c.locations = LocationMode::PerReplicate;
         else if (v == "shared") c.locations = LocationMode::Shared;
         else bad(k, "expected per_replicate or shared");
       }},
      {"family", [](auto& c, auto&, auto& v) { c.family = v; }},
      {"theta0", [](auto& c, auto& k, auto& v) { c.theta0 = to_vector(k, v); }},
      {"box_lower", [](auto& c, auto& k, auto& v) { c.box_lower = to_vector(k, v); }},
      {"box_upper", [](auto& c, auto& k, auto& v) { c.box_upper = to_vector(k, v); }},
      {"transform", [](auto& c, auto&, auto& v) { c.transform = v; }},
      {"truth", [](auto& c, auto& k, auto& v) { c.truth = to_vector(k, v); }},
      {"estimators", [](auto& c, auto&, auto& v) { c.estimators = split_list(v); }},
      {"taper_radii", [](auto& c, auto& k, auto& v) {
         c.taper_radii.clear();
         for (const auto& s : split_list(v)) c.taper_radii.push_back(to_double(k, s));
       }},
      {"lambdas", [](auto& c, auto& k, auto& v) {
         c.lambdas.clear();
         for (const auto& s : split_list(v)) c.lambdas.push_back(to_double(k, s));
       }},
      {"cv_lower", [](auto& c, auto& k, auto& v) { c.cv_lower = to_vector(k, v); }},
      {"cv_upper", [](auto& c, auto& k, auto& v) { c.cv_upper = to_vector(k, v); }},
      {"filter_lower", [](auto& c, auto& k, auto& v) { c.filter_lower = to_vector(k, v); }},
      {"filter_upper", [](auto& c, auto& k, auto& v) { c.filter_upper = to_vector(k, v); }},
      {"replicates", [](auto& c, auto& k, auto& v) { c.replicates = static_cast<int>(to_int(k, v)); }},
      {"seed", [](auto& c, auto& k, auto& v) {
         const long long s = to_int(k, v);
         if (s < 0) bad(k, "seed must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"multistarts", [](auto& c, auto& k, auto& v) { c.multistarts = static_cast<int>(to_int(k, v)); }},
      {"grad_tol", [](auto& c, auto& k, auto& v) { c.grad_tol = to_double(k, v); }},
      {"max_iter", [](auto& c, auto& k, auto& v) { c.max_iter = static_cast<int>(to_int(k, v)); }},
      {"asymptotics", [](auto& c, auto&, auto& v) { c.asymptotics = v; }},
      {"asymptotics_reps", [](auto& c, auto& k, auto& v) { c.asymptotics_reps = static_cast<int>(to_int(k, v)); }},
      {"quadform_cap", [](auto& c, auto& k, auto& v) { c.quadform_cap = static_cast<int>(to_int(k, v)); }},
      {"decay_tau", [](auto& c, auto& k, auto& v) { c.decay_tau = to_double(k, v); }},
      {"decay_bins", [](auto& c, auto& k, auto& v) { c.decay_bins = static_cast<int>(to_int(k, v)); }},
      {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    it->second(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  return parse_config(in);
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (c.grid_sides.empty()) fail("grid_sides is empty");
  for (int L : c.grid_sides) {
    if (L < 1) fail("grid_sides must be >= 1");
  }
  if (c.dim < 1 || c.dim > 3) fail("dim must be 1, 2 or 3");
  if (!(c.perturb >= 0.0 && c.perturb < 0.5)) fail("perturb must lie in [0, 0.5)");
  if (c.theta0.size() != c.box_lower.size() || c.theta0.size() != c.box_upper.size()) {
    fail("theta0, box_lower and box_upper must have equal length");
  }
  for (Eigen::Index i = 0; i < c.theta0.size(); ++i) {
    if (!(c.box_lower(i) > 0.0 && c.box_lower(i) < c.box_upper(i))) {
      fail("box needs 0 < lower < upper");
    }
    if (c.theta0(i) < c.box_lower(i) || c.theta0(i) > c.box_upper(i)) {
      fail("theta0 outside the box");
    }
  }
  if (c.cv_lower.size() != c.cv_upper.size()) fail("cv_lower/cv_upper lengths differ");
  if (c.filter_lower.size() != c.filter_upper.size()) fail("filter_lower/filter_upper lengths differ");
  if (c.replicates < 1) fail("replicates must be >= 1");
  if (c.multistarts < 0) fail("multistarts must be >= 0");
  if (!(c.grad_tol > 0.0)) fail("grad_tol must be > 0");
  if (c.max_iter < 1) fail("max_iter must be >= 1");
  static const std::set<std::string> known{"ml", "ml_sigma2", "ml_range", "cv",
                                           "var", "var_tapered", "aggregate"};
  for (const auto& e : c.estimators) {
    if (!known.count(e)) fail("unknown estimator '" + e + "'");
  }
  const auto has = [&](const char* e) {
    return std::find(c.estimators.begin(), c.estimators.end(), e) != c.estimators.end();
  };
  if (has("aggregate") && !(has("ml") && has("cv"))) {
    fail("aggregate needs both ml and cv");
  }
  for (double l : c.lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) fail("lambdas must lie in [0, 1]");
  }
  for (double k : c.taper_radii) {
    if (!(k >= 0.0)) fail("taper_radii must be >= 0");
  }
  static const std::set<std::string> pops{"none", "gaussian", "square_transform", "monte_carlo"};
  if (!pops.count(c.asymptotics)) fail("unknown asymptotics population '" + c.asymptotics + "'");
  if (c.asymptotics_reps < 2) fail("asymptotics_reps must be >= 2");
  if (c.quadform_cap < 1) fail("quadform_cap must be >= 1");
  if (!(c.decay_tau > 0.0)) fail("decay_tau must be > 0");
  if (c.decay_bins < 1) fail("decay_bins must be >= 1");
  if (c.truth && c.truth->size() != c.theta0.size()) fail("truth length differs from theta0");
}

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "name = " << c.name << '\n'
     << "grid_sides = " << fmt_list(c.grid_sides) << '\n'
     << "dim = " << c.dim << '\n'
     << "perturb = " << fmt(c.perturb) << '\n'
     << "locations = " << (c.locations == LocationMode::Shared ? "shared" : "per_replicate") << '\n'
     << "family = " << c.family << '\n'
     << "theta0 = " << fmt(c.theta0) << '\n'
     << "box_lower = " << fmt(c.box_lower) << '\n'
     << "box_upper = " << fmt(c.box_upper) << '\n'
     << "transform = " << c.transform << '\n';
  if (c.truth) os << "truth = " << fmt(*c.truth) << '\n';
  os << "estimators = " << fmt_list(c.estimators) << '\n'
     << "taper_radii = " << fmt_list(c.taper_radii) << '\n'
     << "lambdas = " << fmt_list(c.lambdas) << '\n'
     << "cv_lower = " << fmt(c.cv_lower) << '\n'
     << "cv_upper = " << fmt(c.cv_upper) << '\n'
     << "filter_lower = " << fmt(c.filter_lower) << '\n'
     << "filter_upper = " << fmt(c.filter_upper) << '\n'
     << "replicates = " << c.replicates << '\n'
     << "seed = " << c.seed << '\n'
     << "multistarts = " << c.multistarts << '\n'
     << "grad_tol = " << fmt(c.grad_tol) << '\n'
     << "max_iter = " << c.max_iter << '\n'
     << "asymptotics = " << c.asymptotics << '\n'
     << "asymptotics_reps = " << c.asymptotics_reps << '\n'
     << "quadform_cap = " << c.quadform_cap << '\n'
     << "decay_tau = " << fmt(c.decay_tau) << '\n'
     << "decay_bins = " << c.decay_bins << '\n'
     << "output_dir = " << c.output_dir << '\n';
  return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_schema() {
  return R"(Experiment config: one `key = value` per line, '#' comments, lists comma-separated.
  name              run label
  grid_sides        list of L; each run uses L^dim points           (10,20,30)
  dim               1, 2 or 3                                        (2)
  perturb           uniform perturbation half-width u in [0, 0.5)   (0.4)
  locations         per_replicate | shared                           (per_replicate)
  family            covariance family of the latent field            (exponential)
  theta0            latent parameters, e.g. sigma2,range             (1.5,2)
  box_lower         parameter box, lower bounds                      (0.01,2/15)
  box_upper         parameter box, upper bounds                      (100,12)
  transform         identity | square_centered | even_monomial_<r>   (identity)
  truth             parameters of Y used for error summaries         (derived)
  estimators        ml, ml_sigma2, ml_range, cv, var, var_tapered, aggregate
  taper_radii       max-norm taper radii K for var_tapered           (1,2,4,8)
  lambdas           aggregation weights in [0, 1]                    (0.1,...,0.9)
  cv_lower/cv_upper CV search box for the correlation parameters     (2/15 / 12)
  filter_lower/filter_upper  CV estimates outside are excluded       (0.14 / 11.4)
  replicates        Monte Carlo replicates per grid size             (250)
  seed              master seed                                      (1)
  multistarts       random starts per optimization                   (5)
  grad_tol          projected-gradient tolerance, log coordinates    (1e-8)
  max_iter          iteration cap per start                          (200)
  asymptotics       none | gaussian | square_transform | monte_carlo (none)
  asymptotics_reps  replicates for the monte_carlo population        (2500)
  quadform_cap      largest n for O(n^4) fourth-moment sums          (150)
  decay_tau         tau of the inverse-covariance decay envelope     (1)
  decay_bins        distance bins for decay-check                    (20)
  output_dir        artifact directory                               (tgrf_out)
)";
}

}  // namespace tgrf
