#include "tgrf/fieldsim.hpp"

#include "tgrf/errors.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

namespace tgrf {

namespace {

constexpr double kCenteringTol = 1e-12;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::IoError, "not a number: '" + s + "'");
}

}  // namespace

// ---------------------------------------------------------------- Transform

double double_factorial_odd(int r) {
  double v = 1.0;
  for (int k = 2 * r - 1; k > 1; k -= 2) v *= k;
  return v;
}

Transform Transform::identity() { return {}; }

Transform Transform::square_centered(double latent_variance) {
  Transform t;
  t.kind = Kind::SquareCentered;
  t.centering = latent_variance;
  return t;
}

Transform Transform::even_monomial(int r) {
  if (r < 1) {
    throw Error(ErrorCode::InvalidArgument, "even monomial power must be >= 1");
  }
  Transform t;
  t.kind = Kind::EvenMonomial;
  t.power = r;
  t.centering = double_factorial_odd(r);
  return t;
}

Transform Transform::make_custom(std::string name,
                                 std::function<double(double)> f,
                                 double centering) {
  Transform t;
  t.kind = Kind::Custom;
  t.custom = std::move(f);
  t.custom_name = std::move(name);
  t.centering = centering;
  return t;
}

double Transform::operator()(double z) const {
  switch (kind) {
    case Kind::Identity: return z - centering;
    case Kind::SquareCentered: return z * z - centering;
    case Kind::EvenMonomial: return std::pow(z, 2 * power) - centering;
    case Kind::Custom: return custom(z) - centering;
  }
  return z;
}

std::string Transform::name() const {
  switch (kind) {
    case Kind::Identity: return "identity";
    case Kind::SquareCentered: return "square_centered";
    case Kind::EvenMonomial: return "even_monomial_" + std::to_string(power);
    case Kind::Custom: return "custom:" + custom_name;
  }
  return "unknown";
}

std::optional<Transform> parse_transform(const std::string& name,
                                         double latent_variance) {
  if (name == "identity") return Transform::identity();
  if (name == "square_centered") return Transform::square_centered(latent_variance);
  const std::string prefix = "even_monomial_";
  if (name.rfind(prefix, 0) == 0) {
    const int r = std::stoi(name.substr(prefix.size()));
    Transform t = Transform::even_monomial(r);
    t.centering = double_factorial_odd(r) * std::pow(latent_variance, r);
    return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- simulation

Vector simulate_with_factor(const CholFactor& factor, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector eps(factor.order());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = normal(engine);
  return factor.lower().triangularView<Eigen::Lower>() * eps;
}

FieldSample simulate_latent(const CovarianceModel& model, const Vector& theta0,
                            std::shared_ptr<const LocationSet> ls,
                            std::uint64_t seed, std::uint64_t replicate) {
  if (!ls) throw Error(ErrorCode::InvalidArgument, "null location set");
  const CholFactor factor = cholesky(model.cov_matrix(theta0, *ls));
  Engine engine = make_engine(seed, replicate, Stream::Field);

  FieldSample out;
  out.values = simulate_with_factor(factor, engine);
  out.locations = std::move(ls);
  out.provenance.seed = seed;
  out.provenance.replicate = replicate;
  out.provenance.latent_family = model.family().name();
  out.provenance.latent_theta = theta0;
  out.provenance.latent_variance = model.family().value(
      theta0, Vector::Zero(out.locations->dim()));
  return out;
}

FieldSample apply_transform(const FieldSample& z, const Transform& t) {
  const double v = z.provenance.latent_variance;
  double expected = 0.0;
  bool check = true;
  switch (t.kind) {
    case Transform::Kind::Identity: expected = 0.0; break;
    case Transform::Kind::SquareCentered: expected = v; break;
    case Transform::Kind::EvenMonomial:
      expected = double_factorial_odd(t.power) * std::pow(v, t.power);
      break;
    case Transform::Kind::Custom: check = false; break;
  }
  if (check && std::abs(t.centering - expected) > kCenteringTol * std::max(1.0, std::abs(expected))) {
    std::ostringstream os;
    os.precision(17);
    os << t.name() << " centering " << t.centering << " but latent marginal variance "
       << v << " implies " << expected;
    throw Error(ErrorCode::CenteringMismatch, os.str());
  }

  FieldSample y = z;
  y.values = z.values.unaryExpr([&](double x) { return t(x); });
  y.provenance.transform = t.name();
  return y;
}

std::optional<TransformedCovariance> transformed_covariance(
    const CovarianceModel& latent_model, const Vector& theta0,
    const Transform& t) {
  latent_model.check_in_box(theta0);
  if (t.kind == Transform::Kind::Identity) {
    return TransformedCovariance{latent_model, theta0};
  }
  if (t.kind != Transform::Kind::SquareCentered ||
      latent_model.family().name() != "exponential") {
    return std::nullopt;
  }
  // Cov(Y(s), Y(s')) = 2 k_Z(s - s')^2 = 2 sigma^4 exp(-2 ||s - s'|| / rho).
  const Vector& lo = latent_model.box().lower();
  const Vector& hi = latent_model.box().upper();
  Vector new_lo(2), new_hi(2), theta(2);
  new_lo << 2.0 * lo(0) * lo(0), 0.5 * lo(1);
  new_hi << 2.0 * hi(0) * hi(0), 0.5 * hi(1);
  theta << 2.0 * theta0(0) * theta0(0), 0.5 * theta0(1);
  return TransformedCovariance{
      CovarianceModel(latent_model.family_ptr(), ParamBox(new_lo, new_hi)), theta};
}

std::optional<TransformedCovariance> invert_square_transform(
    const CovarianceModel& y_model, const Vector& theta_y) {
  if (y_model.family().name() != "exponential") return std::nullopt;
  const Vector& lo = y_model.box().lower();
  const Vector& hi = y_model.box().upper();
  Vector new_lo(2), new_hi(2), theta(2);
  new_lo << std::sqrt(0.5 * lo(0)), 2.0 * lo(1);
  new_hi << std::sqrt(0.5 * hi(0)), 2.0 * hi(1);
  theta << std::sqrt(0.5 * theta_y(0)), 2.0 * theta_y(1);
  return TransformedCovariance{
      CovarianceModel(y_model.family_ptr(), ParamBox(new_lo, new_hi)), theta};
}

// ---------------------------------------------------------------- CSV

void write_csv(std::ostream& out, const FieldSample& sample) {
  const auto& p = sample.provenance;
  out.precision(17);
  out << "# seed=" << p.seed << '\n';
  out << "# replicate=" << p.replicate << '\n';
  out << "# transform=" << p.transform << '\n';
  out << "# latent_family=" << p.latent_family << '\n';
  out << "# latent_theta=";
  for (Eigen::Index i = 0; i < p.latent_theta.size(); ++i) {
    out << (i ? " " : "") << p.latent_theta(i);
  }
  out << '\n';
  out << "# latent_variance=" << p.latent_variance << '\n';

  const LocationSet& ls = *sample.locations;
  out << "index";
  for (int k = 0; k < ls.dim(); ++k) out << ",x" << (k + 1);
  out << ",value\n";
  for (Eigen::Index i = 0; i < ls.size(); ++i) {
    out << i;
    for (int k = 0; k < ls.dim(); ++k) out << ',' << ls.points()(i, k);
    out << ',' << sample.values(i) << '\n';
  }
}

FieldSample read_sample_csv(std::istream& in) {
  FieldSample s;
  std::string line;
  int dim = -1;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(body.substr(0, eq));
      const std::string val = trim(body.substr(eq + 1));
      auto& p = s.provenance;
      if (key == "seed") p.seed = std::stoull(val);
      else if (key == "replicate") p.replicate = std::stoull(val);
      else if (key == "transform") p.transform = val;
      else if (key == "latent_family") p.latent_family = val;
      else if (key == "latent_variance") p.latent_variance = parse_double(val);
      else if (key == "latent_theta") {
        std::vector<double> v;
        std::istringstream is(val);
        double x;
        while (is >> x) v.push_back(x);
        p.latent_theta = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      continue;
    }
    const auto cells = split(line, ',');
    if (dim < 0) {
      if (cells.size() < 3 || trim(cells.front()) != "index" || trim(cells.back()) != "value") {
        throw Error(ErrorCode::IoError, "sample CSV header must be index,x1..xd,value");
      }
      dim = static_cast<int>(cells.size()) - 2;
      continue;
    }
    if (static_cast<int>(cells.size()) != dim + 2) {
      throw Error(ErrorCode::IoError, "sample CSV row has wrong column count: " + line);
    }
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) row.push_back(parse_double(cells[c]));
    rows.push_back(std::move(row));
  }
  if (dim < 0 || rows.empty()) {
    throw Error(ErrorCode::IoError, "sample CSV has no data rows");
  }
  Matrix pts(static_cast<Eigen::Index>(rows.size()), dim);
  s.values.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int k = 0; k < dim; ++k) pts(static_cast<Eigen::Index>(r), k) = rows[r][k];
    s.values(static_cast<Eigen::Index>(r)) = rows[r][dim];
  }
  s.locations = std::make_shared<const LocationSet>(std::move(pts));
  return s;
}

}  // namespace tgrf
