// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. `--only 3,5` restricts the run.

#include "oracles.hpp"
#include "tgrf/asymptotics.hpp"
#include "tgrf/config.hpp"
#include "tgrf/diagnostics.hpp"
#include "tgrf/estimators.hpp"
#include "tgrf/fieldsim.hpp"
#include "tgrf/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace tgrf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const Vector kTheta0 = (Vector(2) << 1.5, 2.0).finished();
const Vector kThetaY = (Vector(2) << 4.5, 1.0).finished();

CovarianceModel model() {
  return CovarianceModel::exponential(
      ParamBox((Vector(2) << 0.01, 2.0 / 15.0).finished(), (Vector(2) << 100, 12).finished()));
}

LocationSet design(int side, std::uint64_t seed) { return perturbed_grid(side, 2, 0.4, seed); }

Vector normal_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector y(n);
  for (auto& v : y) v = normal(rng);
  return y;
}

double mean(const std::vector<double>& x) { return oracle::sample_mean(x); }
double se_of_mean(const std::vector<double>& x) {
  return std::sqrt(oracle::sample_variance(x) / static_cast<double>(x.size()));
}

// ---------------------------------------------------------------- 1
Outcome isserlis_oracle() {
  std::mt19937_64 rng(101);
  const LocationSet ls = oracle::random_locations(5, 2, rng);
  const SymMatrix k = model().cov_matrix(kTheta0, ls);
  double worst = 0.0;
  int count = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) {
          const double ref = oracle::square_transform_cov4(k.dense(), i, j, a, b);
          const double got = isserlis_cov4(k, i, j, a, b);
          worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
          ++count;
        }
  return {worst <= 1e-10, fmt("%d index patterns, max relative error %.3g", count, worst)};
}

// ---------------------------------------------------------------- 2
Outcome dubrule_oracle() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> nd(2, 30);
  std::uniform_real_distribution<double> rd(0.2, 8.0);
  const auto m = model();
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const LocationSet ls = oracle::random_locations(nd(rng), 2, rng);
    const Vector y = normal_vector(ls.size(), rng);
    const Vector psi = Vector::Constant(1, rd(rng));
    const double brute = oracle::loo_mse_by_refit(m.correlation_matrix(psi, ls).dense(), y);
    worst = std::max(worst, std::abs(cv_criterion(m, psi, ls, y) - brute) / brute);
  }
  return {worst <= 1e-8, fmt("50 instances, max relative error %.3g", worst)};
}

// ---------------------------------------------------------------- 3
Outcome gradient_checks() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> nd(2, 50);
  std::uniform_real_distribution<double> s2d(0.3, 5.0), rd(0.3, 6.0);
  const auto m = model();
  auto rel = [](const Vector& a, const Vector& b) {
    return (a - b).lpNorm<Eigen::Infinity>() / std::max(b.lpNorm<Eigen::Infinity>(), 1e-12);
  };
  double worst_ml = 0.0, worst_cv = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const LocationSet ls = oracle::random_locations(nd(rng), 2, rng);
    const Vector y = normal_vector(ls.size(), rng);
    const Vector th = (Vector(2) << s2d(rng), rd(rng)).finished();
    const Vector fd_ml =
        oracle::fd_gradient([&](const Vector& t) { return ml_criterion(m, t, ls, y); }, th);
    worst_ml = std::max(worst_ml, rel(ml_score(m, th, ls, y), fd_ml));
    const Vector psi = th.tail(1);
    const Vector fd_cv =
        oracle::fd_gradient([&](const Vector& p) { return cv_criterion(m, p, ls, y); }, psi);
    worst_cv = std::max(worst_cv, rel(cv_gradient(m, psi, ls, y), fd_cv));
  }
  return {worst_ml <= 1e-5 && worst_cv <= 1e-5,
          fmt("100 instances, max relative error ml_score %.3g, cv_gradient %.3g", worst_ml,
              worst_cv)};
}

// ---------------------------------------------------------------- 4, 5
struct VarianceRun {
  std::vector<double> gaussian;
  std::vector<double> square;
};

// sigma2_ML with known correlation for both cases on one fixed n=100 design.
const VarianceRun& variance_run() {
  static const VarianceRun run = [] {
    const auto m = model();
    const LocationSet ls = design(10, 404);
    const CholFactor f = cholesky(m.cov_matrix(kTheta0, ls));
    VarianceRun r;
    for (int rep = 0; rep < 2500; ++rep) {
      Engine e = make_engine(404, static_cast<std::uint64_t>(rep), Stream::Field);
      const Vector z = simulate_with_factor(f, e);
      const Vector y = (z.array().square() - 1.5).matrix();
      r.gaussian.push_back(variance_estimator(m, kTheta0.tail(1), ls, z));
      r.square.push_back(variance_estimator(m, kThetaY.tail(1), ls, y));
    }
    return r;
  }();
  return run;
}

Outcome unbiasedness() {
  const auto& r = variance_run();
  const double zg = (mean(r.gaussian) - 1.5) / se_of_mean(r.gaussian);
  const double zs = (mean(r.square) - 4.5) / se_of_mean(r.square);
  return {std::abs(zg) <= 3.0 && std::abs(zs) <= 3.0,
          fmt("n=100 N=2500: gaussian mean %.4f (truth 1.5, %.2f SE), square mean %.4f "
              "(truth 4.5, %.2f SE)",
              mean(r.gaussian), zg, mean(r.square), zs)};
}

Outcome variance_match() {
  const auto m = model();
  const LocationSet ls = design(10, 404);
  const Matrix a = m.correlation_matrix(kThetaY.tail(1), ls).dense().inverse();
  const double analytic = quadform_variance(
      {a, true}, {FourthMoment::SquareTransform, m.cov_matrix(kTheta0, ls)});
  const auto& x = variance_run().square;
  const double n = 100.0;
  const double empirical = n * oracle::sample_variance(x);
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> boot;
  std::vector<double> resample(x.size());
  for (int b = 0; b < 2000; ++b) {
    for (auto& v : resample) v = x[pick(rng)];
    boot.push_back(n * oracle::sample_variance(resample));
  }
  const double se = std::sqrt(oracle::sample_variance(boot));
  const double z = (empirical - analytic) / se;
  return {std::abs(z) <= 3.0,
          fmt("n=100: analytic n Var %.4f, empirical %.4f, bootstrap SE %.4f (%.2f SE)",
              analytic, empirical, se, z)};
}

// ---------------------------------------------------------------- 6
Outcome gaussian_sandwich() {
  const auto m = model();
  double worst_sigma = 0.0, worst_sand = 0.0;
  for (int side : {6, 10}) {
    const LocationSet ls = design(side, 606);
    const auto rep = joint_report(m, kTheta0, ls, Population::gaussian());
    const Matrix mm = matrix_M(m, kTheta0, ls).dense();
    const Matrix sig = matrix_Sigma(m, kTheta0, ls, Population::gaussian()).dense();
    worst_sigma = std::max(worst_sigma, (sig - 2.0 * mm).cwiseAbs().maxCoeff());
    worst_sand = std::max(worst_sand, (rep.sandwich_ml - 2.0 * mm.inverse()).cwiseAbs().maxCoeff());
  }
  return {worst_sigma <= 1e-10 && worst_sand <= 1e-8,
          fmt("n in {36, 100}: max |Sigma - 2M| %.3g, max |sandwich_ml - 2M^-1| %.3g", worst_sigma,
              worst_sand)};
}

// ---------------------------------------------------------------- 7
Outcome hessian_mean() {
  const auto m = model();
  const LocationSet ls = design(10, 707);
  const Matrix n_mat = matrix_N(m, kTheta0, ls);
  const CholFactor f = cholesky(m.cov_matrix(kTheta0, ls));
  const double psi = kTheta0(1), h = 1e-5 * psi;
  std::vector<double> hess;
  for (int rep = 0; rep < 2500; ++rep) {
    Engine e = make_engine(707, static_cast<std::uint64_t>(rep), Stream::Field);
    const Vector y = simulate_with_factor(f, e);
    const double gp = cv_gradient(m, Vector::Constant(1, psi + h), ls, y)(0);
    const double gm = cv_gradient(m, Vector::Constant(1, psi - h), ls, y)(0);
    hess.push_back((gp - gm) / (2 * h));
  }
  const double z = (mean(hess) - n_mat(0, 0)) / se_of_mean(hess);
  return {std::abs(z) <= 3.0, fmt("n=100 N=2500: N %.6g, Monte Carlo mean %.6g, SE %.3g (%.2f SE)",
                                  n_mat(0, 0), mean(hess), se_of_mean(hess), z)};
}

// ---------------------------------------------------------------- 8
Outcome taper_property() {
  const auto m = model();
  const LocationSet ls = design(20, 808);
  const Vector psi = kTheta0.tail(1);
  const Matrix cinv = inverse(cholesky(m.correlation_matrix(psi, ls))).dense();
  const std::vector<double> radii{1, 2, 4, 8};
  std::vector<Matrix> tapered;
  for (double k : radii) tapered.push_back(taper_inverse(cinv, ls, k));
  const CholFactor f = cholesky(m.cov_matrix(kTheta0, ls));
  std::vector<double> full;
  std::vector<std::vector<double>> est(radii.size());
  bool consistent = true;
  for (int rep = 0; rep < 2500; ++rep) {
    Engine e = make_engine(808, static_cast<std::uint64_t>(rep), Stream::Field);
    const Vector z = simulate_with_factor(f, e);
    full.push_back(mean_quadratic_form(cinv, z));
    for (std::size_t k = 0; k < radii.size(); ++k) {
      est[k].push_back(mean_quadratic_form(tapered[k], z));
    }
    if (rep == 0) {
      const double direct = variance_estimator_tapered(m, psi, ls, z, radii[1]);
      consistent = std::abs(direct - est[1][0]) <= 1e-10 * std::abs(direct);
    }
  }
  const double n = 400.0;
  const double v_full = n * oracle::sample_variance(full);
  std::vector<double> diff;
  std::string text = fmt("n=400 N=2500: n Var(full) %.4f; |diff| by K", v_full);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    diff.push_back(std::abs(n * oracle::sample_variance(est[k]) - v_full));
    text += fmt(" %g:%.4g", radii[k], diff.back());
  }
  bool ok = consistent && diff.back() < 0.1 * v_full;
  for (std::size_t k = 1; k < diff.size(); ++k) ok = ok && diff[k] <= diff[k - 1];
  return {ok, text};
}

// ---------------------------------------------------------------- 9, 10
const fs::path& artifact_root() {
  static const fs::path root = fs::current_path() / "acceptance_artifacts";
  return root;
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

const SummaryRow* find_row(const RunArtifacts& a, Eigen::Index n, const std::string& est,
                           int coord) {
  for (const auto& r : a.summary) {
    if (r.summary.n == n && r.summary.estimator == est && r.summary.coordinate == coord) return &r;
  }
  return nullptr;
}

const std::map<std::string, RunArtifacts>& trend_runs(const std::string& which) {
  static std::map<std::string, std::map<std::string, RunArtifacts>> cache;
  auto& slot = cache[which];
  if (!slot.empty()) return slot;
  for (const std::string transform : {"identity", "square_centered"}) {
    std::string text;
    if (which == "var") {
      text = "name = trend_var_" + transform +
             "\ngrid_sides = 10, 20, 30\nreplicates = 250\nseed = 909\nestimators = var\n";
    } else {
      text = "name = trend_ml_" + transform +
             "\ngrid_sides = 10, 30\nreplicates = 250\nseed = 1010\nestimators = ml\n"
             "multistarts = 2\n";
    }
    text += "transform = " + transform + "\noutput_dir = " +
            (artifact_root() / (which + "_" + transform)).string() + "\n";
    slot[transform] = run_experiment(parse(text));
  }
  return slot;
}

Outcome convergence_trends() {
  const auto& runs = trend_runs("var");
  std::map<std::string, std::vector<double>> w1;
  std::string text = "N=250 W1 over n=100,400,900:";
  bool ok = true;
  for (const auto& [transform, art] : runs) {
    text += " " + transform;
    for (Eigen::Index n : {100, 400, 900}) {
      const SummaryRow* r = find_row(art, n, "VAR", 0);
      const double v = r ? r->w1 : NAN;
      w1[transform].push_back(v);
      text += fmt(" %.4f", v);
    }
    const auto& w = w1[transform];
    ok = ok && w[1] < w[0] && w[2] < w[1];
  }
  ok = ok && w1["identity"][2] < w1["square_centered"][2];
  text += fmt("; median W1 of N(0,1) samples of size 250: %.4f", wasserstein1_baseline(250, 10000, 909));
  return {ok, text};
}

Outcome mse_decomposition() {
  bool exact = true;
  int rows = 0;
  double worst = 0.0;
  for (const char* which : {"var", "ml"}) {
    for (const auto& [transform, art] : trend_runs(which)) {
      for (const auto& r : art.summary) {
        const auto& s = r.summary;
        const double err = std::abs(s.mse - (s.bias_sq + s.variance)) / std::max(s.mse, 1e-300);
        worst = std::max(worst, err);
        exact = exact && err <= 1e-10;
        ++rows;
      }
    }
  }
  bool trend = true;
  std::string text = fmt("%d summary rows, max decomposition error %.3g; joint ML mse n=100 -> 900:",
                         rows, worst);
  for (const auto& [transform, art] : trend_runs("ml")) {
    for (int c = 0; c < 2; ++c) {
      const SummaryRow* small = find_row(art, 100, "ML", c);
      const SummaryRow* large = find_row(art, 900, "ML", c);
      if (!small || !large) {
        trend = false;
        continue;
      }
      text += fmt(" %s[%s] %.4g -> %.4g (used %d, %d)", transform.c_str(), c == 0 ? "sigma2" : "range",
                  small->summary.mse, large->summary.mse, small->summary.replicates_used,
                  large->summary.replicates_used);
      trend = trend && large->summary.mse < small->summary.mse;
    }
  }
  return {exact && trend, text};
}

// ---------------------------------------------------------------- 11
Outcome determinism() {
  const fs::path dir = artifact_root() / "determinism";
  auto cfg = parse("name = determinism\ngrid_sides = 5, 6\nreplicates = 3\nseed = 1111\n"
                   "estimators = ml, ml_sigma2, ml_range, cv, var, var_tapered, aggregate\n"
                   "lambdas = 0.3, 0.7\nasymptotics = square_transform\nmultistarts = 2\n"
                   "transform = square_centered\noutput_dir = " + dir.string() + "\n");
  std::vector<std::map<std::string, std::string>> runs;
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(dir);
    run_experiment(cfg);
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto ext = entry.path().extension();
      if (ext != ".csv" && ext != ".json") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      std::ostringstream os;
      os << in.rdbuf();
      files[entry.path().filename().string()] = os.str();
    }
    runs.push_back(files);
  }
  const bool ok = runs[0] == runs[1] && runs[0].size() >= 7;
  return {ok, fmt("%zu CSV/JSON artifacts compared byte for byte across two runs: %s", runs[0].size(),
                  ok ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Isserlis fourth moments vs matching oracle", isserlis_oracle},
      {"Dubrule LOO vs brute-force refit", dubrule_oracle},
      {"ml_score and cv_gradient vs finite differences", gradient_checks},
      {"Unbiasedness of sigma2_ML", unbiasedness},
      {"Analytic vs empirical n Var(sigma2_ML), square transform", variance_match},
      {"Gaussian sandwich identity", gaussian_sandwich},
      {"CV Hessian mean equals N", hessian_mean},
      {"Tapered variance estimator converges in K", taper_property},
      {"W1 convergence trends", convergence_trends},
      {"MSE decomposition and joint ML trend", mse_decomposition},
      {"Determinism of artifacts", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
