#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "tgrf_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI with stdout to `out` (inside the scratch dir) and returns its exit code.
int run(const std::string& args, const std::string& out = "stdout.txt") {
  const std::string cmd = std::string(TGRF_CLI_PATH) + " " + args + " > " +
                          (scratch() / out).string() + " 2> " + (scratch() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

const char* kSmall =
    "name = cli\n"
    "grid_sides = 4\n"
    "replicates = 2\n"
    "multistarts = 2\n"
    "estimators = ml, cv, var\n";

}  // namespace

TEST(Cli, VersionAndUsage) {
  EXPECT_EQ(run("version"), 0);
  EXPECT_EQ(read(scratch() / "stdout.txt").rfind("tgrf ", 0), 0u);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("version --seed notanumber"), 1);
  EXPECT_EQ(run("estimate"), 1);
  EXPECT_EQ(run("version --config /nonexistent.cfg"), 1);
  const fs::path bad = write_config("bad.cfg", "colour = blue\n");
  EXPECT_EQ(run("version --config " + bad.string()), 1);
  EXPECT_NE(read(scratch() / "stderr.txt").find("grid_sides"), std::string::npos);
}

TEST(Cli, NumericalFailureExitsTwo) {
  const fs::path cfg = write_config("cap.cfg", std::string(kSmall) + "quadform_cap = 5\n");
  EXPECT_EQ(run("asymptotics --population square_transform --config " + cfg.string()), 2);
  EXPECT_NE(read(scratch() / "stderr.txt").find("SizeCapExceeded"), std::string::npos);
}

TEST(Cli, SimulateThenEstimate) {
  const fs::path cfg = write_config("small.cfg", kSmall);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --seed 4 --output " +
                (scratch() / "sample.csv").string()), 0);
  const std::string sample = read(scratch() / "sample.csv");
  EXPECT_NE(sample.find("# seed=4"), std::string::npos);
  for (const char* est : {"ml", "cv", "var", "var_tapered", "ml_sigma2", "ml_range"}) {
    EXPECT_EQ(run("estimate --config " + cfg.string() + " --input " +
                  (scratch() / "sample.csv").string() + " --estimator " + est,
                  "est.json"), 0) << est;
    EXPECT_NE(read(scratch() / "est.json").find("\"schema\""), std::string::npos) << est;
  }
  EXPECT_EQ(run("estimate --input " + (scratch() / "missing.csv").string()), 1);
  EXPECT_EQ(run("estimate --estimator magic --input " + (scratch() / "sample.csv").string()), 1);
}

TEST(Cli, BoundaryCvEstimate) {
  // A constant field is predicted best by the strongest correlation, so the
  // CV range runs to the upper edge of its box.
  std::ofstream out(scratch() / "flat.csv");
  out << "index,x1,x2,value\n";
  for (int i = 0; i < 16; ++i) out << i << ',' << (i % 4 + 1) << ',' << (i / 4 + 1) << ",1\n";
  out.close();
  EXPECT_EQ(run("estimate --estimator cv --input " + (scratch() / "flat.csv").string(), "flat.json"), 0);
  const std::string json = read(scratch() / "flat.json");
  EXPECT_NE(json.find("\"at_boundary\": true"), std::string::npos) << json;
}

TEST(Cli, McRunAsymptoticsAndDecay) {
  const fs::path cfg = write_config("mc.cfg", kSmall);
  const fs::path dir = scratch() / "mc";
  ASSERT_EQ(run("mc-run --config " + cfg.string() + " --output-dir " + dir.string()), 0);
  const std::string manifest = read(dir / "manifest.json");
  EXPECT_NE(manifest.find("\"config_hash\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "estimates.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));

  ASSERT_EQ(run("asymptotics --config " + cfg.string(), "asy.json"), 0);
  EXPECT_NE(read(scratch() / "asy.json").find("\"Sigma\""), std::string::npos);

  ASSERT_EQ(run("decay-check --config " + cfg.string(), "decay.json"), 0);
  EXPECT_NE(read(scratch() / "decay.json").find("\"bins\""), std::string::npos);

  const std::string env = "TGRF_OUTPUT_DIR=" + (scratch() / "env").string() + " ";
  const std::string cmd = env + TGRF_CLI_PATH + " mc-run --config " + cfg.string() + " > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(scratch() / "env" / "manifest.json"));
}
