#include "layersplit/image_io.hpp"
#include "layersplit/pipelines.hpp"
#include "support/synthetic.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace layersplit;
namespace fs = std::filesystem;

namespace {

const fs::path kData = LAYERSPLIT_TEST_DATA;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(LAYERSPLIT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("layersplit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    clean_ = (dir_ / "clean.png").string();
    write_png(clean_, layersplit::testing::cartoon(64));
  }
  fs::path dir_;
  std::string clean_;
};

}  // namespace

TEST_F(Cli, SynthesizeIsDeterministicAndWritesManifest) {
  ASSERT_EQ(run("synthesize " + clean_ + " -o " + (dir_ / "a.png").string() + " -Q 10"), 0);
  ASSERT_EQ(run("synthesize " + clean_ + " -o " + (dir_ / "b.png").string() + " -Q 10"), 0);
  EXPECT_EQ(slurp(dir_ / "a.png"), slurp(dir_ / "b.png"));
  EXPECT_TRUE(fs::exists(dir_ / "a.png.manifest.json"));
  EXPECT_EQ(run("synthesize " + clean_ + " -o " + (dir_ / "c.png").string()), 1);
  EXPECT_EQ(run("synthesize " + clean_ + " -o " + (dir_ / "c.png").string() + " -Q 0"), 1);
}

TEST_F(Cli, DeblockWritesLayersAndRoundTrips) {
  const std::string blocked = (dir_ / "blocked.png").string();
  ASSERT_EQ(run("synthesize " + clean_ + " -o " + blocked + " -Q 10"), 0);
  const fs::path out = dir_ / "run1";
  ASSERT_EQ(run("deblock --variant dslp --alpha 0.6 " + blocked + " --out-dir " + out.string()), 0);
  for (const char* f : {"intrinsic.png", "artifact.png", "artifact_x10.png", "manifest.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;

  const Tensor input = read_image(blocked);
  const Tensor li = read_image(out / "intrinsic.png");
  const Tensor la = read_image(out / "artifact.png");
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  const double residual = manifest["result"]["final_residual"];
  const double bound = 1.0 / 255 + residual * input.values().norm();
  const Eigen::VectorXd recon = li.values() + (la.values().array() - 0.5).matrix();
  EXPECT_LE((recon - input.values()).cwiseAbs().maxCoeff(), bound);
}

TEST_F(Cli, TvForwardsZeroBetaGamma) {
  const std::string blocked = (dir_ / "blocked.png").string();
  ASSERT_EQ(run("synthesize " + clean_ + " -o " + blocked + " -Q 10"), 0);
  ASSERT_EQ(run("deblock --variant tv --beta 50 " + blocked + " -o " + (dir_ / "tv").string()), 0);
  const auto m = nlohmann::json::parse(slurp(dir_ / "tv" / "manifest.json"));
  EXPECT_EQ(m["solver"]["beta"], 0.0);
  EXPECT_EQ(m["solver"]["gamma"], 0.0);
}

TEST_F(Cli, MetricsJsonContents) {
  const std::string blocked = (dir_ / "blocked.png").string();
  ASSERT_EQ(run("synthesize " + clean_ + " -o " + blocked + " -Q 10"), 0);
  const fs::path mj = dir_ / "m.json";
  ASSERT_EQ(run("deblock " + blocked + " -o " + (dir_ / "r").string() + " --reference " + clean_ + " --metrics-json " + mj.string()), 0);
  const auto j = nlohmann::json::parse(slurp(mj));
  for (const char* key : {"ssim", "gc", "iterations", "final_residual"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(run("deblock " + blocked + " -o " + (dir_ / "r2").string() + " --metrics-json " + mj.string()), 1);
}

TEST_F(Cli, ManifestRerunIsByteIdentical) {
  const std::string blocked = (dir_ / "blocked.png").string();
  ASSERT_EQ(run("synthesize " + clean_ + " -o " + blocked + " -Q 20"), 0);
  ASSERT_EQ(run("deblock " + blocked + " -o " + (dir_ / "first").string() + " --alpha 0.4"), 0);
  ASSERT_EQ(run("deblock --from-manifest " + (dir_ / "first" / "manifest.json").string() + " -o " + (dir_ / "second").string()), 0);
  for (const char* f : {"intrinsic.png", "artifact.png", "artifact_x10.png"})
    EXPECT_EQ(slurp(dir_ / "first" / f), slurp(dir_ / "second" / f)) << f;
}

TEST_F(Cli, ExitCodes) {
  const std::string blocked = (dir_ / "blocked.png").string();
  ASSERT_EQ(run("synthesize " + clean_ + " -o " + blocked + " -Q 10"), 0);
  EXPECT_EQ(run("deblock " + blocked + " -o " + (dir_ / "short").string() + " --max-iters 3"), 2);
  EXPECT_EQ(run("deblock " + (dir_ / "missing.png").string() + " -o " + (dir_ / "x").string()), 1);
  EXPECT_EQ(run("deblock " + blocked + " -o " + (dir_ / "x").string() + " --rho 0.9"), 1);
  EXPECT_EQ(run("deblock " + blocked + " -o " + (dir_ / "x").string() + " --variant vdslp"), 1);
  EXPECT_EQ(run("deblock " + blocked + " -o " + (dir_ / "x").string() + " --alpha notanumber"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST_F(Cli, SweepRowsAndEmptyList) {
  const fs::path csv = dir_ / "sweep.csv";
  ASSERT_EQ(run("sweep --reference " + clean_ + " --quality 10 --param alpha --values 0.2,0.6 --csv " + csv.string(),
                "LAYERSPLIT_THREADS=2"),
            0);
  std::istringstream lines(slurp(csv));
  std::string line;
  int rows = 0;
  std::getline(lines, line);
  EXPECT_EQ(line, "alpha,ssim,gc,iterations,final_residual,converged");
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 2);
  EXPECT_EQ(run("sweep --reference " + clean_ + " --quality 10 --param alpha --values ''"), 1);
  EXPECT_EQ(run("sweep --reference " + clean_ + " --quality 10 --param alpha"), 1);
  EXPECT_EQ(run("sweep --reference " + clean_ + " --quality 10 --values 1", "LAYERSPLIT_THREADS=0"), 1);
}

TEST_F(Cli, MetricsCommand) {
  const fs::path out = dir_ / "metrics.json";
  ASSERT_EQ(run("metrics --reference " + clean_ + " " + clean_ + " --json " + out.string()), 0);
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["ssim"], 1.0);
  EXPECT_EQ(j["gc"], 0.0);
}

TEST_F(Cli, VideoFrameDirectory) {
  const fs::path frames = dir_ / "frames";
  write_frames(frames, layersplit::testing::static_video(layersplit::testing::shapes(32), 4));
  ASSERT_EQ(run("synthesize " + frames.string() + " -o " + (dir_ / "blocked").string() + " -Q 10"), 0);
  ASSERT_EQ(run("deblock --variant vdslp " + (dir_ / "blocked").string() + " -o " + (dir_ / "v").string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "v" / "intrinsic" / "frame_0003.png"));
  EXPECT_TRUE(fs::exists(dir_ / "v" / "artifact_x10" / "frame_0000.png"));
}
