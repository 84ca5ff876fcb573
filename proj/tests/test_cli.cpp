// Copyright 2026 The cfpose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cfpose/io.hpp"

namespace cfpose {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("cfpose_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with stdout to `stdout_file` (inside dir_) and returns the
  // exit status.
  int run(const std::string& args, const std::string& stdout_file = "stdout.txt") {
    const std::string cmd = std::string("\"") + CFPOSE_CLI_PATH + "\" " + args + " > \"" +
                            (dir_ / stdout_file).string() + "\" 2> \"" +
                            (dir_ / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string slurp(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  Json json(const std::string& name) const { return Json::parse(slurp(name)); }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
};

TEST_F(Cli, SimulateDefaultsAndDeterminism) {
  ASSERT_EQ(run("simulate --out-dir " + path("a") + " --seed 4"), 0);
  ASSERT_EQ(run("simulate --out-dir " + path("b") + " --seed 4"), 0);
  const Json p = json("a/p.json");
  EXPECT_EQ(p["points"].size(), 3142u);
  EXPECT_EQ(p["dim"], 3);
  EXPECT_EQ(json("a/q.json")["dim"], 2);
  EXPECT_EQ(slurp("a/p.json"), slurp("b/p.json"));
  EXPECT_EQ(slurp("a/q.json"), slurp("b/q.json"));
  EXPECT_EQ(slurp("a/oracle.json"), slurp("b/oracle.json"));
  const Json oracle = json("a/oracle.json");
  EXPECT_EQ(oracle["theta_star"]["yaw"], 0.1);
  ASSERT_EQ(run("simulate --out-dir " + path("c") + " --seed 5"), 0);
  EXPECT_NE(slurp("a/q.json"), slurp("c/q.json"));
}

TEST_F(Cli, SimulateMinimalScene) {
  ASSERT_EQ(run("simulate --out-dir " + path("a") + " --n-points 5"), 0);
  EXPECT_EQ(json("a/p.json")["points"].size(), 5u);
  EXPECT_EQ(run("simulate --out-dir " + path("b") + " --n-points 4"), 64);
}

TEST_F(Cli, EstimateCleanScene) {
  ASSERT_EQ(run("simulate --out-dir " + path("s") + " --n-points 1000"), 0);
  ASSERT_EQ(run("estimate " + path("s/p.json") + " " + path("s/q.json") + " --oracle " +
                path("s/oracle.json") + " --out " + path("r.json")),
            0);
  const Json r = json("r.json");
  EXPECT_TRUE(r["success"].get<bool>());
  EXPECT_LT(r["error"].get<double>(), 1e-8);
  EXPECT_TRUE(r["converged"].get<bool>());
  EXPECT_EQ(r["config"]["basis"], "paper18");
}

TEST_F(Cli, EstimateAllModels) {
  for (const std::string model : {"rigid3d", "epipolar", "homography"}) {
    const std::string d = "s_" + model;
    ASSERT_EQ(run("simulate --model " + model + " --out-dir " + path(d) + " --n-points 1200"),
              0)
        << model;
    ASSERT_EQ(run("estimate " + path(d + "/p.json") + " " + path(d + "/q.json") + " --model " +
                      model + " --multistart 4 --oracle " + path(d + "/oracle.json"),
                  d + ".json"),
              0)
        << model;
    EXPECT_LT(json(d + ".json")["error"].get<double>(), 0.1) << model;
  }
}

TEST_F(Cli, RansacRescuesOutlierScene) {
  write("cfg.json",
        R"({"model": "bearing", "n_points": 3124, "seed": 5,
            "noise": {"b_p": 0.02, "outliers": 150}})");
  ASSERT_EQ(run("simulate --config " + path("cfg.json") + " --out-dir " + path("s")), 0);
  const std::string sets = path("s/p.json") + " " + path("s/q.json");
  ASSERT_EQ(run("estimate " + sets + " --oracle " + path("s/oracle.json"), "plain.json"), 0);
  ASSERT_EQ(
      run("estimate " + sets + " --ransac --oracle " + path("s/oracle.json"), "ransac.json"), 0);
  const Json plain = json("plain.json");
  const Json ransac = json("ransac.json");
  EXPECT_FALSE(plain["success"].get<bool>());
  EXPECT_TRUE(ransac["success"].get<bool>());
  EXPECT_LT(ransac["error"].get<double>(), plain["error"].get<double>());
  EXPECT_TRUE(ransac.contains("ransac"));
}

TEST_F(Cli, OcclusionKmeansDiagnostics) {
  write("cfg.json", R"({"n_points": 16000, "seed": 8, "occlusion": {"gray_levels": 4}})");
  ASSERT_EQ(run("simulate --config " + path("cfg.json") + " --out-dir " + path("s")), 0);
  EXPECT_TRUE(json("s/p.json").contains("gray"));
  ASSERT_EQ(run("estimate " + path("s/p.json") + " " + path("s/q.json") +
                    " --occlusion-kmeans 5 --oracle " + path("s/oracle.json"),
                "r.json"),
            0);
  const Json r = json("r.json");
  ASSERT_TRUE(r.contains("occlusion"));
  EXPECT_EQ(r["occlusion"]["p_clusters"].size(), 5u);
  EXPECT_EQ(r["occlusion"]["kept_pairs"].size(), 4u);
  EXPECT_TRUE(r["success"].get<bool>());
}

TEST_F(Cli, ExitCodes) {
  ASSERT_EQ(run("simulate --out-dir " + path("s") + " --n-points 200"), 0);
  const std::string sets = path("s/p.json") + " " + path("s/q.json");
  EXPECT_EQ(run("estimate " + sets + " --model homography"), 64);
  EXPECT_EQ(run("estimate " + sets + " --normalize sometimes"), 64);
  EXPECT_EQ(run("frobnicate"), 64);
  EXPECT_EQ(run(""), 64);
  EXPECT_EQ(run("estimate " + path("missing.json") + " " + path("s/q.json")), 74);
  EXPECT_EQ(run("segment " + path("missing.png")), 74);
  write("broken.json", "{\n  \"dim\": 3,\n  \"points\": [\n");
  EXPECT_EQ(run("estimate " + path("broken.json") + " " + path("s/q.json")), 65);
  EXPECT_NE(slurp("stderr.txt").find("broken.json:"), std::string::npos) << slurp("stderr.txt");
  write("cfg.json", R"({"noise": {"bp": 0.1}})");
  EXPECT_EQ(run("simulate --config " + path("cfg.json") + " --out-dir " + path("t")), 65);
  EXPECT_NE(slurp("stderr.txt").find("bp"), std::string::npos);
  write("cfg2.json", R"({"model": "bearing", "n_points": 400, "seed": 5,
                         "noise": {"outliers": 40, "b_p": 0.002}})");
  ASSERT_EQ(run("simulate --config " + path("cfg2.json") + " --out-dir " + path("o")), 0);
  EXPECT_EQ(run("estimate " + path("o/p.json") + " " + path("o/q.json") +
                " --ransac --ransac-threshold 1e-9 --ransac-min-inliers 0.5"),
            2);
}

TEST_F(Cli, BenchmarkWritesCsvAndJson) {
  ASSERT_EQ(run("benchmark table1a --trials 1 --seed 3 --out-dir " + path("b")), 0);
  std::istringstream csv(slurp("b/table1a.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) lines += !line.empty();
  EXPECT_EQ(lines, 7);
  const Json j = json("b/table1a.json");
  EXPECT_EQ(j["cells"].size(), 6u);
  EXPECT_EQ(run("benchmark table9 --out-dir " + path("c")), 64);
}

TEST_F(Cli, ImagesSegmentAndRegister) {
  ASSERT_EQ(run("simulate --model homography --images --out-dir " + path("s")), 0);
  ASSERT_TRUE(fs::exists(dir_ / "s/p.png"));
  ASSERT_EQ(run("segment " + path("s/p.png") + " --out " + path("ps.json")), 0);
  const Json ps = json("ps.json");
  EXPECT_EQ(ps["dim"], 2);
  EXPECT_GT(ps["points"].size(), 3142u);
  ASSERT_EQ(run("register " + path("s/p.png") + " " + path("s/q.png") +
                    " --theta 0.1,-0.08,0.12,0.6,-0.4,0.8 --overlay " + path("ov.png") +
                    " --out " + path("at_truth.json")),
            0);
  ASSERT_EQ(run("register " + path("s/p.png") + " " + path("s/q.png") +
                " --theta 0.3,-0.08,0.12,0.6,-0.4,0.8 --out " + path("off.json")),
            0);
  const Json at = json("at_truth.json");
  const Json off = json("off.json");
  EXPECT_LT(at["p95_px"].get<double>(), 2.0);
  EXPECT_GT(off["mean_px"].get<double>(), at["mean_px"].get<double>());
  EXPECT_TRUE(fs::exists(dir_ / "ov.png"));
  ASSERT_EQ(run("register " + path("s/p.png") + " " + path("s/p.png") +
                " --theta 0,0,0,0,0,0 --out " + path("same.json")),
            0);
  EXPECT_LT(json("same.json")["mean_px"].get<double>(), 1e-9);
}

}  // namespace
}  // namespace cfpose
