// Copyright 2026 The humsim Authors.
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

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "humsim/exercises.h"
#include "humsim/logs.h"
#include "humsim/model.h"
#include "humsim/vision.h"
#include "humsim/world.h"
#include "test_support.h"

namespace humsim {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult RunCli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string(HUMSIM_CLI_PATH) + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = ReadTextFile(out);
  r.err = ReadTextFile(err);
  return r;
}

std::string Scene(const char* name) {
  return (DefaultAssetDir() / "scenes" / name).string();
}

TEST_CASE("idle run of 240 steps ends at one second") {
  const fs::path dir = testing::ScratchDir("cli_idle");
  const CliResult r = RunCli("simulate --config " + Scene("empty.yaml") +
                                 " --steps 240 --log " + (dir / "log").string(),
                             dir);
  REQUIRE(r.exit_code == 0);
  const KeyValues kv = ParseKeyValues(r.out);
  CHECK(Lookup(kv, "sim_time") == "1");
  CHECK(Lookup(kv, "steps") == "240");
  const CsvTable traj = ReadCsv(dir / "log" / "trajectory.csv");
  CHECK(traj.rows.back()[0] == "1");
}

TEST_CASE("real-time factor one keeps wall time at or above sim time") {
  const fs::path dir = testing::ScratchDir("cli_realtime");
  const auto start = std::chrono::steady_clock::now();
  const CliResult r = RunCli("simulate --config " + Scene("empty.yaml") +
                                 " --steps 48 --realtime-factor 1",
                             dir);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(r.exit_code == 0);
  CHECK(wall >= 48.0 / 240.0);
}

TEST_CASE("missing config fails with a diagnostic") {
  const fs::path dir = testing::ScratchDir("cli_missing");
  const CliResult r =
      RunCli("simulate --config " + (dir / "nope.yaml").string(), dir);
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("nope.yaml") != std::string::npos);
}

TEST_CASE("grading gaze logs") {
  const fs::path dir = testing::ScratchDir("cli_gaze");
  const fs::path log = dir / "log";
  fs::create_directories(log);
  WriteKeyValues(log / "manifest.txt", {{"exercise", "gaze"}});
  {
    std::ofstream csv(log / "gaze.csv");
    csv << "t,theta\n0,0\n0.1,0\n0.2,0\n";
  }
  CliResult r = RunCli("grade gaze --log " + log.string(), dir);
  CHECK(r.exit_code == 0);
  CHECK(Lookup(ParseKeyValues(r.out), "pass") == "true");
  CHECK(fs::exists(log / "grade.txt"));

  r = RunCli("grade push --log " + log.string(), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("gaze") != std::string::npos);
}

TEST_CASE("grading an untouched push log prints zero") {
  const fs::path dir = testing::ScratchDir("cli_push");
  const fs::path log = dir / "log";
  fs::create_directories(log);
  const LoadedScene scene = LoadScene(Scene("push.yaml"));
  {
    World world(scene.model, scene.config);
    Session session(world, 2000, 0.0, log);
    session.Idle(2.5);
  }
  WriteKeyValues(log / "manifest.txt", {{"exercise", "push"}});
  std::ofstream(log / "scene.yaml") << scene.config_text;
  const CliResult r = RunCli("grade push --log " + log.string(), dir);
  CHECK(r.exit_code == 1);
  const KeyValues kv = ParseKeyValues(r.out);
  CHECK(Lookup(kv, "score") == "0");
  CHECK(Lookup(kv, "unit") == "m");
}

TEST_CASE("render command") {
  const fs::path dir = testing::ScratchDir("cli_render");
  CliResult r = RunCli("render --config " + Scene("empty.yaml") +
                           " --camera l_eye --out " + (dir / "empty.ppm").string(),
                       dir);
  REQUIRE(r.exit_code == 0);
  const Image empty = ReadPpm(dir / "empty.ppm");
  CHECK(empty.width == 160);
  CHECK(empty.height == 120);
  CHECK(std::all_of(empty.rgb.begin(), empty.rgb.end(),
                    [](std::uint8_t b) { return b == 0; }));
  CHECK(fs::exists(dir / "empty.pgm"));

  r = RunCli("render --config " + Scene("grasp.yaml") + " --camera l_eye --out " +
                 (dir / "grasp.ppm").string(),
             dir);
  REQUIRE(r.exit_code == 0);
  CHECK(DetectColorBlob(ReadPpm(dir / "grasp.ppm"), {0, 200, 0}).has_value());

  r = RunCli("render --config " + Scene("empty.yaml") + " --camera nose --out " +
                 (dir / "nose.ppm").string(),
             dir);
  CHECK(r.exit_code != 0);
}

}  // namespace
}  // namespace humsim
