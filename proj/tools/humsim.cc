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

// humsim command line: simulate, grade, render and gen-skin.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "humsim/error.h"
#include "humsim/exercises.h"
#include "humsim/model.h"
#include "humsim/vision.h"
#include "humsim/world.h"

namespace fs = std::filesystem;

namespace {

struct SimulateArgs {
  std::string config;
  std::string exercise = "idle";
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  double realtime_factor = 0.0;
  std::string log;
  std::vector<std::string> limbs;
  std::string method = "pinv";
};

int Simulate(const SimulateArgs& args) {
  humsim::RunOptions options;
  options.exercise = humsim::ParseExercise(args.exercise);
  options.config = args.config;
  if (!args.config.empty() && !fs::exists(args.config)) {
    throw humsim::Error(fmt::format("config {} does not exist", args.config));
  }
  options.seed = args.seed;
  if (args.steps < 0) throw humsim::PreconditionError("--steps must be positive");
  options.max_steps = args.steps;
  if (args.realtime_factor < 0.0) {
    throw humsim::PreconditionError("--realtime-factor must be non-negative");
  }
  options.realtime_factor = args.realtime_factor;
  if (!args.log.empty()) options.log_dir = fs::path(args.log);
  options.avoidance_parts = args.limbs;
  if (args.method == "transpose") {
    options.avoidance_method = humsim::RrmcMethod::kTranspose;
  } else if (args.method == "inverse") {
    options.avoidance_method = humsim::RrmcMethod::kInverse;
  } else if (args.method != "pinv") {
    throw humsim::LookupError(fmt::format("unknown RRMC method '{}'", args.method));
  }
  const humsim::RunResult result = humsim::RunExercise(options);
  std::cout << fmt::format("sim_time={}\nsteps={}\n",
                           humsim::FormatDouble(result.sim_time), result.steps);
  if (options.exercise == humsim::Exercise::kIdle) return 0;
  std::cout << humsim::FormatKeyValues(result.report.ToKeyValues());
  return 0;
}

int Grade(const std::string& exercise, const std::string& log) {
  const humsim::GradeReport report =
      humsim::GradeLog(humsim::ParseExercise(exercise), log);
  humsim::WriteGradeReport(log, report);
  std::cout << humsim::FormatKeyValues(report.ToKeyValues());
  return report.pass ? 0 : 1;
}

int Render(const std::string& config, const std::string& camera,
           const std::string& out) {
  const humsim::LoadedScene scene = humsim::LoadScene(config);
  const humsim::World world(scene.model, scene.config);
  const humsim::Image image = humsim::RenderCamera(world, camera);
  fs::path rgb(out);
  fs::path depth = rgb;
  depth.replace_extension(".pgm");
  if (depth == rgb) depth += ".pgm";
  humsim::WritePpm(rgb, image);
  humsim::WriteDepthPgm(depth, image);
  std::cout << fmt::format("rgb={}\ndepth={}\n", rgb.string(), depth.string());
  return 0;
}

// Taxel counts per skin part and the seed of each layout.
const std::map<std::string, int>& SkinCounts() {
  static const std::map<std::string, int> counts = {
      {"chest", 1200},     {"head", 300},       {"l_upper_arm", 450},
      {"r_upper_arm", 450}, {"l_forearm", 500}, {"r_forearm", 500},
      {"l_hand", 320},     {"r_hand", 320}};
  return counts;
}

int GenSkin(const std::string& urdf, double ray_length, double scale) {
  const fs::path path(urdf);
  const humsim::RobotModel model =
      humsim::ParseRobotDescription(humsim::ReadTextFile(path));
  int next_id = 0;
  std::uint64_t seed = 1;
  for (const humsim::SkinPartSpec& part : model.skin_parts()) {
    const auto it = SkinCounts().find(part.name);
    if (it == SkinCounts().end()) {
      throw humsim::LookupError(fmt::format("no taxel count for '{}'", part.name));
    }
    const int count = static_cast<int>(it->second * scale + 0.5);
    const humsim::Link& link = model.links()[model.LinkIndex(part.link)];
    const auto taxels =
        humsim::GenerateTaxelLayout(link, count, seed++, ray_length, next_id);
    next_id += count;
    const fs::path file = path.parent_path() / part.layout_file;
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw humsim::Error(fmt::format("cannot write {}", file.string()));
    out << fmt::format("# Skin part {}, {} taxels.\n", part.name, count)
        << humsim::FormatTaxelLayout(taxels);
    std::cout << fmt::format("{}={}\n", part.name, count);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Headless humanoid simulation with tactile skin and eyes"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run an exercise or idle");
  simulate->add_option("--config", sim.config, "Scene config (default: the exercise's scene)");
  simulate->add_option("--exercise", sim.exercise,
                       "idle, push, smooth, gaze, avoidance or grasp");
  simulate->add_option("--seed", sim.seed, "Scenario seed");
  simulate->add_option("--steps", sim.steps, "Step budget (0: exercise default)");
  simulate->add_option("--realtime-factor", sim.realtime_factor,
                       "Sim seconds per wall second, 0 = unthrottled");
  simulate->add_option("--log", sim.log, "Log directory");
  simulate->add_option("--limbs", sim.limbs, "Avoidance: skin parts to probe")
      ->delimiter(',');
  simulate->add_option("--rrmc", sim.method, "Avoidance: pinv, inverse or transpose");

  std::string grade_exercise, grade_log;
  CLI::App* grade = app.add_subcommand("grade", "Grade a run directory");
  grade->add_option("exercise", grade_exercise, "Exercise name")->required();
  grade->add_option("--log", grade_log, "Log directory")->required();

  std::string render_config, render_camera, render_out;
  CLI::App* render = app.add_subcommand("render", "Render an eye camera");
  render->add_option("--config", render_config, "Scene config")->required();
  render->add_option("--camera", render_camera, "Camera name")->required();
  render->add_option("--out", render_out, "Output PPM; depth PGM goes alongside")
      ->required();

  std::string skin_urdf = (humsim::DefaultAssetDir() / "humanoid.urdf").string();
  double skin_ray = 0.005, skin_scale = 1.0;
  CLI::App* gen_skin =
      app.add_subcommand("gen-skin", "Write taxel layouts for a robot description");
  gen_skin->add_option("--urdf", skin_urdf, "Robot description");
  gen_skin->add_option("--ray-length", skin_ray, "Taxel ray length (m)");
  gen_skin->add_option("--scale", skin_scale, "Taxel count multiplier");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return Simulate(sim);
    if (*grade) return Grade(grade_exercise, grade_log);
    if (*render) return Render(render_config, render_camera, render_out);
    if (*gen_skin) return GenSkin(skin_urdf, skin_ray, skin_scale);
  } catch (const std::exception& e) {
    std::cerr << "humsim: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
