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


// Acceptance suite. Prints one PASS or FAIL line per criterion and exits
// nonzero when any criterion fails. Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/QR>
#include <fmt/format.h>

#include "humsim/control.h"
#include "humsim/exercises.h"
#include "humsim/kinematics.h"
#include "humsim/logs.h"
#include "humsim/model.h"
#include "humsim/skin.h"
#include "humsim/vision.h"
#include "humsim/world.h"
#include "test_support.h"

namespace humsim {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// ---------------------------------------------------------------------------

Outcome Kinematics() {
  constexpr int kConfigs = 100;
  constexpr double kFdStep = 1e-6;
  constexpr double kJacobianTol = 1e-5;
  constexpr double kFkTol = 1e-9;
  constexpr double kBudget = 10.0;
  const auto start = Clock::now();
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(101);
  double worst_jac = 0.0, worst_fk = 0.0;
  for (int i = 0; i < kConfigs; ++i) {
    const Eigen::VectorXd q = testing::RandomPosture(m, rng);
    for (const Link& link : m.links()) {
      const Eigen::Matrix4d oracle = testing::NaiveChainTransform(m, q, link.name);
      const Transform fk = ForwardKinematics(m, q, m.LinkIndex(link.name));
      worst_fk = std::max(
          worst_fk, (fk.translation() - oracle.topRightCorner<3, 1>()).norm());
    }
    for (const char* link : {"r_hand", "l_hand", "head", "l_finger"}) {
      const Jacobian jac = GeometricJacobian(m, q, link);
      const Matrix6Xd fd =
          testing::FiniteDifferenceJacobian(m, q, link, jac.joints, kFdStep);
      worst_jac = std::max(worst_jac, (jac.matrix - fd).cwiseAbs().maxCoeff());
    }
  }
  const double elapsed = Seconds(start);
  return {worst_jac < kJacobianTol && worst_fk < kFkTol && elapsed < kBudget,
          fmt::format("{} configs, max |J - FD| {:.2e} (tol {:.0e}), max FK "
                      "error {:.2e} m (tol {:.0e}), {:.2f} s (limit {} s)",
                      kConfigs, worst_jac, kJacobianTol, worst_fk, kFkTol,
                      elapsed, kBudget)};
}

Outcome InverseKinematics() {
  constexpr int kTargets = 100;
  constexpr double kPosTol = 1e-3, kRotTol = 1e-2;
  constexpr double kRequired = 0.95;
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(102);
  IkParams params;
  params.max_iterations = 200;
  int solved = 0;
  // The zero posture has a straight elbow resting on its limit, a singular
  // start; the middle of the joint ranges is an interior, regular one.
  const Eigen::VectorXd seed = 0.5 * (m.LowerLimits() + m.UpperLimits());
  for (int i = 0; i < kTargets; ++i) {
    const Eigen::VectorXd q = testing::RandomPosture(m, rng);
    const char* link = i % 2 ? "l_hand" : "r_hand";
    const Pose target = ForwardKinematics(m, q, link);
    const IkResult r = SolveIkDls(m, seed, link, target, params);
    if (r.residual.position < kPosTol && r.residual.rotation < kRotTol &&
        r.iterations <= params.max_iterations) {
      ++solved;
    }
  }
  const Eigen::VectorXd q0 = testing::RandomPosture(m, rng);
  const IkResult fixed =
      SolveIkDls(m, q0, "r_hand", ForwardKinematics(m, q0, "r_hand"), params);
  const bool fixed_ok = fixed.iterations == 0 && fixed.q == q0 &&
                        fixed.status == IkStatus::kConverged;
  const double rate = static_cast<double>(solved) / kTargets;
  return {rate >= kRequired && fixed_ok,
          fmt::format("{}/{} targets within {} m / {} rad (need {:.0f}%), "
                      "fixed point {} iterations",
                      solved, kTargets, kPosTol, kRotTol, 100 * kRequired,
                      fixed.iterations)};
}

Outcome ResolvedRate() {
  constexpr double kTol = 1e-9;
  std::mt19937_64 rng(103);
  auto random_matrix = [&](int rows, int cols) {
    Eigen::MatrixXd a(rows, cols);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = testing::Uniform(rng, -1, 1);
    return a;
  };
  auto random_twist = [&] {
    Vector6d x;
    for (int i = 0; i < 6; ++i) x[i] = testing::Uniform(rng, -1, 1);
    return x;
  };
  double worst_square = 0.0, worst_min_norm = 0.0, worst_residual = 0.0;
  for (int i = 0; i < 100; ++i) {
    Eigen::MatrixXd j = random_matrix(6, 6);
    if (Eigen::JacobiSVD<Eigen::MatrixXd>(j).singularValues()[5] < 1e-2) continue;
    const Vector6d x = random_twist();
    worst_square = std::max(
        worst_square, (Rrmc(j, x, RrmcMethod::kPseudoinverse) -
                       Rrmc(j, x, RrmcMethod::kInverse))
                          .norm());
    const Eigen::MatrixXd wide = random_matrix(6, 7 + i % 4);
    const Eigen::VectorXd qd = Rrmc(wide, x, RrmcMethod::kPseudoinverse);
    const Eigen::VectorXd oracle =
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(wide).solve(x);
    worst_min_norm = std::max(worst_min_norm, (qd - oracle).norm());
    worst_residual = std::max(worst_residual, (wide * qd - x).norm());
  }

  // Transpose descent: a small step along J^T e reduces the pose error.
  const RobotModel& m = testing::ShippedModel();
  int descents = 0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd q = testing::RandomPosture(m, rng);
    const Pose current = ForwardKinematics(m, q, "r_hand");
    Pose target = current;
    target.position += 0.05 * Vec3::Random();
    target.orientation = CanonicalQuat(
        current.orientation *
        Quat(Eigen::AngleAxisd(0.05, Vec3::Random().normalized())));
    const Vector6d e = PoseError(current, target);
    const Jacobian jac = GeometricJacobian(m, q, "r_hand");
    const Eigen::VectorXd qd = Rrmc(jac.matrix, e, RrmcMethod::kTranspose);
    Eigen::VectorXd q2 = q;
    for (size_t c = 0; c < jac.joints.size(); ++c) {
      q2[m.QIndex(jac.joints[c])] += 1e-3 * qd[static_cast<Eigen::Index>(c)];
    }
    const double before = e.norm();
    const double after = PoseError(ForwardKinematics(m, q2, "r_hand"), target).norm();
    if (e.dot(jac.matrix * qd) >= 0.0 && after < before) ++descents;
  }
  return {worst_square < kTol && worst_min_norm < kTol && worst_residual < kTol &&
              descents == 100,
          fmt::format("pinv vs inverse {:.1e}, pinv vs min-norm oracle {:.1e}, "
                      "|J qd - x| {:.1e} (tol {:.0e}); transpose descent on "
                      "{}/100 configurations",
                      worst_square, worst_min_norm, worst_residual, kTol,
                      descents)};
}

World SkinWorld(const RobotModel& model) {
  SceneConfig config;
  config.flags.eyes = false;
  return World(model, config);
}

Outcome SkinEquivalence() {
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(104);
  int equal = 0, active_scenes = 0;
  for (int scene = 0; scene < 20; ++scene) {
    World world = SkinWorld(m);
    world.SetJointPositions(testing::RandomPosture(m, rng));
    world.AddObject(testing::BallNearRandomTaxel(
        world, rng, "ball", testing::Uniform(rng, 0.02, 0.08)));
    const SkinState fast = ComputeSkinActivations(world);
    if (fast == ComputeSkinActivationsExhaustive(world)) ++equal;
    if (!fast.empty()) ++active_scenes;
  }
  const bool endpoints = ActivationFromDistance(0.0, 0.005) == 255 &&
                         ActivationFromDistance(0.0025, 0.005) == 128 &&
                         ActivationFromDistance(0.006, 0.005) == 0;
  return {equal == 20 && endpoints,
          fmt::format("{}/20 scenes byte-equal ({} with contact); d=0 -> {}, "
                      "d=L/2 -> {}, no hit -> {}",
                      equal, active_scenes, ActivationFromDistance(0.0, 0.005),
                      ActivationFromDistance(0.0025, 0.005),
                      ActivationFromDistance(0.006, 0.005))};
}

// Shipped model with every part's taxel count scaled.
RobotModel ScaledSkin(double scale) {
  const RobotModel& m = testing::ShippedModel();
  std::vector<SkinPartSpec> parts = m.skin_parts();
  int next_id = 0;
  std::uint64_t seed = 1;
  for (SkinPartSpec& part : parts) {
    const int count =
        static_cast<int>(static_cast<double>(part.taxels.size()) * scale + 0.5);
    part.taxels = GenerateTaxelLayout(m.links()[m.LinkIndex(part.link)], count,
                                      seed++, 0.005, next_id);
    next_id += count;
  }
  return WithSkinParts(m, parts);
}

// Seconds per step with a static ball pressed into the chest.
double StepCost(const RobotModel& model, int steps) {
  World world = SkinWorld(model);
  const Transform chest = world.LinkPose(model.LinkIndex("chest"));
  ObjectSpec ball;
  ball.name = "ball";
  ball.collision = Primitive{Sphere{0.05}};
  ball.pose.position = chest * Vec3(0.07 + 0.05 - 0.002, 0.0, 0.15);
  world.AddObject(ball);
  if (world.skin().empty()) return -1.0;
  for (int i = 0; i < 20; ++i) world.UpdateSimulation();
  const auto start = Clock::now();
  for (int i = 0; i < steps; ++i) world.UpdateSimulation();
  return Seconds(start) / steps;
}

Outcome SkinThroughput() {
  constexpr double kRequiredRate = 240.0;
  constexpr double kMaxSlope = 1.2;
  const RobotModel& shipped = testing::ShippedModel();
  const double full = StepCost(shipped, 960);
  const double rate = full > 0 ? 1.0 / full : 0.0;

  std::vector<double> xs, ys;
  std::string costs;
  for (double scale : {0.25, 0.5, 1.0}) {
    const RobotModel model = ScaledSkin(scale);
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) best = std::min(best, StepCost(model, 480));
    xs.push_back(std::log(model.TaxelCount()));
    ys.push_back(std::log(best));
    costs += fmt::format(" {}:{:.1f}us", model.TaxelCount(), 1e6 * best);
  }
  const double mx = (xs[0] + xs[1] + xs[2]) / 3, my = (ys[0] + ys[1] + ys[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  return {rate >= kRequiredRate && slope <= kMaxSlope,
          fmt::format("{} taxels, {:.0f} steps/s (need {}); log-log cost slope "
                      "{:.2f} (limit {}), per-step cost{}; {} hardware threads",
                      shipped.TaxelCount(), rate, kRequiredRate, slope, kMaxSlope,
                      costs, std::thread::hardware_concurrency())};
}

bool SameFiles(const fs::path& a, const fs::path& b, std::string* why) {
  std::vector<fs::path> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename());
  size_t count_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++count_b;
  if (names.size() != count_b) {
    *why = fmt::format("{} vs {} files", names.size(), count_b);
    return false;
  }
  for (const fs::path& n : names) {
    if (!fs::exists(b / n) || ReadTextFile(a / n) != ReadTextFile(b / n)) {
      *why = n.string();
      return false;
    }
  }
  return true;
}

Outcome Determinism() {
  const fs::path root = testing::ScratchDir("acceptance_determinism");
  std::vector<std::string> mismatched;
  int runs = 0;
  for (Exercise e : {Exercise::kIdle, Exercise::kPush, Exercise::kSmooth,
                     Exercise::kGaze, Exercise::kAvoidance, Exercise::kGrasp}) {
    const std::vector<std::uint64_t> seeds =
        e == Exercise::kIdle ? std::vector<std::uint64_t>{0} : ExerciseSeeds(e);
    for (std::uint64_t seed : seeds) {
      std::vector<fs::path> dirs;
      for (int rep = 0; rep < 2; ++rep) {
        RunOptions options;
        options.exercise = e;
        options.seed = seed;
        options.log_dir = root / fmt::format("{}_{}_{}", ExerciseName(e), seed, rep);
        RunExercise(options);
        dirs.push_back(*options.log_dir);
      }
      ++runs;
      std::string why;
      if (!SameFiles(dirs[0], dirs[1], &why)) {
        mismatched.push_back(fmt::format("{}/{}: {}", ExerciseName(e), seed, why));
      }
    }
  }
  std::string detail = fmt::format("{} scenario pairs byte-identical", runs -
                                   static_cast<int>(mismatched.size()));
  for (const auto& m : mismatched) detail += "; differs " + m;
  return {mismatched.empty(), detail + fmt::format(" of {}", runs)};
}

Outcome EndToEnd() {
  constexpr double kBudget = 300.0;
  const auto start = Clock::now();
  std::vector<std::string> notes;
  bool ok = true;
  auto run = [](Exercise e, std::uint64_t seed,
                std::vector<std::string> parts = {}) {
    RunOptions options;
    options.exercise = e;
    options.seed = seed;
    options.avoidance_parts = std::move(parts);
    return RunExercise(options).report;
  };

  const GradeReport gaze = run(Exercise::kGaze, 0);
  const double gaze_mean = std::stod(Lookup(gaze.details, "mean"));
  const double gaze_max = std::stod(Lookup(gaze.details, "max"));
  const bool gaze_ok = gaze_mean < 0.05 && gaze_max < 0.2;
  ok &= gaze_ok;
  notes.push_back(fmt::format("gaze mean {:.4f} max {:.4f} rad", gaze_mean, gaze_max));

  auto avoidance = [&](const std::vector<std::string>& parts) {
    bool all = true;
    double worst = 0.0;
    for (std::uint64_t seed : ExerciseSeeds(Exercise::kAvoidance)) {
      const GradeReport r = run(Exercise::kAvoidance, seed, parts);
      all &= r.pass;
      worst = std::max(worst, std::stod(Lookup(r.details, "max_clear_time")));
    }
    return std::make_pair(all, worst);
  };
  const auto single = avoidance({"r_forearm"});
  const auto dual = avoidance({"l_forearm", "r_upper_arm"});
  ok &= single.first && dual.first;
  notes.push_back(fmt::format("avoidance single {} (slowest clear {:.3f} s), "
                              "double {} (slowest clear {:.3f} s)",
                              single.first ? "cleared" : "FAILED", single.second,
                              dual.first ? "cleared" : "FAILED", dual.second));

  std::string grasp_scores;
  for (std::uint64_t seed : ExerciseSeeds(Exercise::kGrasp)) {
    const GradeReport r = run(Exercise::kGrasp, seed);
    ok &= r.score >= kGraspPassHeight;
    grasp_scores += fmt::format(" {:.3f}", r.score);
  }
  notes.push_back("grasp heights" + grasp_scores + " m");

  LoadedScene scene = LoadScene(DefaultAssetDir() / ExerciseScene(Exercise::kPush));
  World idle(scene.model, scene.config);
  const double untouched = GradePush(idle).score;
  const double swung = run(Exercise::kPush, 0).score;
  ok &= untouched == 0.0 && swung > 0.0;
  notes.push_back(fmt::format("push untouched {} m, reference swing {:.3f} m",
                              untouched, swung));

  const double elapsed = Seconds(start);
  ok &= elapsed < kBudget;
  std::string detail;
  for (const auto& n : notes) detail += n + "; ";
  return {ok, detail + fmt::format("{:.1f} s (limit {} s)", elapsed, kBudget)};
}

Outcome Vision() {
  constexpr double kRoundTripPx = 0.5;
  constexpr double kDiscPx = 2.0;
  std::mt19937_64 rng(105);
  LoadedScene scene = LoadScene(DefaultAssetDir() / ExerciseScene(Exercise::kGrasp));
  const CameraModel cam = MakeCameraModel(scene.model, "l_eye");

  double worst_px = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double u = testing::Uniform(rng, 0, cam.width);
    const double v = testing::Uniform(rng, 0, cam.height);
    const double d = testing::Uniform(rng, 0.05, 10.0);
    const Eigen::Vector2d uv = ProjectPoint(cam, DeprojectPixel(cam, u, v, d));
    worst_px = std::max(worst_px, (uv - Eigen::Vector2d(u, v)).norm());
  }

  double worst_disc = 0.0;
  for (double z : {0.4, 0.7, 1.0, 1.5}) {
    SceneConfig config;
    config.flags.skin = false;
    World world(scene.model, config);
    ObjectSpec ball;
    ball.name = "ball";
    ball.collision = Primitive{Sphere{0.05}};
    ball.color = {0, 0, 255};
    ball.pose.position = CameraWorldPose(world, cam) * Vec3(0, 0, z);
    world.AddObject(ball);
    const auto blob = DetectColorBlob(RenderCamera(world, cam), ball.color, 0);
    const double radius = blob ? std::sqrt(blob->pixel_count / std::acos(-1.0)) : 0;
    worst_disc = std::max(worst_disc, std::abs(radius - cam.focal_length * 0.05 / z));
  }

  // Ball positions across the visible part of the table.
  int located = 0, accurate = 0;
  double worst_excess = -1.0;
  for (int i = 0; i < 20; ++i) {
    World world(scene.model, scene.config);
    const int b = world.ObjectIndex("ball");
    Pose p = world.objects()[b].pose;
    p.position.x() = testing::Uniform(rng, 0.26, 0.38);
    p.position.y() = testing::Uniform(rng, 0.0, 0.18);
    world.SetObjectPose(b, p);
    const double r = std::get<Sphere>(world.objects()[b].spec.collision->shape).radius;
    const auto est = LocateBall(world, "l_eye", world.objects()[b].spec.color, r);
    if (!est) continue;
    ++located;
    const Vec3 in_cam = CameraWorldPose(world, cam).inverse() * p.position;
    const double px_equiv = in_cam.z() / cam.focal_length;
    const double err = (*est - p.position).norm();
    if (err < r + px_equiv) ++accurate;
    worst_excess = std::max(worst_excess, err - (r + px_equiv));
  }
  return {worst_px < kRoundTripPx && worst_disc <= kDiscPx && located == 20 &&
              accurate == 20,
          fmt::format("round trip {:.1e} px (tol {}); disc radius off by at most "
                      "{:.2f} px (tol {}); {}/20 balls located within r + 1 px "
                      "(worst margin {:.4f} m)",
                      worst_px, kRoundTripPx, worst_disc, kDiscPx, accurate,
                      -worst_excess)};
}

}  // namespace
}  // namespace humsim

int main() {
  using humsim::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"kinematics", humsim::Kinematics},
      {"inverse kinematics", humsim::InverseKinematics},
      {"resolved-rate control", humsim::ResolvedRate},
      {"skin oracle equivalence", humsim::SkinEquivalence},
      {"skin throughput and scaling", humsim::SkinThroughput},
      {"determinism", humsim::Determinism},
      {"exercise end-to-end", humsim::EndToEnd},
      {"vision", humsim::Vision},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed\n",
                           criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
