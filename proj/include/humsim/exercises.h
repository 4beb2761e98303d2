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

// The five exercises: scenario setup, reference controllers and graders.
//
// Graders exist in two forms. Live graders read a World; log graders read a
// run directory written by RunExercise and give the same report, so a run can
// be graded offline by anything that produced the same files.
//
// Scene conventions: the table is the object named "table" and the ball the
// object named "ball".

#ifndef HUMSIM_EXERCISES_H_
#define HUMSIM_EXERCISES_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "humsim/control.h"
#include "humsim/geometry.h"
#include "humsim/logs.h"
#include "humsim/world.h"

namespace humsim {

enum class Exercise { kIdle, kPush, kSmooth, kGaze, kAvoidance, kGrasp };

Exercise ParseExercise(std::string_view name);  // throws LookupError
const char* ExerciseName(Exercise exercise);
// Scene file shipped for the exercise, relative to the asset directory.
std::string ExerciseScene(Exercise exercise);
// Seeds listed in assets/seeds/<name>.txt.
std::vector<std::uint64_t> ExerciseSeeds(Exercise exercise,
                                         const std::filesystem::path& asset_dir =
                                             DefaultAssetDir());

struct GradeReport {
  std::string exercise;
  double score = 0.0;
  std::string unit;  // m | rad | dimensionless
  bool pass = false;
  KeyValues details;
  std::vector<std::pair<double, double>> series;  // (t, value)

  KeyValues ToKeyValues() const;
};

// grade.txt (key=value) and, when there is a series, grade_series.csv.
void WriteGradeReport(const std::filesystem::path& dir,
                      const GradeReport& report);

// ---------------------------------------------------------------------------
// Push.

inline constexpr double kStillJointSpeed = 1e-3;  // rad/s
inline constexpr double kPushSettleTime = 2.0;    // s

// Gap between the ball surface and the table geometry, 0 when touching.
double BallTableGap(const ObjectSpec& table, const Pose& table_pose,
                    const ObjectSpec& ball, const Pose& ball_pose);

// Steps until every |qdot| < 1e-3 rad/s, then 2 s more, and scores the gap.
// Throws ScenarioError if the robot is still moving after `budget` seconds.
GradeReport GradePush(World& world, double budget = 60.0);
GradeReport GradePushLog(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Smooth motion.

struct LineReference {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
};
struct CircleReference {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double radius = 0.0;
};
using TrajectoryReference = std::variant<LineReference, CircleReference>;

struct TimedPoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
};

inline constexpr double kTrajectoryPassThreshold = 0.02;  // m

// Line: max distance to the segment plus both endpoint errors. Circle: RMS
// in-plane radial error plus max out-of-plane distance. Also reports a jerk
// proxy (largest third difference / dt^3) that does not affect pass.
GradeReport GradeTrajectory(const std::vector<TimedPoint>& samples,
                            const TrajectoryReference& reference);
GradeReport GradeSmoothLog(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Gaze.

struct GazeThresholds {
  double mean = 0.05;  // rad
  double max = 0.2;    // rad
};

GradeReport GradeGaze(const std::vector<std::pair<double, double>>& series,
                      const GazeThresholds& thresholds = {});
GradeReport GradeGazeLog(const std::filesystem::path& dir);

// Optical axis and eye-to-ball vector of a camera, world frame.
std::pair<Vec3, Vec3> GazeVectors(const World& world, std::string_view camera,
                                  const Vec3& target);

struct GazeController {
  std::string camera = "l_eye";
  double gain = 10.0;  // 1/s
  std::vector<std::string> joints = {"neck_pitch", "neck_roll", "neck_yaw"};

  // Commands neck velocities toward the target; returns the current angle.
  double Update(World& world, const Vec3& target) const;
};

// ---------------------------------------------------------------------------
// Avoidance.

struct AvoidanceCriteria {
  double clear_within = 2.0;        // s from onset
  double saturation_level = 250.0;  // activation
  double saturation_time = 0.5;     // s
};

// Activation timeline: per step time, the largest activation of each part.
struct SkinTimeline {
  std::vector<double> times;
  std::map<std::string, std::vector<int>> peak;  // part -> per-time max
};

SkinTimeline TimelineFromLog(const std::filesystem::path& dir);

// Every activation episode of every part must clear in time, none may stay
// saturated too long, and every probed part must have been touched.
GradeReport GradeAvoidance(const SkinTimeline& timeline,
                           const std::vector<std::string>& probed_parts,
                           const AvoidanceCriteria& criteria = {});
GradeReport GradeAvoidanceLog(const std::filesystem::path& dir);

struct AvoidanceController {
  RrmcMethod method = RrmcMethod::kPseudoinverse;
  double speed = 0.1;                // m/s
  double cluster_threshold = 0.02;   // m

  // Moves each touched link away from its touch; zero command otherwise.
  void Update(World& world) const;
};

// Places a static probe sphere pressing into one seeded taxel of each part.
// Returns the probe object indices. Throws ScenarioError when a part has no
// taxel where a probe fits without touching anything else.
std::vector<int> SpawnProbes(World& world,
                             const std::vector<std::string>& parts,
                             std::uint64_t seed, double radius = 0.02,
                             double press_depth = 0.002);

// ---------------------------------------------------------------------------
// Grasp.

inline constexpr double kGraspPassHeight = 0.25;  // m

// Ball-bottom height above the table top, 0 when at or below it.
double BallHeightAboveTable(const ObjectSpec& table, const Pose& table_pose,
                            const ObjectSpec& ball, const Pose& ball_pose);

// Steps 1 s and scores the ball height.
GradeReport GradeGrasp(World& world);
GradeReport GradeGraspLog(const std::filesystem::path& dir);

// Ball center estimated from an eye image: blob centroid, depth at the
// centroid pixel, deprojection, then one radius further along the ray.
std::optional<Vec3> LocateBall(const World& world, std::string_view camera,
                               Rgb color, double radius);

// ---------------------------------------------------------------------------
// Running exercises.

// Per-step record of what the push and grasp graders need.
struct MotionRecord {
  std::vector<double> times;
  std::vector<double> max_joint_speed;          // max |qdot|
  std::vector<std::vector<Pose>> object_poses;  // per time, per object
};

// Steps a world, honoring the real-time factor and a step budget. Records
// every state, starting with the current one, in memory and, when a log
// directory is given, to trajectory.csv and skin.csv.
class Session {
 public:
  Session(World& world, std::int64_t max_steps, double realtime_factor = 0.0,
          const std::optional<std::filesystem::path>& log_dir = std::nullopt);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  World& world() { return world_; }
  const MotionRecord& record() const { return record_; }
  std::int64_t steps() const { return steps_; }

  // Throws ScenarioError once the budget is exhausted.
  void Step();
  // Steps until the command is terminal; throws ScenarioError on timeout.
  MotionStatus RunCommand(double timeout);
  void Idle(double seconds);
  // Steps until every |qdot| < 1e-3 rad/s; throws after `budget` seconds.
  void WaitUntilStill(double budget);

 private:
  void Capture();

  World& world_;
  std::int64_t max_steps_;
  std::int64_t steps_ = 0;
  double min_period_ = 0.0;
  std::chrono::steady_clock::time_point last_step_;
  MotionRecord record_;
  std::unique_ptr<RunRecorder> recorder_;
};

// Reference solutions. Each drives the session until its task is finished.
void ReferencePushSwing(Session& session);
void ReferenceSmooth(Session& session, const TrajectoryReference& reference,
                     std::vector<TimedPoint>* samples);
// Throws ScenarioError for a missing ball, a table collision on descent or a
// failed grasp.
MotionStatus ReferenceGrasp(Session& session);

// Push and grasp scores from a motion record; `wait` counts from the last
// robot motion. Throws ScenarioError when the record ends too early.
GradeReport GradePushRecord(const MotionRecord& record,
                            const SceneConfig& scene);
GradeReport GradeGraspRecord(const MotionRecord& record,
                             const SceneConfig& scene);

struct RunOptions {
  Exercise exercise = Exercise::kIdle;
  std::filesystem::path config;  // empty: the exercise's shipped scene
  std::filesystem::path asset_dir = DefaultAssetDir();
  std::uint64_t seed = 0;
  std::int64_t max_steps = 0;  // 0: the exercise's default budget
  double realtime_factor = 0.0;
  std::optional<std::filesystem::path> log_dir;
  std::vector<std::string> avoidance_parts;  // empty: default set
  RrmcMethod avoidance_method = RrmcMethod::kPseudoinverse;
};

struct RunResult {
  GradeReport report;  // empty exercise name for idle runs
  double sim_time = 0.0;
  std::int64_t steps = 0;
};

RunResult RunExercise(const RunOptions& options);

// Grades a run directory; throws ParseError when the directory holds a run
// of a different exercise.
GradeReport GradeLog(Exercise exercise, const std::filesystem::path& dir);

}  // namespace humsim

#endif  // HUMSIM_EXERCISES_H_
