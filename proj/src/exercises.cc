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

#include "humsim/exercises.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "humsim/error.h"
#include "humsim/kinematics.h"
#include "humsim/skin.h"
#include "humsim/vision.h"

namespace humsim {
namespace {

constexpr double kPi = 3.14159265358979323846;

constexpr double kGraspWait = 1.0;  // s after the last robot motion

double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string FormatVec(const Vec3& v) {
  return fmt::format("{} {} {}", FormatDouble(v.x()), FormatDouble(v.y()),
                     FormatDouble(v.z()));
}

Vec3 ParseVec(const std::string& text) {
  std::istringstream in(text);
  Vec3 v;
  if (!(in >> v.x() >> v.y() >> v.z())) {
    throw ParseError(fmt::format("expected three numbers, got '{}'", text));
  }
  return v;
}

int FindIndex(const SceneConfig& scene, std::string_view name) {
  for (size_t i = 0; i < scene.objects.size(); ++i) {
    if (scene.objects[i].name == name) return static_cast<int>(i);
  }
  throw ScenarioError(fmt::format("scene has no object named '{}'", name));
}

double BallRadius(const ObjectSpec& ball) {
  if (!ball.collision || !std::holds_alternative<Sphere>(ball.collision->shape)) {
    throw ScenarioError("the ball must be a sphere");
  }
  return std::get<Sphere>(ball.collision->shape).radius;
}

Transform ColliderPose(const ObjectSpec& spec, const Pose& pose) {
  return pose.ToTransform() * spec.collision->local;
}

// Row of the first time at least `wait` after the last robot motion.
size_t SettledRow(const MotionRecord& record, double wait) {
  if (record.times.empty()) throw ScenarioError("empty motion record");
  size_t last = 0;
  for (size_t i = 0; i < record.times.size(); ++i) {
    if (record.max_joint_speed[i] >= kStillJointSpeed) last = i;
  }
  const double target = record.times[last] + wait - 1e-9;
  for (size_t i = last; i < record.times.size(); ++i) {
    if (record.times[i] >= target) return i;
  }
  throw ScenarioError(fmt::format(
      "record ends at t={} before {} s past the last robot motion at t={}",
      record.times.back(), wait, record.times[last]));
}

void CheckManifest(const std::filesystem::path& dir, Exercise exercise) {
  const KeyValues manifest = ReadKeyValues(dir / "manifest.txt");
  const std::string& name = Lookup(manifest, "exercise");
  if (name != ExerciseName(exercise)) {
    throw ParseError(fmt::format("log holds a '{}' run, not '{}'", name,
                                 ExerciseName(exercise)));
  }
}

SceneConfig SceneFromLog(const std::filesystem::path& dir) {
  return ParseSceneConfig(ReadTextFile(dir / "scene.yaml"));
}

MotionRecord RecordFromLog(const std::filesystem::path& dir,
                           const SceneConfig& scene) {
  const CsvTable table = ReadCsv(dir / "trajectory.csv");
  const int t_col = table.Column("sim_time");
  std::vector<int> qd_cols;
  for (size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].rfind("qd_", 0) == 0) qd_cols.push_back(static_cast<int>(c));
  }
  std::vector<std::array<int, 7>> obj_cols;
  for (const ObjectSpec& o : scene.objects) {
    std::array<int, 7> cols;
    const char* fields[] = {"x", "y", "z", "qw", "qx", "qy", "qz"};
    for (int k = 0; k < 7; ++k) {
      cols[k] = table.Column(fmt::format("{}_{}", o.name, fields[k]));
    }
    obj_cols.push_back(cols);
  }
  MotionRecord rec;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    rec.times.push_back(table.Number(r, t_col));
    double speed = 0.0;
    for (int c : qd_cols) speed = std::max(speed, std::abs(table.Number(r, c)));
    rec.max_joint_speed.push_back(speed);
    std::vector<Pose> poses;
    for (const auto& cols : obj_cols) {
      Pose p;
      p.position = {table.Number(r, cols[0]), table.Number(r, cols[1]),
                    table.Number(r, cols[2])};
      p.orientation = Quat(table.Number(r, cols[3]), table.Number(r, cols[4]),
                           table.Number(r, cols[5]), table.Number(r, cols[6]));
      poses.push_back(p);
    }
    rec.object_poses.push_back(std::move(poses));
  }
  return rec;
}

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  return out;
}

std::vector<std::string> SplitNames(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

Exercise ParseExercise(std::string_view name) {
  for (Exercise e : {Exercise::kIdle, Exercise::kPush, Exercise::kSmooth,
                     Exercise::kGaze, Exercise::kAvoidance, Exercise::kGrasp}) {
    if (name == ExerciseName(e)) return e;
  }
  throw LookupError(fmt::format("unknown exercise '{}'", name));
}

const char* ExerciseName(Exercise exercise) {
  switch (exercise) {
    case Exercise::kIdle:
      return "idle";
    case Exercise::kPush:
      return "push";
    case Exercise::kSmooth:
      return "smooth";
    case Exercise::kGaze:
      return "gaze";
    case Exercise::kAvoidance:
      return "avoidance";
    case Exercise::kGrasp:
      return "grasp";
  }
  return "unknown";
}

std::string ExerciseScene(Exercise exercise) {
  if (exercise == Exercise::kIdle) return "scenes/empty.yaml";
  return fmt::format("scenes/{}.yaml", ExerciseName(exercise));
}

std::vector<std::uint64_t> ExerciseSeeds(Exercise exercise,
                                         const std::filesystem::path& asset_dir) {
  const std::string text = ReadTextFile(
      asset_dir / "seeds" / fmt::format("{}.txt", ExerciseName(exercise)));
  std::vector<std::uint64_t> seeds;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::uint64_t seed;
    while (fields >> seed) seeds.push_back(seed);
  }
  return seeds;
}

KeyValues GradeReport::ToKeyValues() const {
  KeyValues kv = {{"exercise", exercise},
                  {"score", FormatDouble(score)},
                  {"unit", unit},
                  {"pass", pass ? "true" : "false"}};
  kv.insert(kv.end(), details.begin(), details.end());
  return kv;
}

void WriteGradeReport(const std::filesystem::path& dir,
                      const GradeReport& report) {
  std::filesystem::create_directories(dir);
  WriteKeyValues(dir / "grade.txt", report.ToKeyValues());
  if (report.series.empty()) return;
  SeriesWriter series(dir / "grade_series.csv", {"t", "value"});
  for (const auto& [t, v] : report.series) series.Row({t, v});
}

// ---------------------------------------------------------------------------
// Push.

double BallTableGap(const ObjectSpec& table, const Pose& table_pose,
                    const ObjectSpec& ball, const Pose& ball_pose) {
  if (!table.collision) throw ScenarioError("table has no collision shape");
  const double r = BallRadius(ball);
  const Vec3 center = ColliderPose(ball, ball_pose).translation();
  const double gap =
      SignedDistance(table.collision->shape, ColliderPose(table, table_pose),
                     center) -
      r;
  // Resting contact leaves round-off sized gaps.
  return gap < 1e-6 ? 0.0 : gap;
}

GradeReport GradePushRecord(const MotionRecord& record,
                            const SceneConfig& scene) {
  const size_t row = SettledRow(record, kPushSettleTime);
  const int ti = FindIndex(scene, "table");
  const int bi = FindIndex(scene, "ball");
  GradeReport report;
  report.exercise = "push";
  report.unit = "m";
  report.score = BallTableGap(scene.objects[ti], record.object_poses[row][ti],
                              scene.objects[bi], record.object_poses[row][bi]);
  report.pass = report.score > 0.0;
  report.details = {{"graded_at", FormatDouble(record.times[row])}};
  return report;
}

GradeReport GradePush(World& world, double budget) {
  SceneConfig scene = world.config();
  scene.objects.clear();
  for (const ObjectState& o : world.objects()) scene.objects.push_back(o.spec);
  Session session(world, std::numeric_limits<std::int64_t>::max());
  session.WaitUntilStill(budget);
  session.Idle(kPushSettleTime);
  return GradePushRecord(session.record(), scene);
}

GradeReport GradePushLog(const std::filesystem::path& dir) {
  CheckManifest(dir, Exercise::kPush);
  const SceneConfig scene = SceneFromLog(dir);
  return GradePushRecord(RecordFromLog(dir, scene), scene);
}

// ---------------------------------------------------------------------------
// Smooth motion.

GradeReport GradeTrajectory(const std::vector<TimedPoint>& samples,
                            const TrajectoryReference& reference) {
  if (samples.size() < 2) {
    throw PreconditionError("trajectory grading needs at least 2 samples");
  }
  GradeReport report;
  report.exercise = "smooth";
  report.unit = "m";
  if (const auto* line = std::get_if<LineReference>(&reference)) {
    const Vec3 d = line->p1 - line->p0;
    const double len2 = d.squaredNorm();
    double worst = 0.0;
    for (const TimedPoint& s : samples) {
      const double u =
          len2 > 0.0 ? std::clamp((s.p - line->p0).dot(d) / len2, 0.0, 1.0) : 0.0;
      const double dist = (s.p - (line->p0 + u * d)).norm();
      worst = std::max(worst, dist);
      report.series.emplace_back(s.t, dist);
    }
    const double start = (samples.front().p - line->p0).norm();
    const double end = (samples.back().p - line->p1).norm();
    report.score = worst + start + end;
    report.details = {{"reference", "line"},
                      {"max_deviation", FormatDouble(worst)},
                      {"start_error", FormatDouble(start)},
                      {"end_error", FormatDouble(end)}};
  } else {
    const auto& circle = std::get<CircleReference>(reference);
    const Vec3 n = circle.normal.normalized();
    double sum2 = 0.0, out_max = 0.0;
    for (const TimedPoint& s : samples) {
      const Vec3 d = s.p - circle.center;
      const double out = d.dot(n);
      const double radial = std::abs((d - out * n).norm() - circle.radius);
      sum2 += radial * radial;
      out_max = std::max(out_max, std::abs(out));
      report.series.emplace_back(s.t, std::hypot(radial, out));
    }
    const double rms = std::sqrt(sum2 / static_cast<double>(samples.size()));
    report.score = rms + out_max;
    report.details = {{"reference", "circle"},
                      {"rms_radial_error", FormatDouble(rms)},
                      {"max_out_of_plane", FormatDouble(out_max)}};
  }
  double jerk = 0.0;
  if (samples.size() >= 4) {
    const double dt = (samples.back().t - samples.front().t) /
                      static_cast<double>(samples.size() - 1);
    for (size_t i = 3; i < samples.size(); ++i) {
      const Vec3 third = samples[i].p - 3.0 * samples[i - 1].p +
                         3.0 * samples[i - 2].p - samples[i - 3].p;
      jerk = std::max(jerk, third.norm() / (dt * dt * dt));
    }
  }
  report.details.emplace_back("jerk_proxy", FormatDouble(jerk));
  report.pass = report.score < kTrajectoryPassThreshold;
  return report;
}

GradeReport GradeSmoothLog(const std::filesystem::path& dir) {
  CheckManifest(dir, Exercise::kSmooth);
  const KeyValues manifest = ReadKeyValues(dir / "manifest.txt");
  TrajectoryReference reference;
  const std::string& kind = Lookup(manifest, "reference");
  if (kind == "line") {
    reference = LineReference{ParseVec(Lookup(manifest, "p0")),
                              ParseVec(Lookup(manifest, "p1"))};
  } else if (kind == "circle") {
    CircleReference c;
    c.center = ParseVec(Lookup(manifest, "center"));
    c.normal = ParseVec(Lookup(manifest, "normal"));
    c.radius = std::stod(Lookup(manifest, "radius"));
    reference = c;
  } else {
    throw ParseError(fmt::format("unknown reference '{}'", kind));
  }
  const CsvTable table = ReadCsv(dir / "ee.csv");
  const int t = table.Column("t"), x = table.Column("x"),
            y = table.Column("y"), z = table.Column("z");
  std::vector<TimedPoint> samples;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    samples.push_back({table.Number(r, t),
                       Vec3(table.Number(r, x), table.Number(r, y),
                            table.Number(r, z))});
  }
  return GradeTrajectory(samples, reference);
}

// ---------------------------------------------------------------------------
// Gaze.

GradeReport GradeGaze(const std::vector<std::pair<double, double>>& series,
                      const GazeThresholds& thresholds) {
  if (series.empty()) throw PreconditionError("empty gaze error series");
  double sum = 0.0, worst = 0.0;
  for (const auto& [t, theta] : series) {
    sum += std::abs(theta);
    worst = std::max(worst, std::abs(theta));
  }
  const double mean = sum / static_cast<double>(series.size());
  GradeReport report;
  report.exercise = "gaze";
  report.unit = "rad";
  report.score = mean;
  report.pass = mean < thresholds.mean && worst < thresholds.max;
  report.details = {{"mean", FormatDouble(mean)},
                    {"max", FormatDouble(worst)},
                    {"mean_threshold", FormatDouble(thresholds.mean)},
                    {"max_threshold", FormatDouble(thresholds.max)}};
  report.series = series;
  return report;
}

GradeReport GradeGazeLog(const std::filesystem::path& dir) {
  CheckManifest(dir, Exercise::kGaze);
  const CsvTable table = ReadCsv(dir / "gaze.csv");
  const int t = table.Column("t"), theta = table.Column("theta");
  std::vector<std::pair<double, double>> series;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    series.emplace_back(table.Number(r, t), table.Number(r, theta));
  }
  return GradeGaze(series);
}

std::pair<Vec3, Vec3> GazeVectors(const World& world, std::string_view camera,
                                  const Vec3& target) {
  const Transform pose =
      CameraWorldPose(world, MakeCameraModel(world.model(), camera));
  return {pose.linear().col(2), target - pose.translation()};
}

double GazeController::Update(World& world, const Vec3& target) const {
  const auto [x, y] = GazeVectors(world, camera, target);
  const RobotModel& model = world.model();
  std::vector<Vec3> axes;
  std::vector<double> vmax;
  for (const std::string& name : joints) {
    const int j = model.JointIndex(name);
    axes.push_back(world.link_transforms()[model.JointChildLink(j)].linear() *
                   model.joints()[j].axis);
    vmax.push_back(model.joints()[j].max_velocity);
  }
  const std::vector<double> corrections = GazePlaneDecomposition(x, y, axes);
  std::vector<double> velocities;
  for (size_t i = 0; i < joints.size(); ++i) {
    velocities.push_back(std::clamp(gain * corrections[i], -vmax[i], vmax[i]));
  }
  const MotionStatus status = MoveVelocity(world, joints, velocities);
  if (status.state == MotionState::kRejected) throw ScenarioError(status.detail);
  return GazeAngle(x, y);
}

// ---------------------------------------------------------------------------
// Avoidance.

SkinTimeline TimelineFromLog(const std::filesystem::path& dir) {
  const CsvTable traj = ReadCsv(dir / "trajectory.csv");
  const CsvTable skin = ReadCsv(dir / "skin.csv");
  SkinTimeline timeline;
  const int tcol = traj.Column("sim_time");
  std::map<double, size_t> index;
  for (size_t r = 0; r < traj.rows.size(); ++r) {
    timeline.times.push_back(traj.Number(r, tcol));
    index[timeline.times.back()] = r;
  }
  const int st = skin.Column("sim_time"), sp = skin.Column("part"),
            sa = skin.Column("activation");
  for (size_t r = 0; r < skin.rows.size(); ++r) {
    const auto it = index.find(skin.Number(r, st));
    if (it == index.end()) {
      throw ParseError(fmt::format("skin.csv row {} has an unknown time", r + 1));
    }
    auto& peaks = timeline.peak[skin.rows[r][static_cast<size_t>(sp)]];
    peaks.resize(timeline.times.size(), 0);
    peaks[it->second] =
        std::max(peaks[it->second], static_cast<int>(skin.Number(r, sa)));
  }
  return timeline;
}

GradeReport GradeAvoidance(const SkinTimeline& timeline,
                           const std::vector<std::string>& probed_parts,
                           const AvoidanceCriteria& criteria) {
  GradeReport report;
  report.exercise = "avoidance";
  report.unit = "dimensionless";
  const auto& times = timeline.times;
  if (times.empty()) throw PreconditionError("empty skin timeline");

  int episodes = 0, good = 0;
  double max_clear = 0.0, max_saturated = 0.0;
  bool all_touched = true;
  for (const std::string& part : probed_parts) {
    if (!timeline.peak.count(part)) all_touched = false;
  }
  for (const auto& [part, peaks] : timeline.peak) {
    const size_t n = times.size();
    auto at = [&](size_t i) { return i < peaks.size() ? peaks[i] : 0; };
    size_t i = 0;
    while (i < n) {
      if (at(i) == 0) {
        ++i;
        continue;
      }
      const size_t onset = i;
      double saturated = 0.0;
      std::optional<size_t> sat_start;
      while (i < n && at(i) > 0) {
        if (at(i) > criteria.saturation_level) {
          if (!sat_start) sat_start = i;
        } else if (sat_start) {
          saturated = std::max(saturated, times[i] - times[*sat_start]);
          sat_start.reset();
        }
        ++i;
      }
      const bool cleared = i < n;
      const double end = cleared ? times[i] : times.back();
      if (sat_start) saturated = std::max(saturated, end - times[*sat_start]);
      const double duration = end - times[onset];
      ++episodes;
      max_clear = std::max(max_clear, duration);
      max_saturated = std::max(max_saturated, saturated);
      if (cleared && duration <= criteria.clear_within &&
          saturated <= criteria.saturation_time) {
        ++good;
      }
    }
  }
  for (size_t k = 0; k < times.size(); ++k) {
    int peak = 0;
    for (const auto& [part, peaks] : timeline.peak) {
      if (k < peaks.size()) peak = std::max(peak, peaks[k]);
    }
    report.series.emplace_back(times[k], peak);
  }
  report.score = episodes ? static_cast<double>(good) / episodes : 0.0;
  report.pass = all_touched && episodes > 0 && good == episodes;
  report.details = {{"episodes", std::to_string(episodes)},
                    {"cleared_in_time", std::to_string(good)},
                    {"max_clear_time", FormatDouble(max_clear)},
                    {"max_saturated_time", FormatDouble(max_saturated)},
                    {"probed_parts", JoinNames(probed_parts)},
                    {"all_probed_parts_touched", all_touched ? "true" : "false"}};
  return report;
}

GradeReport GradeAvoidanceLog(const std::filesystem::path& dir) {
  CheckManifest(dir, Exercise::kAvoidance);
  const KeyValues manifest = ReadKeyValues(dir / "manifest.txt");
  return GradeAvoidance(TimelineFromLog(dir),
                        SplitNames(Lookup(manifest, "probed_parts")));
}

void AvoidanceController::Update(World& world) const {
  const RobotModel& model = world.model();
  Eigen::VectorXd qd = Eigen::VectorXd::Zero(model.dof());
  for (const TouchEvent& ev : ClusterTouches(world.skin(), cluster_threshold)) {
    int link = -1;
    for (const SkinPartSpec& part : model.skin_parts()) {
      if (part.name == ev.part) link = model.LinkIndex(part.link);
    }
    if (link < 0) continue;
    const Jacobian jac =
        GeometricJacobian(model, world.link_transforms(), link, ev.centroid);
    if (jac.joints.empty()) continue;
    // Move against the pressing direction, i.e. opposite the outward normal.
    Vector6d xdot = Vector6d::Zero();
    xdot.head<3>() = -speed * ev.normal;
    const Eigen::VectorXd dq = Rrmc(jac.matrix, xdot, method);
    for (size_t c = 0; c < jac.joints.size(); ++c) {
      qd[model.QIndex(jac.joints[c])] += dq[static_cast<Eigen::Index>(c)];
    }
  }
  // Uniform scaling keeps the direction when a joint would exceed its limit.
  const Eigen::VectorXd vmax = model.MaxVelocities();
  double scale = 1.0;
  for (Eigen::Index i = 0; i < qd.size(); ++i) {
    if (std::abs(qd[i]) > vmax[i]) scale = std::min(scale, vmax[i] / std::abs(qd[i]));
  }
  qd *= scale;
  std::vector<std::string> names;
  std::vector<double> values;
  for (int i = 0; i < model.dof(); ++i) {
    names.push_back(model.joints()[model.actuated_joints()[i]].name);
    values.push_back(qd[i]);
  }
  const MotionStatus status = MoveVelocity(world, names, values);
  if (status.state == MotionState::kRejected) throw ScenarioError(status.detail);
}

std::vector<int> SpawnProbes(World& world,
                             const std::vector<std::string>& parts,
                             std::uint64_t seed, double radius,
                             double press_depth) {
  const RobotModel& model = world.model();
  std::vector<int> out;
  for (size_t p = 0; p < parts.size(); ++p) {
    const SkinPartSpec* spec = nullptr;
    for (const SkinPartSpec& s : model.skin_parts()) {
      if (s.name == parts[p]) spec = &s;
    }
    if (!spec) throw ScenarioError(fmt::format("unknown skin part '{}'", parts[p]));
    const int link = model.LinkIndex(spec->link);
    const Transform& pose = world.link_transforms()[link];

    std::vector<size_t> order(spec->taxels.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed * 1000003ULL + p);
    for (size_t i = order.size(); i > 1; --i) {
      const auto k = static_cast<size_t>(Uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(k, i - 1)]);
    }
    std::optional<Vec3> center;
    for (size_t idx : order) {
      const Taxel& t = spec->taxels[idx];
      const Vec3 n = (pose.linear() * t.local_normal).normalized();
      const Vec3 c = pose * t.local_position + n * (radius - press_depth);
      bool clear = true;
      for (const Collider& col : world.colliders()) {
        if (col.body.is_link() && col.body.index == link) {
          // Only the intended dent into the host link.
          if (SignedDistance(col.shape, col.pose, c) < radius - 2.0 * press_depth) {
            clear = false;
          }
        } else if (SignedDistance(col.shape, col.pose, c) < radius + 0.02) {
          clear = false;
        }
        if (!clear) break;
      }
      if (clear) {
        center = c;
        break;
      }
    }
    if (!center) {
      throw ScenarioError(
          fmt::format("no room for a probe on skin part '{}'", parts[p]));
    }
    ObjectSpec probe;
    probe.name = fmt::format("probe_{}", parts[p]);
    probe.kind = ObjectShapeKind::kSphere;
    probe.collision = Primitive{Sphere{radius}, Transform::Identity()};
    probe.pose.position = *center;
    probe.color = {220, 30, 30};
    probe.dynamic = false;
    out.push_back(world.AddObject(probe));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grasp.

double BallHeightAboveTable(const ObjectSpec& table, const Pose& table_pose,
                            const ObjectSpec& ball, const Pose& ball_pose) {
  if (!table.collision) throw ScenarioError("table has no collision shape");
  const double top =
      ComputeAabb(table.collision->shape, ColliderPose(table, table_pose)).max.z();
  const double bottom =
      ColliderPose(ball, ball_pose).translation().z() - BallRadius(ball);
  const double h = bottom - top;
  return h < 1e-6 ? 0.0 : h;
}

GradeReport GradeGraspRecord(const MotionRecord& record,
                             const SceneConfig& scene) {
  const size_t row = SettledRow(record, kGraspWait);
  const int ti = FindIndex(scene, "table");
  const int bi = FindIndex(scene, "ball");
  GradeReport report;
  report.exercise = "grasp";
  report.unit = "m";
  report.score =
      BallHeightAboveTable(scene.objects[ti], record.object_poses[row][ti],
                           scene.objects[bi], record.object_poses[row][bi]);
  report.pass = report.score >= kGraspPassHeight;
  report.details = {{"graded_at", FormatDouble(record.times[row])},
                    {"threshold", FormatDouble(kGraspPassHeight)}};
  return report;
}

GradeReport GradeGrasp(World& world) {
  SceneConfig scene = world.config();
  scene.objects.clear();
  for (const ObjectState& o : world.objects()) scene.objects.push_back(o.spec);
  Session session(world, std::numeric_limits<std::int64_t>::max());
  session.Idle(kGraspWait);
  return GradeGraspRecord(session.record(), scene);
}

GradeReport GradeGraspLog(const std::filesystem::path& dir) {
  CheckManifest(dir, Exercise::kGrasp);
  const SceneConfig scene = SceneFromLog(dir);
  return GradeGraspRecord(RecordFromLog(dir, scene), scene);
}

std::optional<Vec3> LocateBall(const World& world, std::string_view camera,
                               Rgb color, double radius) {
  const CameraModel cam = MakeCameraModel(world.model(), camera);
  const Image image = RenderCamera(world, cam);
  const auto blob = DetectColorBlob(image, color);
  if (!blob) return std::nullopt;
  const int u = std::clamp(static_cast<int>(blob->u), 0, image.width - 1);
  const int v = std::clamp(static_cast<int>(blob->v), 0, image.height - 1);
  const double depth = image.DepthAt(u, v);
  if (!std::isfinite(depth)) return std::nullopt;
  const Vec3 surface = DeprojectPixel(cam, blob->u, blob->v, depth);
  const Vec3 center = surface + radius * surface.normalized();
  return CameraWorldPose(world, cam) * center;
}

// ---------------------------------------------------------------------------
// Session.

Session::Session(World& world, std::int64_t max_steps, double realtime_factor,
                 const std::optional<std::filesystem::path>& log_dir)
    : world_(world), max_steps_(max_steps) {
  if (max_steps <= 0) throw PreconditionError("step budget must be positive");
  if (!(realtime_factor >= 0.0)) {
    throw PreconditionError("real-time factor must be non-negative");
  }
  min_period_ = realtime_factor > 0.0 ? world.step_size() / realtime_factor : 0.0;
  if (log_dir) recorder_ = std::make_unique<RunRecorder>(*log_dir, world);
  Capture();
  world_.SetStepObserver([this](const World&, const StepReport&) { Capture(); });
  last_step_ = std::chrono::steady_clock::now();
}

Session::~Session() {
  world_.SetStepObserver(nullptr);
  if (recorder_) recorder_->Flush();
}

void Session::Capture() {
  record_.times.push_back(world_.sim_time());
  record_.max_joint_speed.push_back(
      world_.q_dot().size() ? world_.q_dot().cwiseAbs().maxCoeff() : 0.0);
  std::vector<Pose> poses;
  for (const ObjectState& o : world_.objects()) poses.push_back(o.pose);
  record_.object_poses.push_back(std::move(poses));
  if (recorder_) recorder_->Record(world_);
}

void Session::Step() {
  if (steps_ >= max_steps_) {
    throw ScenarioError(fmt::format("step budget of {} exhausted", max_steps_));
  }
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed =
        std::chrono::duration<double>(now - last_step_).count();
    if (world_.StepIfElapsed(elapsed, min_period_)) {
      last_step_ = now;
      break;
    }
    std::this_thread::sleep_for(
        std::chrono::duration<double>(min_period_ - elapsed));
  }
  ++steps_;
}

MotionStatus Session::RunCommand(double timeout) {
  const double start = world_.sim_time();
  while (!PollCommand(world_).terminal()) {
    if (world_.sim_time() - start > timeout) {
      throw ScenarioError(fmt::format("command did not finish within {} s", timeout));
    }
    Step();
  }
  return PollCommand(world_);
}

void Session::Idle(double seconds) {
  const auto n = static_cast<std::int64_t>(std::llround(seconds / world_.step_size()));
  for (std::int64_t i = 0; i < n; ++i) Step();
}

void Session::WaitUntilStill(double budget) {
  const double start = world_.sim_time();
  auto moving = [&] {
    return world_.q_dot().size() &&
           world_.q_dot().cwiseAbs().maxCoeff() >= kStillJointSpeed;
  };
  while (moving()) {
    if (world_.sim_time() - start >= budget) {
      throw ScenarioError(
          fmt::format("robot still moving after {} s", budget));
    }
    Step();
  }
}

// ---------------------------------------------------------------------------
// Reference solutions.

void ReferencePushSwing(Session& session) {
  World& world = session.world();
  const Vec3 ball = world.objects()[world.ObjectIndex("ball")].pose.position;
  // Hand beside the ball at the height of its center, then a fast sideways
  // swing through it toward -y.
  const Vec3 offset(0.0, 0.0, 0.055);
  auto check = [](const MotionStatus& s) {
    if (s.state == MotionState::kRejected) throw ScenarioError(s.detail);
  };
  check(MoveCartesian(world, {ball + offset + Vec3(0, 0.1, 0), Quat::Identity()}));
  session.RunCommand(10.0);
  std::vector<Pose> swing;
  for (int k = 1; k <= 10; ++k) {
    swing.push_back({ball + offset + Vec3(0, 0.1 - 0.025 * k, 0), Quat::Identity()});
  }
  IkParams loose;
  loose.position_only = true;
  check(FollowWaypoints(world, swing, 0.01, {}, loose));
  session.RunCommand(10.0);
}

void ReferenceSmooth(Session& session, const TrajectoryReference& reference,
                     std::vector<TimedPoint>* samples) {
  World& world = session.world();
  const int link = world.end_effector_link();
  const Quat orientation =
      Pose::FromTransform(world.link_transforms()[link]).orientation;
  std::vector<Pose> path;
  if (const auto* line = std::get_if<LineReference>(&reference)) {
    constexpr int kWaypoints = 20;
    for (int k = 1; k <= kWaypoints; ++k) {
      const double u = static_cast<double>(k) / kWaypoints;
      path.push_back({line->p0 + u * (line->p1 - line->p0), orientation});
    }
  } else {
    const auto& c = std::get<CircleReference>(reference);
    const Vec3 n = c.normal.normalized();
    const Vec3 start = world.link_transforms()[link].translation();
    const Vec3 e1 = (start - c.center).normalized();
    const Vec3 e2 = n.cross(e1);
    constexpr int kWaypoints = 36;
    for (int k = 1; k <= kWaypoints; ++k) {
      const double a = 2.0 * kPi * k / kWaypoints;
      path.push_back(
          {c.center + c.radius * (std::cos(a) * e1 + std::sin(a) * e2),
           orientation});
    }
  }
  auto sample = [&] {
    if (samples) {
      samples->push_back(
          {world.sim_time(), world.link_transforms()[link].translation()});
    }
  };
  const MotionStatus s = FollowWaypoints(world, path, 0.01);
  if (s.state == MotionState::kRejected) throw ScenarioError(s.detail);
  sample();
  const double start = world.sim_time();
  while (!PollCommand(world).terminal()) {
    if (world.sim_time() - start > 30.0) {
      throw ScenarioError("waypoint following did not finish");
    }
    session.Step();
    sample();
  }
}

MotionStatus ReferenceGrasp(Session& session) {
  World& world = session.world();
  const RobotModel& model = world.model();
  const std::optional<int> ball_index = world.FindObject("ball");
  if (!ball_index) throw ScenarioError("ball not found");
  const double radius = BallRadius(world.objects()[*ball_index].spec);
  const Rgb color = world.objects()[*ball_index].spec.color;

  const std::optional<Vec3> ball = LocateBall(world, "l_eye", color, radius);
  if (!ball) throw ScenarioError("ball not found");

  // Ball center in the hand frame when grasped with the fingers pointing down.
  const Vec3 grasp_offset(-0.005, 0.0, -0.11);
  const Quat down = Quat::Identity();
  const Vec3 grasp = *ball - grasp_offset;
  constexpr double kApproach = 0.1;  // m above the grasp pose
  auto check = [](const MotionStatus& s) {
    if (s.state == MotionState::kRejected) throw ScenarioError(s.detail);
    return s;
  };

  check(MovePosition(world, {"l_gripper"}, {0.0}));
  session.RunCommand(5.0);
  // Transit in 1 cm steps: up and out to the side, then in at the approach
  // height, so the arm never sweeps through the ball.
  const Vec3 above = grasp + Vec3(0, 0, kApproach);
  const Vec3 start = world.link_transforms()[world.end_effector_link()].translation();
  const Vec3 lifted(above.x() - 0.1, above.y() + 0.15, above.z());
  std::vector<Pose> transit;
  auto segment = [&transit](const Vec3& a, const Vec3& b) {
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / 0.01)));
    for (int k = 1; k <= n; ++k) {
      transit.push_back({a + (b - a) * (static_cast<double>(k) / n), Quat::Identity()});
    }
  };
  segment(start, lifted);
  segment(lifted, above);
  IkParams loose;
  loose.position_only = true;
  check(FollowWaypoints(world, transit, 0.01, {}, loose));
  session.RunCommand(20.0);
  check(MoveCartesian(world, {above, down}));
  session.RunCommand(10.0);

  std::vector<Pose> descent;
  for (int k = 1; k <= 8; ++k) {
    descent.push_back({grasp + Vec3(0, 0, kApproach * (1.0 - k / 8.0)), down});
  }
  check(FollowWaypoints(world, descent, 0.01));
  session.RunCommand(10.0);
  const int table = world.ObjectIndex("table");
  for (const Contact& c : world.DetectCollisions(false)) {
    const bool robot = c.body_a.is_link() || c.body_b.is_link();
    const bool hits_table =
        (c.body_a.is_object() && c.body_a.index == table) ||
        (c.body_b.is_object() && c.body_b.index == table);
    if (robot && hits_table) {
      throw ScenarioError("descent collision with table");
    }
  }

  check(MoveVelocity(world, {"l_gripper"}, {1.0}));
  const double upper = model.joints()[model.JointIndex("l_gripper")].upper;
  const int gq = model.QIndex(model.JointIndex("l_gripper"));
  while (!world.objects()[*ball_index].attached_link) {
    if (world.q()[gq] >= upper) throw ScenarioError("grasp failed");
    session.Step();
  }
  check(MovePosition(world, {"l_gripper"}, {world.q()[gq]}));

  // Straight up in 2 cm steps; the orientation is left free because the
  // wrist cannot keep the fingers vertical over the whole lift.
  const Vec3 hand = world.link_transforms()[world.end_effector_link()].translation();
  std::vector<Pose> lift;
  for (int k = 1; k <= 15; ++k) lift.push_back({hand + Vec3(0, 0, 0.02 * k), down});
  check(FollowWaypoints(world, lift, 0.01, {}, loose));
  return session.RunCommand(20.0);
}

// ---------------------------------------------------------------------------
// Runner.

namespace {

struct GazePath {
  Vec3 center{0.55, 0.0, 0.45};
  double radius = 0.1;
  double omega = 0.5;  // rad/s
  double phase = 0.0;

  Vec3 At(double t) const {
    const double a = phase + omega * t;
    return center + radius * Vec3(std::cos(a), std::sin(a), 0.0);
  }
};

constexpr double kGazeDuration = 10.0;
constexpr double kAvoidanceDuration = 3.0;

std::int64_t DefaultBudget(Exercise e) {
  switch (e) {
    case Exercise::kIdle:
      return 240;
    case Exercise::kGaze:
      return 2400;
    case Exercise::kAvoidance:
      return 720;
    default:
      return 24000;
  }
}

void ApplyGraspSeed(SceneConfig& scene, std::uint64_t seed) {
  if (seed == 0) return;
  std::mt19937_64 rng(seed);
  for (ObjectSpec& o : scene.objects) {
    if (o.name != "ball") continue;
    o.pose.position.x() = 0.28 + 0.06 * Uniform01(rng);
    o.pose.position.y() = 0.07 + 0.09 * Uniform01(rng);
  }
}

void ApplyPushSeed(SceneConfig& scene, std::uint64_t seed) {
  if (seed == 0) return;
  std::mt19937_64 rng(seed);
  for (ObjectSpec& o : scene.objects) {
    if (o.name == "ball") o.pose.position.x() += 0.04 * Uniform01(rng) - 0.02;
  }
}

}  // namespace

RunResult RunExercise(const RunOptions& options) {
  const std::filesystem::path config =
      options.config.empty() ? options.asset_dir / ExerciseScene(options.exercise)
                             : options.config;
  LoadedScene loaded = LoadScene(config, options.asset_dir);
  if (options.log_dir) loaded.config.flags.log = true;
  if (options.exercise == Exercise::kGrasp) {
    ApplyGraspSeed(loaded.config, options.seed);
  } else if (options.exercise == Exercise::kPush) {
    ApplyPushSeed(loaded.config, options.seed);
  }

  KeyValues manifest = {{"exercise", ExerciseName(options.exercise)},
                        {"seed", std::to_string(options.seed)},
                        {"config", config.filename().string()}};
  World world(loaded.model, loaded.config);
  const std::int64_t budget =
      options.max_steps > 0 ? options.max_steps : DefaultBudget(options.exercise);
  manifest.emplace_back("step_budget", std::to_string(budget));
  manifest.emplace_back("step_size", FormatDouble(world.step_size()));

  std::vector<std::string> probed;
  if (options.exercise == Exercise::kAvoidance) {
    probed = options.avoidance_parts.empty()
                 ? std::vector<std::string>{"r_forearm"}
                 : options.avoidance_parts;
    SpawnProbes(world, probed, options.seed);
    manifest.emplace_back("probed_parts", JoinNames(probed));
    manifest.emplace_back("rrmc_method", RrmcMethodName(options.avoidance_method));
  }

  GazePath gaze_path;
  if (options.exercise == Exercise::kGaze) {
    // Start on the current line of sight of the left eye.
    const Transform eye = CameraWorldPose(world, MakeCameraModel(world.model(), "l_eye"));
    const double dy = eye.translation().y() - gaze_path.center.y();
    gaze_path.phase = kPi - std::asin(std::clamp(dy / gaze_path.radius, -1.0, 1.0));
    if (options.seed % 2 == 1) gaze_path.omega = -gaze_path.omega;
    world.SetObjectPose(world.ObjectIndex("ball"),
                        {gaze_path.At(0.0), Quat::Identity()});
    manifest.emplace_back("ball_path_center", FormatVec(gaze_path.center));
    manifest.emplace_back("ball_path_radius", FormatDouble(gaze_path.radius));
    manifest.emplace_back("ball_path_omega", FormatDouble(gaze_path.omega));
  }

  TrajectoryReference smooth_ref;
  if (options.exercise == Exercise::kSmooth) {
    const Vec3 p0 = world.link_transforms()[world.end_effector_link()].translation();
    if (options.seed % 2 == 0) {
      const Vec3 p1 = p0 + Vec3(0.0, 0.2, 0.0);
      smooth_ref = LineReference{p0, p1};
      manifest.emplace_back("reference", "line");
      manifest.emplace_back("p0", FormatVec(p0));
      manifest.emplace_back("p1", FormatVec(p1));
    } else {
      CircleReference c;
      c.radius = 0.05;
      c.normal = Vec3::UnitX();
      c.center = p0 - Vec3(0.0, c.radius, 0.0);
      smooth_ref = c;
      manifest.emplace_back("reference", "circle");
      manifest.emplace_back("center", FormatVec(c.center));
      manifest.emplace_back("normal", FormatVec(c.normal));
      manifest.emplace_back("radius", FormatDouble(c.radius));
    }
  }

  if (options.log_dir) {
    std::filesystem::create_directories(*options.log_dir);
    WriteKeyValues(*options.log_dir / "manifest.txt", manifest);
    std::ofstream(*options.log_dir / "scene.yaml", std::ios::binary)
        << loaded.config_text;
  }

  RunResult result;
  {
    Session session(world, budget, options.realtime_factor, options.log_dir);
    switch (options.exercise) {
      case Exercise::kIdle:
        while (session.steps() < budget) session.Step();
        break;
      case Exercise::kPush: {
        ReferencePushSwing(session);
        session.WaitUntilStill(60.0);
        session.Idle(kPushSettleTime);
        SceneConfig scene = loaded.config;
        result.report = GradePushRecord(session.record(), scene);
        break;
      }
      case Exercise::kSmooth: {
        std::vector<TimedPoint> samples;
        ReferenceSmooth(session, smooth_ref, &samples);
        if (options.log_dir) {
          SeriesWriter ee(*options.log_dir / "ee.csv", {"t", "x", "y", "z"});
          for (const TimedPoint& s : samples) ee.Row({s.t, s.p.x(), s.p.y(), s.p.z()});
        }
        result.report = GradeTrajectory(samples, smooth_ref);
        break;
      }
      case Exercise::kGaze: {
        GazeController controller;
        const int ball = world.ObjectIndex("ball");
        std::vector<std::pair<double, double>> series;
        auto angle = [&] {
          const auto [x, y] =
              GazeVectors(world, controller.camera, world.objects()[ball].pose.position);
          return GazeAngle(x, y);
        };
        series.emplace_back(world.sim_time(), angle());
        const auto steps =
            static_cast<std::int64_t>(std::llround(kGazeDuration / world.step_size()));
        for (std::int64_t i = 0; i < steps; ++i) {
          controller.Update(world, world.objects()[ball].pose.position);
          world.SetObjectPose(
              ball, {gaze_path.At(world.sim_time() + world.step_size()),
                     Quat::Identity()});
          session.Step();
          series.emplace_back(world.sim_time(), angle());
        }
        if (options.log_dir) {
          SeriesWriter out(*options.log_dir / "gaze.csv", {"t", "theta"});
          for (const auto& [t, th] : series) out.Row({t, th});
        }
        result.report = GradeGaze(series);
        break;
      }
      case Exercise::kAvoidance: {
        AvoidanceController controller;
        controller.method = options.avoidance_method;
        SkinTimeline timeline;
        auto capture = [&] {
          timeline.times.push_back(world.sim_time());
          for (const auto& [part, taxels] : world.skin().parts) {
            int peak = 0;
            for (const auto& [id, r] : taxels) peak = std::max(peak, r.activation);
            auto& v = timeline.peak[part];
            v.resize(timeline.times.size(), 0);
            v.back() = peak;
          }
        };
        capture();
        const auto steps = static_cast<std::int64_t>(
            std::llround(kAvoidanceDuration / world.step_size()));
        for (std::int64_t i = 0; i < steps; ++i) {
          controller.Update(world);
          session.Step();
          capture();
        }
        result.report = GradeAvoidance(timeline, probed);
        break;
      }
      case Exercise::kGrasp: {
        ReferenceGrasp(session);
        session.Idle(kGraspWait);
        result.report = GradeGraspRecord(session.record(), loaded.config);
        break;
      }
    }
    result.steps = session.steps();
  }
  result.sim_time = world.sim_time();
  if (options.log_dir) {
    KeyValues final_state = {{"sim_time", FormatDouble(world.sim_time())},
                             {"steps", std::to_string(world.step_count())}};
    WriteKeyValues(*options.log_dir / "final_state.txt", final_state);
    if (options.exercise != Exercise::kIdle) {
      WriteGradeReport(*options.log_dir, result.report);
    }
  }
  return result;
}

GradeReport GradeLog(Exercise exercise, const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(fmt::format("log directory {} does not exist", dir.string()));
  }
  switch (exercise) {
    case Exercise::kPush:
      return GradePushLog(dir);
    case Exercise::kSmooth:
      return GradeSmoothLog(dir);
    case Exercise::kGaze:
      return GradeGazeLog(dir);
    case Exercise::kAvoidance:
      return GradeAvoidanceLog(dir);
    case Exercise::kGrasp:
      return GradeGraspLog(dir);
    case Exercise::kIdle:
      break;
  }
  throw PreconditionError("the idle run has no grader");
}

}  // namespace humsim
