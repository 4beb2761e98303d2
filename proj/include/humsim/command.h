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

// Commands the world executes step by step. User-facing constructors live in
// control.h.

#ifndef HUMSIM_COMMAND_H_
#define HUMSIM_COMMAND_H_

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "humsim/geometry.h"

namespace humsim {

enum class ControlMode { kVelocity, kPosition, kCartesian };

struct CommandOptions {
  bool stop_on_collision = false;
  // Count robot self-contacts as collisions for stop_on_collision.
  bool check_self_collision = false;
};

enum class MotionState { kRunning, kDone, kStoppedOnCollision, kRejected };

struct MotionStatus {
  MotionState state = MotionState::kDone;
  std::string detail;

  bool terminal() const { return state != MotionState::kRunning; }
};

const char* MotionStateName(MotionState state);

// Entries of q driven at constant velocity until replaced.
struct VelocityCommand {
  std::vector<int> q_indices;
  Eigen::VectorXd velocities;
};

// Entries of q driven toward set-points at up to each joint's max velocity.
struct PositionCommand {
  std::vector<int> q_indices;
  Eigen::VectorXd targets;
  CommandOptions options;
  ControlMode mode = ControlMode::kPosition;  // kCartesian when from IK
};

// Sequence of joint set-points solved from Cartesian waypoints. The active
// segment advances once the end effector is within switch_radius of the
// current waypoint; the last one uses the position completion test.
struct WaypointCommand {
  int link = 0;
  std::vector<Pose> waypoints;
  std::vector<Eigen::VectorXd> joint_targets;  // full q per waypoint
  std::vector<int> q_indices;                  // chain entries of q
  double switch_radius = 0.01;
  size_t current = 0;
  CommandOptions options;
};

using ControlCommand =
    std::variant<std::monostate, VelocityCommand, PositionCommand,
                 WaypointCommand>;

// Position set-point tolerance (rad) for completion.
inline constexpr double kPositionTolerance = 1e-4;

}  // namespace humsim

#endif  // HUMSIM_COMMAND_H_
