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

// Velocity, position and Cartesian control modes plus the math helpers the
// exercises build on (gaze geometry, resolved-rate control, touch clustering).
//
// A rejected command leaves the world and its current command untouched.

#ifndef HUMSIM_CONTROL_H_
#define HUMSIM_CONTROL_H_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "humsim/command.h"
#include "humsim/geometry.h"
#include "humsim/kinematics.h"
#include "humsim/skin_state.h"

namespace humsim {

class World;

MotionStatus MoveVelocity(World& world, const std::vector<std::string>& joints,
                          const std::vector<double>& velocities);

MotionStatus MovePosition(World& world, const std::vector<std::string>& joints,
                          const std::vector<double>& targets,
                          const CommandOptions& options = {});
// Full joint vector of size dof.
MotionStatus MoveAllPositions(World& world, const Eigen::VectorXd& targets,
                              const CommandOptions& options = {});

// Solves IK for the configured end effector from the current posture and
// hands the chain joints to position control. No path or reachability check.
MotionStatus MoveCartesian(World& world, const Pose& target,
                           const CommandOptions& options = {},
                           const IkParams& params = {});

MotionStatus FollowWaypoints(World& world, const std::vector<Pose>& waypoints,
                             double switch_radius,
                             const CommandOptions& options = {},
                             const IkParams& params = {});

// Status of the world's current command; done when there is none.
MotionStatus PollCommand(const World& world);

// Angle between two nonzero vectors in [0, pi].
double GazeAngle(const Vec3& x, const Vec3& y);

// Signed rotation about each axis that turns x toward y within the plane
// normal to that axis. Sign follows (x cross y) . axis.
std::vector<double> GazePlaneDecomposition(const Vec3& x, const Vec3& y,
                                           const std::vector<Vec3>& axes);

enum class RrmcMethod { kTranspose, kInverse, kPseudoinverse };

const char* RrmcMethodName(RrmcMethod method);

Eigen::VectorXd Rrmc(const Eigen::MatrixXd& jacobian, const Vector6d& xdot,
                     RrmcMethod method);

struct TouchEvent {
  std::string part;
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // mean member normal, renormalized
  int taxel_count = 0;
  double mean_activation = 0.0;
  std::vector<int> taxel_ids;
};

// Single-linkage clustering per skin part. The largest cluster of each part
// wins; ties go to the higher mean activation, then the lower taxel id.
std::vector<TouchEvent> ClusterTouches(const SkinState& skin,
                                       double link_threshold);

}  // namespace humsim

#endif  // HUMSIM_CONTROL_H_
