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

#ifndef HUMSIM_KINEMATICS_H_
#define HUMSIM_KINEMATICS_H_

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "humsim/geometry.h"
#include "humsim/model.h"

namespace humsim {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;

// 6xN geometric Jacobian, rows [linear; angular], one column per actuated
// joint of the chain from the root to the link, in model joint order.
struct Jacobian {
  Matrix6Xd matrix;
  std::vector<int> joints;  // joint index of each column
};

// World transforms of every link for joint vector q (root frame = world).
std::vector<Transform> LinkTransforms(const RobotModel& model,
                                      const Eigen::VectorXd& q);

Pose ForwardKinematics(const RobotModel& model, const Eigen::VectorXd& q,
                       std::string_view link);
Transform ForwardKinematics(const RobotModel& model, const Eigen::VectorXd& q,
                            int link);

Jacobian GeometricJacobian(const RobotModel& model, const Eigen::VectorXd& q,
                           std::string_view link);
// Jacobian of a point rigidly attached to `link`, given in world coordinates.
Jacobian GeometricJacobian(const RobotModel& model,
                           const std::vector<Transform>& link_transforms,
                           int link, const Vec3& point);

// Linear part: target - current position. Angular part: rotation vector of
// target.R * current.R^T (angle in [0, pi]).
Vector6d PoseError(const Pose& current, const Pose& target);

// Moore-Penrose pseudoinverse by SVD; singular values below
// relative_tolerance * sigma_max are treated as zero.
Eigen::MatrixXd PseudoInverse(const Eigen::MatrixXd& m,
                              double relative_tolerance = 1e-8);

struct IkParams {
  double damping = 0.05;
  int max_iterations = 200;
  double tol_pos = 1e-4;  // m
  double tol_rot = 1e-3;  // rad
  double step_clamp = 0.1;  // rad, largest per-joint change per iteration
  double nullspace_gain = 0.1;
  // Full joint vector; empty means "bias toward q0".
  Eigen::VectorXd rest_posture;
  // Ignore orientation (3-row task).
  bool position_only = false;
};

enum class IkStatus { kConverged, kMaxIterations, kJointLimited };

struct IkResidual {
  double position = 0.0;  // m
  double rotation = 0.0;  // rad
};

struct IkResult {
  Eigen::VectorXd q;
  IkStatus status = IkStatus::kMaxIterations;
  IkResidual residual;
  int iterations = 0;
};

const char* IkStatusName(IkStatus status);

IkResidual ComputeIkResidual(const RobotModel& model, const Eigen::VectorXd& q,
                             int link, const Pose& target,
                             bool position_only = false);

// Damped least squares with nullspace bias toward the rest posture. Each
// update component is clamped to +-step_clamp, then the joints are clamped
// into their limits. Returns the best iterate seen.
IkResult SolveIkDls(const RobotModel& model, const Eigen::VectorXd& q0,
                    std::string_view link, const Pose& target,
                    const IkParams& params = {});
IkResult SolveIkDls(const RobotModel& model, const Eigen::VectorXd& q0,
                    int link, const Pose& target, const IkParams& params = {});

// One update of the iteration above.
Eigen::VectorXd DlsStep(const RobotModel& model, const Eigen::VectorXd& q,
                        int link, const Pose& target, const IkParams& params,
                        const Eigen::VectorXd& rest_posture);

}  // namespace humsim

#endif  // HUMSIM_KINEMATICS_H_
