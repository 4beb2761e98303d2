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

#include "humsim/control.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <Eigen/LU>
#include <fmt/format.h>

#include "humsim/error.h"
#include "humsim/world.h"

namespace humsim {
namespace {

MotionStatus Rejected(std::string detail) {
  return {MotionState::kRejected, std::move(detail)};
}

// Returns an error message, or empty when the IK result is usable.
std::string CheckIk(const IkResult& r, const IkParams& p) {
  if (r.status == IkStatus::kConverged) return {};
  const bool far = r.residual.position > 10.0 * p.tol_pos ||
                   (!p.position_only && r.residual.rotation > 10.0 * p.tol_rot);
  if (!far) return {};
  return fmt::format("IK failed ({}): residual {} m, {} rad",
                     IkStatusName(r.status), r.residual.position,
                     r.residual.rotation);
}

std::vector<int> ChainQIndices(const RobotModel& model, int link) {
  std::vector<int> out;
  for (int j : model.ChainJoints(link)) out.push_back(model.QIndex(j));
  return out;
}

bool Reached(const Eigen::VectorXd& q, const std::vector<int>& indices,
             const Eigen::VectorXd& targets) {
  for (size_t i = 0; i < indices.size(); ++i) {
    if (std::abs(q[indices[i]] - targets[static_cast<Eigen::Index>(i)]) >=
        kPositionTolerance) {
      return false;
    }
  }
  return true;
}

MotionStatus IssuePosition(World& world, PositionCommand cmd) {
  const RobotModel& model = world.model();
  for (size_t i = 0; i < cmd.q_indices.size(); ++i) {
    const Joint& joint = model.joints()[model.actuated_joints()[cmd.q_indices[i]]];
    const double t = cmd.targets[static_cast<Eigen::Index>(i)];
    if (!std::isfinite(t) || t < joint.lower || t > joint.upper) {
      return Rejected(fmt::format("target {} for joint '{}' outside [{}, {}]",
                                  t, joint.name, joint.lower, joint.upper));
    }
  }
  MotionStatus status{MotionState::kRunning, {}};
  if (Reached(world.q(), cmd.q_indices, cmd.targets)) {
    status = {MotionState::kDone, {}};
  }
  world.SetCommand(std::move(cmd), status);
  return status;
}

}  // namespace

MotionStatus MoveVelocity(World& world, const std::vector<std::string>& joints,
                          const std::vector<double>& velocities) {
  if (joints.size() != velocities.size()) {
    return Rejected("joint and velocity counts differ");
  }
  const RobotModel& model = world.model();
  VelocityCommand cmd;
  cmd.velocities.resize(static_cast<Eigen::Index>(joints.size()));
  for (size_t i = 0; i < joints.size(); ++i) {
    const auto j = model.FindJoint(joints[i]);
    if (!j || model.QIndex(*j) < 0) {
      return Rejected(fmt::format("unknown actuated joint '{}'", joints[i]));
    }
    const Joint& joint = model.joints()[*j];
    const double v = velocities[i];
    if (!std::isfinite(v) || std::abs(v) > joint.max_velocity) {
      return Rejected(fmt::format("velocity {} for joint '{}' exceeds {}", v,
                                  joint.name, joint.max_velocity));
    }
    cmd.q_indices.push_back(model.QIndex(*j));
    cmd.velocities[static_cast<Eigen::Index>(i)] = v;
  }
  MotionStatus status{MotionState::kRunning, {}};
  world.SetCommand(std::move(cmd), status);
  return status;
}

MotionStatus MovePosition(World& world, const std::vector<std::string>& joints,
                          const std::vector<double>& targets,
                          const CommandOptions& options) {
  if (joints.size() != targets.size()) {
    return Rejected("joint and target counts differ");
  }
  const RobotModel& model = world.model();
  PositionCommand cmd;
  cmd.options = options;
  cmd.targets.resize(static_cast<Eigen::Index>(joints.size()));
  for (size_t i = 0; i < joints.size(); ++i) {
    const auto j = model.FindJoint(joints[i]);
    if (!j || model.QIndex(*j) < 0) {
      return Rejected(fmt::format("unknown actuated joint '{}'", joints[i]));
    }
    cmd.q_indices.push_back(model.QIndex(*j));
    cmd.targets[static_cast<Eigen::Index>(i)] = targets[i];
  }
  return IssuePosition(world, std::move(cmd));
}

MotionStatus MoveAllPositions(World& world, const Eigen::VectorXd& targets,
                              const CommandOptions& options) {
  if (targets.size() != world.model().dof()) {
    return Rejected(fmt::format("expected {} targets, got {}",
                                world.model().dof(), targets.size()));
  }
  PositionCommand cmd;
  cmd.options = options;
  cmd.q_indices.resize(static_cast<size_t>(targets.size()));
  std::iota(cmd.q_indices.begin(), cmd.q_indices.end(), 0);
  cmd.targets = targets;
  return IssuePosition(world, std::move(cmd));
}

MotionStatus MoveCartesian(World& world, const Pose& target,
                           const CommandOptions& options,
                           const IkParams& params) {
  const int link = world.end_effector_link();
  const IkResult ik = SolveIkDls(world.model(), world.q(), link, target, params);
  if (std::string err = CheckIk(ik, params); !err.empty()) {
    return Rejected(std::move(err));
  }
  PositionCommand cmd;
  cmd.options = options;
  cmd.mode = ControlMode::kCartesian;
  cmd.q_indices = ChainQIndices(world.model(), link);
  cmd.targets.resize(static_cast<Eigen::Index>(cmd.q_indices.size()));
  for (size_t i = 0; i < cmd.q_indices.size(); ++i) {
    cmd.targets[static_cast<Eigen::Index>(i)] = ik.q[cmd.q_indices[i]];
  }
  return IssuePosition(world, std::move(cmd));
}

MotionStatus FollowWaypoints(World& world, const std::vector<Pose>& waypoints,
                             double switch_radius,
                             const CommandOptions& options,
                             const IkParams& params) {
  if (waypoints.empty()) return Rejected("no waypoints");
  if (!(switch_radius > 0.0)) return Rejected("switch_radius must be positive");
  WaypointCommand cmd;
  cmd.link = world.end_effector_link();
  cmd.waypoints = waypoints;
  cmd.switch_radius = switch_radius;
  cmd.options = options;
  cmd.q_indices = ChainQIndices(world.model(), cmd.link);
  // Each waypoint is solved from the previous solution so the sequence of
  // set-points is a continuous path in joint space.
  Eigen::VectorXd q = world.q();
  for (size_t k = 0; k < waypoints.size(); ++k) {
    const IkResult ik =
        SolveIkDls(world.model(), q, cmd.link, waypoints[k], params);
    if (std::string err = CheckIk(ik, params); !err.empty()) {
      return Rejected(fmt::format("waypoint {}: {}", k, err));
    }
    q = ik.q;
    cmd.joint_targets.push_back(q);
  }
  MotionStatus status{MotionState::kRunning, {}};
  if (waypoints.size() == 1) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(cmd.q_indices.size()));
    for (size_t i = 0; i < cmd.q_indices.size(); ++i) {
      t[static_cast<Eigen::Index>(i)] = q[cmd.q_indices[i]];
    }
    if (Reached(world.q(), cmd.q_indices, t)) status = {MotionState::kDone, {}};
  }
  world.SetCommand(std::move(cmd), status);
  return status;
}

MotionStatus PollCommand(const World& world) {
  if (!world.has_command()) return {MotionState::kDone, {}};
  return world.command_status();
}

double GazeAngle(const Vec3& x, const Vec3& y) {
  if (x.norm() == 0.0 || y.norm() == 0.0) {
    throw PreconditionError("gaze vectors must be nonzero");
  }
  return std::atan2(x.cross(y).norm(), x.dot(y));
}

std::vector<double> GazePlaneDecomposition(const Vec3& x, const Vec3& y,
                                           const std::vector<Vec3>& axes) {
  if (x.norm() == 0.0 || y.norm() == 0.0) {
    throw PreconditionError("gaze vectors must be nonzero");
  }
  const Vec3 xu = x.normalized();
  const Vec3 yu = y.normalized();
  const Vec3 n = xu.cross(yu);
  std::vector<double> out;
  out.reserve(axes.size());
  for (const Vec3& a : axes) {
    const Vec3 xp = xu - xu.dot(a) * a;
    const Vec3 yp = yu - yu.dot(a) * a;
    const double s = n.dot(a);
    if (xp.norm() < 1e-12 || yp.norm() < 1e-12 || s == 0.0) {
      out.push_back(0.0);
      continue;
    }
    const double angle = std::atan2(xp.cross(yp).norm(), xp.dot(yp));
    out.push_back(s > 0.0 ? angle : -angle);
  }
  return out;
}

const char* RrmcMethodName(RrmcMethod method) {
  switch (method) {
    case RrmcMethod::kTranspose:
      return "transpose";
    case RrmcMethod::kInverse:
      return "inverse";
    case RrmcMethod::kPseudoinverse:
      return "pseudoinverse";
  }
  return "unknown";
}

Eigen::VectorXd Rrmc(const Eigen::MatrixXd& jacobian, const Vector6d& xdot,
                     RrmcMethod method) {
  if (jacobian.rows() != 6) {
    throw PreconditionError("Jacobian must have 6 rows");
  }
  if (!xdot.allFinite()) throw PreconditionError("xdot must be finite");
  switch (method) {
    case RrmcMethod::kTranspose:
      return jacobian.transpose() * xdot;
    case RrmcMethod::kInverse: {
      if (jacobian.cols() != 6) {
        throw PreconditionError(fmt::format(
            "inverse needs a square Jacobian, got 6x{}", jacobian.cols()));
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(jacobian);
      if (!lu.isInvertible()) {
        throw PreconditionError("inverse needs a full-rank Jacobian");
      }
      return lu.solve(xdot);
    }
    case RrmcMethod::kPseudoinverse:
      return PseudoInverse(jacobian) * xdot;
  }
  return Eigen::VectorXd::Zero(jacobian.cols());
}

std::vector<TouchEvent> ClusterTouches(const SkinState& skin,
                                       double link_threshold) {
  std::vector<TouchEvent> events;
  for (const auto& [part, taxels] : skin.parts) {
    if (taxels.empty()) continue;
    std::vector<int> ids;
    std::vector<const TaxelReading*> readings;
    for (const auto& [id, r] : taxels) {
      ids.push_back(id);
      readings.push_back(&r);
    }
    const int n = static_cast<int>(ids.size());
    std::vector<int> root(n);
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](int i) {
      while (root[i] != i) i = root[i] = root[root[i]];
      return i;
    };
    for (int i = 0; i < n; ++i) {
      for (int k = i + 1; k < n; ++k) {
        if ((readings[i]->position - readings[k]->position).norm() <=
            link_threshold) {
          root[find(i)] = find(k);
        }
      }
    }
    std::map<int, std::vector<int>> clusters;
    for (int i = 0; i < n; ++i) clusters[find(i)].push_back(i);

    // (size, mean activation, -min id) is maximized.
    const std::vector<int>* best = nullptr;
    std::tuple<size_t, double, int> best_key{0, 0.0, 0};
    for (const auto& [r, members] : clusters) {
      double act = 0.0;
      int min_id = ids[members.front()];
      for (int m : members) {
        act += readings[m]->activation;
        min_id = std::min(min_id, ids[m]);
      }
      const std::tuple<size_t, double, int> key{
          members.size(), act / static_cast<double>(members.size()), -min_id};
      if (!best || key > best_key) {
        best = &members;
        best_key = key;
      }
    }
    TouchEvent ev;
    ev.part = part;
    Vec3 c = Vec3::Zero(), nsum = Vec3::Zero();
    double act = 0.0;
    for (int m : *best) {
      c += readings[m]->position;
      nsum += readings[m]->normal;
      act += readings[m]->activation;
      ev.taxel_ids.push_back(ids[m]);
    }
    const double count = static_cast<double>(best->size());
    ev.centroid = c / count;
    ev.normal = nsum.norm() > 0.0 ? Vec3(nsum.normalized())
                                  : Vec3(readings[best->front()]->normal);
    ev.taxel_count = static_cast<int>(best->size());
    ev.mean_activation = act / count;
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace humsim
