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

#include "humsim/kinematics.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "humsim/error.h"

namespace humsim {
namespace {

void CheckDimension(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof()) {
    throw PreconditionError(fmt::format(
        "joint vector has {} entries, model has {} actuated joints", q.size(),
        model.dof()));
  }
}

void CheckParams(const IkParams& p) {
  if (!(p.damping > 0.0) || !(p.tol_pos > 0.0) || !(p.tol_rot > 0.0) ||
      p.max_iterations < 1 || !(p.step_clamp > 0.0) ||
      !(p.nullspace_gain >= 0.0)) {
    throw PreconditionError("invalid IK parameters");
  }
}

double Merit(const IkResidual& r, const IkParams& p) {
  if (p.position_only) return r.position / p.tol_pos;
  return std::max(r.position / p.tol_pos, r.rotation / p.tol_rot);
}

bool Converged(const IkResidual& r, const IkParams& p) {
  return r.position < p.tol_pos && (p.position_only || r.rotation < p.tol_rot);
}

}  // namespace

std::vector<Transform> LinkTransforms(const RobotModel& model,
                                      const Eigen::VectorXd& q) {
  CheckDimension(model, q);
  std::vector<Transform> out(model.links().size(), Transform::Identity());
  const auto& joints = model.joints();
  // Joints are topologically sorted, so parents are always ready.
  for (int j = 0; j < static_cast<int>(joints.size()); ++j) {
    const Joint& joint = joints[j];
    const int parent = model.JointParentLink(j);
    const int child = model.JointChildLink(j);
    Transform t = out[parent] * joint.origin;
    const int qi = model.QIndex(j);
    if (qi >= 0) t.rotate(Eigen::AngleAxisd(q[qi], joint.axis));
    out[child] = t;
  }
  return out;
}

Transform ForwardKinematics(const RobotModel& model, const Eigen::VectorXd& q,
                            int link) {
  CheckDimension(model, q);
  // Walk up to the root instead of computing every link.
  Transform t = Transform::Identity();
  for (int cur = link; model.ParentJoint(cur) != -1;
       cur = model.ParentLink(cur)) {
    const int j = model.ParentJoint(cur);
    const Joint& joint = model.joints()[j];
    Transform local = joint.origin;
    const int qi = model.QIndex(j);
    if (qi >= 0) local.rotate(Eigen::AngleAxisd(q[qi], joint.axis));
    t = local * t;
  }
  return t;
}

Pose ForwardKinematics(const RobotModel& model, const Eigen::VectorXd& q,
                       std::string_view link) {
  return Pose::FromTransform(ForwardKinematics(model, q, model.LinkIndex(link)));
}

Jacobian GeometricJacobian(const RobotModel& model,
                           const std::vector<Transform>& link_transforms,
                           int link, const Vec3& point) {
  Jacobian jac;
  jac.joints = model.ChainJoints(link);
  jac.matrix.resize(6, static_cast<Eigen::Index>(jac.joints.size()));
  for (size_t c = 0; c < jac.joints.size(); ++c) {
    const Joint& joint = model.joints()[jac.joints[c]];
    const Transform& frame = link_transforms[model.JointChildLink(jac.joints[c])];
    const Vec3 axis = frame.linear() * joint.axis;
    jac.matrix.col(c).head<3>() = axis.cross(point - frame.translation());
    jac.matrix.col(c).tail<3>() = axis;
  }
  return jac;
}

Jacobian GeometricJacobian(const RobotModel& model, const Eigen::VectorXd& q,
                           std::string_view link) {
  const int idx = model.LinkIndex(link);
  const std::vector<Transform> transforms = LinkTransforms(model, q);
  return GeometricJacobian(model, transforms, idx,
                           transforms[idx].translation());
}

Vector6d PoseError(const Pose& current, const Pose& target) {
  Vector6d e;
  e.head<3>() = target.position - current.position;
  const Mat3 rel = target.orientation.normalized().toRotationMatrix() *
                   current.orientation.normalized().toRotationMatrix().transpose();
  e.tail<3>() = RotationVector(rel);
  return e;
}

Eigen::MatrixXd PseudoInverse(const Eigen::MatrixXd& m,
                              double relative_tolerance) {
  if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = relative_tolerance * (s.size() ? s[0] : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cutoff && s[i] > 0.0) inv[i] = 1.0 / s[i];
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

const char* IkStatusName(IkStatus status) {
  switch (status) {
    case IkStatus::kConverged:
      return "converged";
    case IkStatus::kMaxIterations:
      return "max_iterations";
    case IkStatus::kJointLimited:
      return "joint_limited";
  }
  return "unknown";
}

IkResidual ComputeIkResidual(const RobotModel& model, const Eigen::VectorXd& q,
                             int link, const Pose& target, bool position_only) {
  const Vector6d e =
      PoseError(Pose::FromTransform(ForwardKinematics(model, q, link)), target);
  IkResidual r;
  r.position = e.head<3>().norm();
  r.rotation = position_only ? 0.0 : e.tail<3>().norm();
  return r;
}

Eigen::VectorXd DlsStep(const RobotModel& model, const Eigen::VectorXd& q,
                        int link, const Pose& target, const IkParams& params,
                        const Eigen::VectorXd& rest_posture) {
  const std::vector<Transform> transforms = LinkTransforms(model, q);
  const Transform& frame = transforms[link];
  const Jacobian full =
      GeometricJacobian(model, transforms, link, frame.translation());
  const int n = static_cast<int>(full.joints.size());
  if (n == 0) return q;
  const Vector6d e6 = PoseError(Pose::FromTransform(frame), target);
  const int rows = params.position_only ? 3 : 6;
  const Eigen::VectorXd e = e6.head(rows);

  Eigen::VectorXd bias = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < n; ++c) {
    const int qi = model.QIndex(full.joints[c]);
    bias[c] = params.nullspace_gain * (rest_posture[qi] - q[qi]);
  }

  // Joints resting on a limit and pushed further out by the step are dropped
  // from the solve, so the remaining joints take up their share.
  std::vector<bool> frozen(n, false);
  Eigen::VectorXd dq = Eigen::VectorXd::Zero(n);
  for (int pass = 0; pass <= n; ++pass) {
    Eigen::MatrixXd jac = full.matrix.topRows(rows);
    for (int c = 0; c < n; ++c) {
      if (frozen[c]) jac.col(c).setZero();
    }
    const Eigen::MatrixXd damped =
        jac * jac.transpose() +
        params.damping * params.damping * Eigen::MatrixXd::Identity(rows, rows);
    dq = jac.transpose() * damped.ldlt().solve(e);
    if (params.nullspace_gain > 0.0) {
      Eigen::MatrixXd projector =
          Eigen::MatrixXd::Identity(n, n) - PseudoInverse(jac) * jac;
      for (int c = 0; c < n; ++c) {
        if (frozen[c]) projector.row(c).setZero();
      }
      dq += projector * bias;
    }
    bool changed = false;
    for (int c = 0; c < n; ++c) {
      if (frozen[c]) continue;
      const Joint& joint = model.joints()[full.joints[c]];
      const double v = q[model.QIndex(full.joints[c])];
      if ((v <= joint.lower && dq[c] < 0.0) || (v >= joint.upper && dq[c] > 0.0)) {
        frozen[c] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }

  dq = dq.cwiseMax(-params.step_clamp).cwiseMin(params.step_clamp);

  Eigen::VectorXd next = q;
  for (int c = 0; c < n; ++c) {
    const Joint& joint = model.joints()[full.joints[c]];
    const int qi = model.QIndex(full.joints[c]);
    next[qi] = std::clamp(q[qi] + dq[c], joint.lower, joint.upper);
  }
  return next;
}

IkResult SolveIkDls(const RobotModel& model, const Eigen::VectorXd& q0,
                    int link, const Pose& target, const IkParams& params) {
  CheckDimension(model, q0);
  CheckParams(params);
  const Eigen::VectorXd rest =
      params.rest_posture.size() == 0 ? q0 : params.rest_posture;
  CheckDimension(model, rest);

  IkResult best;
  best.q = q0;
  best.residual = ComputeIkResidual(model, q0, link, target,
                                    params.position_only);
  best.iterations = 0;
  if (Converged(best.residual, params)) {
    best.status = IkStatus::kConverged;
    return best;
  }
  double best_merit = Merit(best.residual, params);
  Eigen::VectorXd q = q0;
  for (int it = 1; it <= params.max_iterations; ++it) {
    q = DlsStep(model, q, link, target, params, rest);
    const IkResidual r =
        ComputeIkResidual(model, q, link, target, params.position_only);
    const double merit = Merit(r, params);
    if (merit < best_merit) {
      best_merit = merit;
      best.q = q;
      best.residual = r;
      best.iterations = it;
    }
    if (Converged(r, params)) {
      best.q = q;
      best.residual = r;
      best.iterations = it;
      best.status = IkStatus::kConverged;
      return best;
    }
  }
  best.status = IkStatus::kMaxIterations;
  for (int j : model.ChainJoints(link)) {
    const Joint& joint = model.joints()[j];
    const double v = best.q[model.QIndex(j)];
    if (v <= joint.lower || v >= joint.upper) {
      best.status = IkStatus::kJointLimited;
      break;
    }
  }
  return best;
}

IkResult SolveIkDls(const RobotModel& model, const Eigen::VectorXd& q0,
                    std::string_view link, const Pose& target,
                    const IkParams& params) {
  return SolveIkDls(model, q0, model.LinkIndex(link), target, params);
}

}  // namespace humsim
