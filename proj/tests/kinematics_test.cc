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


#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>
#include <doctest.h>

#include "humsim/error.h"
#include "humsim/kinematics.h"
#include "humsim/model.h"
#include "test_support.h"

namespace humsim {
namespace {

// Planar 2R arm in the xy plane, unit links, with a fixed tool frame.
constexpr char kPlanarArm[] = R"(<robot name="planar">
  <link name="base"/><link name="l1"/><link name="l2"/><link name="tool"/>
  <joint name="j1" type="revolute"><parent link="base"/><child link="l1"/>
    <origin xyz="0 0 0" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-3.1" upper="3.1" velocity="1"/></joint>
  <joint name="j2" type="revolute"><parent link="l1"/><child link="l2"/>
    <origin xyz="1 0 0" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-3.1" upper="3.1" velocity="1"/></joint>
  <joint name="tip" type="fixed"><parent link="l2"/><child link="tool"/>
    <origin xyz="1 0 0" rpy="0 0 0"/></joint>
</robot>)";

TEST_CASE("root link at zero posture is the identity") {
  const RobotModel& m = testing::ShippedModel();
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(m.dof());
  CHECK(ForwardKinematics(m, q, m.root_link()).isApprox(Transform::Identity()));
}

TEST_CASE("single revolute joint rotates its child offset") {
  const RobotModel m = ParseRobotDescription(R"(<robot name="r">
    <link name="a"/><link name="b"/>
    <joint name="j" type="revolute"><parent link="a"/><child link="b"/>
      <origin xyz="0 0 0" rpy="0 0 0"/><axis xyz="0 0 1"/>
      <limit lower="-4" upper="4" velocity="1"/></joint>
    <link name="c"/>
    <joint name="f" type="fixed"><parent link="b"/><child link="c"/>
      <origin xyz="1 0 0" rpy="0 0 0"/></joint></robot>)");
  Eigen::VectorXd q(1);
  q << std::numbers::pi / 2;
  const Pose p = ForwardKinematics(m, q, "c");
  CHECK((p.position - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("forward kinematics matches the naive chain oracle") {
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd q = testing::RandomPosture(m, rng);
    const auto all = LinkTransforms(m, q);
    for (const Link& link : m.links()) {
      const Eigen::Matrix4d oracle = testing::NaiveChainTransform(m, q, link.name);
      const int idx = m.LinkIndex(link.name);
      CHECK((all[idx].matrix() - oracle).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((ForwardKinematics(m, q, idx).matrix() - oracle).cwiseAbs().maxCoeff() <
            1e-9);
    }
  }
}

TEST_CASE("child transform composes parent transform and joint motion") {
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(12);
  const Eigen::VectorXd q = testing::RandomPosture(m, rng);
  const auto all = LinkTransforms(m, q);
  for (int j = 0; j < static_cast<int>(m.joints().size()); ++j) {
    const Joint& joint = m.joints()[j];
    Eigen::Matrix4d local = joint.origin.matrix();
    if (m.QIndex(j) >= 0) {
      local = local * testing::RodriguesMatrix(joint.axis, q[m.QIndex(j)]);
    }
    const Eigen::Matrix4d expected = all[m.JointParentLink(j)].matrix() * local;
    CHECK((all[m.JointChildLink(j)].matrix() - expected).cwiseAbs().maxCoeff() <
          1e-9);
  }
}

TEST_CASE("textbook jacobian column of a z revolute") {
  const RobotModel m = ParseRobotDescription(kPlanarArm);
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(2);
  const auto transforms = LinkTransforms(m, q);
  const Jacobian jac =
      GeometricJacobian(m, transforms, m.LinkIndex("l1"), Vec3(1, 0, 0));
  REQUIRE(jac.matrix.cols() == 1);
  Vector6d expected;
  expected << 0, 1, 0, 0, 0, 1;
  CHECK((jac.matrix.col(0) - expected).norm() < 1e-12);
}

TEST_CASE("fixed-only chain has an empty jacobian") {
  const RobotModel m = ParseRobotDescription(R"(<robot name="r">
    <link name="a"/><link name="b"/>
    <joint name="f" type="fixed"><parent link="a"/><child link="b"/>
      <origin xyz="1 0 0" rpy="0 0 0"/></joint></robot>)");
  const Jacobian jac = GeometricJacobian(m, Eigen::VectorXd(0), "b");
  CHECK(jac.matrix.rows() == 6);
  CHECK(jac.matrix.cols() == 0);
}

TEST_CASE("jacobian matches central finite differences") {
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(13);
  for (const char* link : {"r_hand", "l_hand", "head", "r_finger"}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd q = testing::RandomPosture(m, rng);
      const Jacobian jac = GeometricJacobian(m, q, link);
      const Matrix6Xd fd =
          testing::FiniteDifferenceJacobian(m, q, link, jac.joints, 1e-6);
      CHECK((jac.matrix - fd).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("jacobian predicts small pose changes") {
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd q = testing::RandomPosture(m, rng);
    const Jacobian jac = GeometricJacobian(m, q, "r_hand");
    Eigen::VectorXd dq_chain = Eigen::VectorXd::Random(jac.joints.size());
    dq_chain *= 1e-6 / dq_chain.norm();
    Eigen::VectorXd q2 = q;
    for (size_t c = 0; c < jac.joints.size(); ++c) {
      q2[m.QIndex(jac.joints[c])] += dq_chain[c];
    }
    const Vector6d e = PoseError(ForwardKinematics(m, q, "r_hand"),
                                 ForwardKinematics(m, q2, "r_hand"));
    CHECK((e - jac.matrix * dq_chain).norm() < 1e-9);
  }
}

TEST_CASE("pose error cases") {
  const Pose a;
  CHECK(PoseError(a, a).norm() == 0.0);
  Pose b;
  b.position = Vec3(0.1, 0, 0);
  Vector6d expected;
  expected << 0.1, 0, 0, 0, 0, 0;
  CHECK((PoseError(a, b) - expected).norm() < 1e-15);
  Pose c;
  c.orientation = Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()));
  expected << 0, 0, 0, 0, 0, std::numbers::pi / 2;
  CHECK((PoseError(a, c) - expected).norm() < 1e-12);
}

TEST_CASE("ik fixed point returns the seed untouched") {
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(15);
  const Eigen::VectorXd q0 = testing::RandomPosture(m, rng);
  const Pose target = ForwardKinematics(m, q0, "r_hand");
  const IkResult r = SolveIkDls(m, q0, "r_hand", target);
  CHECK(r.status == IkStatus::kConverged);
  CHECK(r.iterations == 0);
  CHECK(r.q == q0);
}

TEST_CASE("planar arm ik agrees with the closed-form two-link solution") {
  const RobotModel m = ParseRobotDescription(kPlanarArm);
  Pose target;
  target.position = Vec3(1, 1, 0);
  IkParams params;
  params.position_only = true;
  Eigen::VectorXd q0(2);
  q0 << 0.3, 0.5;
  const IkResult r = SolveIkDls(m, q0, "tool", target, params);
  CHECK(r.status == IkStatus::kConverged);
  CHECK(r.residual.position < 1e-4);
  // Closed form: cos q2 = (x^2 + y^2 - 2) / 2, two elbow branches.
  const double x = 1, y = 1;
  const double c2 = (x * x + y * y - 2.0) / 2.0;
  bool matched = false;
  for (double sign : {1.0, -1.0}) {
    const double q2 = sign * std::acos(c2);
    const double q1 = std::atan2(y, x) - std::atan2(std::sin(q2), 1 + std::cos(q2));
    if (std::abs(r.q[0] - q1) < 1e-3 && std::abs(r.q[1] - q2) < 1e-3) {
      matched = true;
    }
  }
  CHECK(matched);
}

TEST_CASE("out of reach target stretches the arm toward it") {
  const RobotModel m = ParseRobotDescription(kPlanarArm);
  Pose target;
  target.position = Vec3(3, 0, 0);
  IkParams params;
  params.position_only = true;
  Eigen::VectorXd q0(2);
  q0 << 0.4, 0.6;
  const IkResult r = SolveIkDls(m, q0, "tool", target, params);
  CHECK(r.status == IkStatus::kMaxIterations);
  CHECK(std::abs(r.residual.position - 1.0) < 0.05);
}

TEST_CASE("ik never returns worse than its seed") {
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd q0 = testing::RandomPosture(m, rng);
    Pose target;
    target.position = Vec3(testing::Uniform(rng, -1, 1),
                           testing::Uniform(rng, -1, 1),
                           testing::Uniform(rng, -1, 1));
    IkParams params;
    params.max_iterations = 30;
    const IkResult r = SolveIkDls(m, q0, "l_hand", target, params);
    const IkResidual r0 = ComputeIkResidual(m, q0, m.LinkIndex("l_hand"), target);
    CHECK(std::max(r.residual.position / params.tol_pos,
                   r.residual.rotation / params.tol_rot) <=
          std::max(r0.position / params.tol_pos, r0.rotation / params.tol_rot));
  }
}

TEST_CASE("each dls update component stays within the step clamp") {
  const RobotModel& m = testing::ShippedModel();
  const Eigen::VectorXd q = m.HomePosture();
  Pose target = ForwardKinematics(m, q, "r_hand");
  target.position += Vec3(0.3, 0.2, 0.4);
  IkParams params;
  const int link = m.LinkIndex("r_hand");
  const Eigen::VectorXd next = DlsStep(m, q, link, target, params, q);
  CHECK((next - q).cwiseAbs().maxCoeff() <= params.step_clamp + 1e-15);
  CHECK((next - q).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("nullspace bias moves toward the rest posture at a solution") {
  const RobotModel& m = testing::ShippedModel();
  std::mt19937_64 rng(17);
  const Eigen::VectorXd rest = m.HomePosture();
  // Redundant chain: torso plus arm is 10 joints for a 6D task.
  Eigen::VectorXd q = rest;
  for (int j : m.ChainJoints(m.LinkIndex("r_hand"))) {
    const Joint& joint = m.joints()[j];
    q[m.QIndex(j)] = std::clamp(0.3 * testing::Uniform(rng, -1, 1), joint.lower,
                                joint.upper);
  }
  const int link = m.LinkIndex("r_hand");
  const Pose target = Pose::FromTransform(ForwardKinematics(m, q, link));
  IkParams params;
  params.nullspace_gain = 0.01;
  const Eigen::VectorXd next = DlsStep(m, q, link, target, params, rest);
  CHECK((next - rest).norm() < (q - rest).norm());
  const IkResidual r = ComputeIkResidual(m, next, link, target);
  CHECK(r.position < 1e-3);
  CHECK(r.rotation < 1e-2);
}

TEST_CASE("ik preconditions") {
  const RobotModel& m = testing::ShippedModel();
  CHECK_THROWS_AS(SolveIkDls(m, Eigen::VectorXd::Zero(3), "r_hand", Pose{}),
                  PreconditionError);
  IkParams bad;
  bad.damping = 0.0;
  CHECK_THROWS_AS(SolveIkDls(m, m.HomePosture(), "r_hand", Pose{}, bad),
                  PreconditionError);
}

TEST_CASE("pseudoinverse satisfies the Penrose conditions") {
  std::mt19937_64 rng(18);
  Eigen::MatrixXd a(6, 9);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = testing::Uniform(rng, -1, 1);
  const Eigen::MatrixXd p = PseudoInverse(a);
  CHECK((a * p * a - a).norm() < 1e-10);
  CHECK((p * a * p - p).norm() < 1e-10);
  CHECK(((a * p).transpose() - a * p).norm() < 1e-10);
  CHECK(((p * a).transpose() - p * a).norm() < 1e-10);
}

}  // namespace
}  // namespace humsim
