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

// Simulation state and stepping. The robot is kinematic: it follows commanded
// joint velocities exactly and is infinitely stiff in contacts. Objects move
// by semi-implicit Euler under gravity with impulse contacts.

#ifndef HUMSIM_WORLD_H_
#define HUMSIM_WORLD_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "humsim/command.h"
#include "humsim/geometry.h"
#include "humsim/model.h"
#include "humsim/skin_state.h"

namespace humsim {

struct BodyId {
  enum class Kind { kLink, kObject };
  Kind kind = Kind::kLink;
  int index = 0;

  bool is_link() const { return kind == Kind::kLink; }
  bool is_object() const { return kind == Kind::kObject; }
  friend bool operator==(const BodyId&, const BodyId&) = default;
};

struct Contact {
  BodyId body_a;
  BodyId body_b;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // from a to b
  double depth = 0.0;
};

struct StepReport {
  double sim_time = 0.0;
  std::vector<Contact> contacts;
  std::optional<MotionState> command_status;  // none without a command
};

struct ObjectState {
  ObjectSpec spec;
  Pose pose;
  Vec3 velocity = Vec3::Zero();
  std::optional<int> attached_link;
  Transform attach_offset = Transform::Identity();  // object in link frame
};

// A posed collision primitive of a link or an object.
struct Collider {
  BodyId body;
  Shape shape;
  Transform pose = Transform::Identity();
  Aabb box;
};

struct WorldParams {
  double gravity = 9.81;  // m/s^2 along -z
  // Multiplier on the tangential relative velocity per contact per step.
  double tangential_damping = 0.98;
  // Free-flight velocity decay per second; zero keeps free fall exact.
  double linear_damping = 0.0;
  // Impacts slower than this (m/s) do not bounce.
  double resting_speed = 0.1;
  int contact_iterations = 4;
};

class World {
 public:
  World(RobotModel model, SceneConfig config, WorldParams params = {});

  const RobotModel& model() const { return model_; }
  const SceneConfig& config() const { return config_; }
  const WorldParams& params() const { return params_; }
  double step_size() const { return config_.step_size; }
  std::int64_t step_count() const { return step_count_; }
  // Exactly step_count * step_size.
  double sim_time() const {
    return static_cast<double>(step_count_) * config_.step_size;
  }

  const Eigen::VectorXd& q() const { return q_; }
  const Eigen::VectorXd& q_dot() const { return q_dot_; }
  // Setup helper: teleports the robot (clamped to limits), no velocity.
  void SetJointPositions(const Eigen::VectorXd& q);

  const std::vector<Transform>& link_transforms() const { return transforms_; }
  Transform LinkPose(int link) const { return transforms_[link]; }
  // Velocity of a point rigidly attached to a link, from the last step.
  Vec3 LinkPointVelocity(int link, const Vec3& point) const;
  int end_effector_link() const;

  // Adds an object; throws ValidationError for a duplicate name.
  int AddObject(const ObjectSpec& spec);
  const std::vector<ObjectState>& objects() const { return objects_; }
  std::optional<int> FindObject(std::string_view name) const;
  int ObjectIndex(std::string_view name) const;
  // Scripted placement; also used to move static props between steps.
  void SetObjectPose(int object, const Pose& pose);
  void SetObjectVelocity(int object, const Vec3& velocity);

  // Rigidly fixes an object to a link at its current relative pose.
  void Attach(int object, int link);
  void Detach(int object);

  StepReport UpdateSimulation();
  // Steps iff elapsed >= min_period.
  bool StepIfElapsed(double elapsed_since_last_step, double min_period);

  // Robot-object, object-object and, when enabled, non-adjacent link-link
  // contacts for the current state.
  std::vector<Contact> DetectCollisions() const;
  std::vector<Contact> DetectCollisions(bool include_self) const;
  const std::vector<Contact>& last_contacts() const { return last_contacts_; }

  const std::vector<Collider>& colliders() const { return colliders_; }
  const SkinState& skin() const { return skin_; }

  void SetCommand(ControlCommand command, MotionStatus status);
  const ControlCommand& command() const { return command_; }
  const MotionStatus& command_status() const { return command_status_; }
  bool has_command() const {
    return !std::holds_alternative<std::monostate>(command_);
  }

  using StepObserver = std::function<void(const World&, const StepReport&)>;
  void SetStepObserver(StepObserver observer) {
    observer_ = std::move(observer);
  }

 private:
  Eigen::VectorXd CommandedVelocities();
  void UpdateCommandStatus(const std::vector<Contact>& contacts);
  void IntegrateObjects();
  void ResolveContacts(const std::vector<Contact>& contacts, bool impulses);
  void UpdateGrippers(const std::vector<Contact>& contacts);
  void UpdateAttachedObjects();
  void RefreshKinematics();
  void RefreshColliders();
  Vec3 BodyPointVelocity(const BodyId& body, const Vec3& point) const;

  RobotModel model_;
  SceneConfig config_;
  WorldParams params_;
  std::int64_t step_count_ = 0;
  Eigen::VectorXd q_;
  Eigen::VectorXd q_dot_;
  std::vector<Transform> transforms_;
  std::vector<Vec3> link_linear_velocity_;
  std::vector<Vec3> link_angular_velocity_;
  std::vector<ObjectState> objects_;
  std::vector<Collider> colliders_;
  std::vector<Contact> last_contacts_;
  SkinState skin_;
  ControlCommand command_;
  MotionStatus command_status_;
  StepObserver observer_;
};

}  // namespace humsim

#endif  // HUMSIM_WORLD_H_
