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

#include "humsim/world.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "humsim/error.h"
#include "humsim/kinematics.h"
#include "humsim/skin.h"

namespace humsim {
namespace {

bool IsRobotContact(const Contact& c) {
  return c.body_a.is_link() || c.body_b.is_link();
}

bool IsSelfContact(const Contact& c) {
  return c.body_a.is_link() && c.body_b.is_link();
}

}  // namespace

const char* MotionStateName(MotionState state) {
  switch (state) {
    case MotionState::kRunning:
      return "running";
    case MotionState::kDone:
      return "done";
    case MotionState::kStoppedOnCollision:
      return "stopped_on_collision";
    case MotionState::kRejected:
      return "rejected";
  }
  return "unknown";
}

World::World(RobotModel model, SceneConfig config, WorldParams params)
    : model_(std::move(model)), config_(std::move(config)), params_(params) {
  ValidateSceneConfig(config_, model_);
  q_ = model_.HomePosture();
  for (const auto& [name, value] : config_.initial_joints) {
    q_[model_.QIndex(model_.JointIndex(name))] = value;
  }
  q_dot_ = Eigen::VectorXd::Zero(model_.dof());
  RefreshKinematics();
  for (const ObjectSpec& spec : config_.objects) {
    ObjectState state;
    state.spec = spec;
    state.pose = spec.pose;
    objects_.push_back(std::move(state));
  }
  RefreshColliders();
  if (config_.flags.skin) skin_ = ComputeSkinActivations(*this);
}

void World::SetJointPositions(const Eigen::VectorXd& q) {
  if (q.size() != model_.dof()) {
    throw PreconditionError(fmt::format(
        "joint vector has {} entries, expected {}", q.size(), model_.dof()));
  }
  q_ = q.cwiseMax(model_.LowerLimits()).cwiseMin(model_.UpperLimits());
  q_dot_.setZero();
  RefreshKinematics();
  UpdateAttachedObjects();
  RefreshColliders();
  if (config_.flags.skin) skin_ = ComputeSkinActivations(*this);
}

Vec3 World::LinkPointVelocity(int link, const Vec3& point) const {
  return link_linear_velocity_[link] +
         link_angular_velocity_[link].cross(point -
                                            transforms_[link].translation());
}

int World::end_effector_link() const {
  if (!config_.end_effector.empty()) {
    return model_.EndEffectorLink(config_.end_effector);
  }
  if (model_.end_effectors().empty()) {
    throw PreconditionError("no end effector configured");
  }
  return model_.LinkIndex(model_.end_effectors().begin()->second);
}

int World::AddObject(const ObjectSpec& spec) {
  if (FindObject(spec.name)) {
    throw ValidationError(fmt::format("duplicate object '{}'", spec.name));
  }
  if (!spec.collision) {
    throw ValidationError(
        fmt::format("object '{}' has no collision shape", spec.name));
  }
  if (!ShapeDimensionsValid(spec.collision->shape)) {
    throw ValidationError(
        fmt::format("object '{}' has invalid dimensions", spec.name));
  }
  if (spec.dynamic && !(spec.mass > 0.0)) {
    throw ValidationError(
        fmt::format("object '{}' needs a positive mass", spec.name));
  }
  ObjectState state;
  state.spec = spec;
  state.pose = spec.pose;
  objects_.push_back(std::move(state));
  RefreshColliders();
  if (config_.flags.skin) skin_ = ComputeSkinActivations(*this);
  return static_cast<int>(objects_.size()) - 1;
}

std::optional<int> World::FindObject(std::string_view name) const {
  for (size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].spec.name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

int World::ObjectIndex(std::string_view name) const {
  if (auto i = FindObject(name)) return *i;
  throw LookupError(fmt::format("unknown object '{}'", name));
}

void World::SetObjectPose(int object, const Pose& pose) {
  ObjectState& o = objects_.at(object);
  o.pose = pose;
  o.pose.orientation = CanonicalQuat(pose.orientation);
  if (o.attached_link) {
    o.attach_offset = transforms_[*o.attached_link].inverse() * o.pose.ToTransform();
  }
  RefreshColliders();
  if (config_.flags.skin) skin_ = ComputeSkinActivations(*this);
}

void World::SetObjectVelocity(int object, const Vec3& velocity) {
  objects_.at(object).velocity = velocity;
}

void World::Attach(int object, int link) {
  ObjectState& o = objects_.at(object);
  o.attached_link = link;
  o.attach_offset = transforms_.at(link).inverse() * o.pose.ToTransform();
  o.velocity.setZero();
}

void World::Detach(int object) {
  ObjectState& o = objects_.at(object);
  if (o.attached_link) {
    o.velocity = LinkPointVelocity(*o.attached_link, o.pose.position);
  }
  o.attached_link.reset();
}

void World::SetCommand(ControlCommand command, MotionStatus status) {
  command_ = std::move(command);
  command_status_ = std::move(status);
}

void World::RefreshKinematics() {
  transforms_ = LinkTransforms(model_, q_);
  const size_t n = model_.links().size();
  link_linear_velocity_.assign(n, Vec3::Zero());
  link_angular_velocity_.assign(n, Vec3::Zero());
  const auto& joints = model_.joints();
  for (int j = 0; j < static_cast<int>(joints.size()); ++j) {
    const int parent = model_.JointParentLink(j);
    const int child = model_.JointChildLink(j);
    const Vec3 w = link_angular_velocity_[parent];
    link_linear_velocity_[child] =
        link_linear_velocity_[parent] +
        w.cross(transforms_[child].translation() -
                transforms_[parent].translation());
    Vec3 w_child = w;
    const int qi = model_.QIndex(j);
    if (qi >= 0) {
      w_child += transforms_[child].linear() * joints[j].axis * q_dot_[qi];
    }
    link_angular_velocity_[child] = w_child;
  }
}

void World::RefreshColliders() {
  colliders_.clear();
  const auto& links = model_.links();
  for (int l = 0; l < static_cast<int>(links.size()); ++l) {
    for (const Primitive& prim : links[l].collision) {
      Collider c{BodyId{BodyId::Kind::kLink, l}, prim.shape,
                 transforms_[l] * prim.local, {}};
      c.box = ComputeAabb(c.shape, c.pose);
      colliders_.push_back(std::move(c));
    }
  }
  for (int o = 0; o < static_cast<int>(objects_.size()); ++o) {
    const Primitive& prim = *objects_[o].spec.collision;
    Collider c{BodyId{BodyId::Kind::kObject, o}, prim.shape,
               objects_[o].pose.ToTransform() * prim.local, {}};
    c.box = ComputeAabb(c.shape, c.pose);
    colliders_.push_back(std::move(c));
  }
}

void World::UpdateAttachedObjects() {
  for (ObjectState& o : objects_) {
    if (!o.attached_link) continue;
    o.pose = Pose::FromTransform(transforms_[*o.attached_link] * o.attach_offset);
    o.velocity = LinkPointVelocity(*o.attached_link, o.pose.position);
  }
}

std::vector<Contact> World::DetectCollisions() const {
  return DetectCollisions(config_.flags.self_collisions);
}

std::vector<Contact> World::DetectCollisions(bool include_self) const {
  std::vector<Contact> out;
  for (size_t i = 0; i < colliders_.size(); ++i) {
    const Collider& a = colliders_[i];
    for (size_t k = i + 1; k < colliders_.size(); ++k) {
      const Collider& b = colliders_[k];
      if (a.body == b.body) continue;
      if (a.body.is_link() && b.body.is_link()) {
        if (!include_self) continue;
        if (model_.Adjacent(a.body.index, b.body.index)) continue;
      }
      // A held object moves with the robot and does not collide with it.
      if (a.body.is_link() != b.body.is_link()) {
        const BodyId& ob = a.body.is_object() ? a.body : b.body;
        if (objects_[ob.index].attached_link) continue;
      }
      if (!a.box.Overlaps(b.box)) continue;
      auto geom = Collide(a.shape, a.pose, b.shape, b.pose);
      if (!geom) continue;
      out.push_back(Contact{a.body, b.body, geom->point, geom->normal,
                            geom->depth});
    }
  }
  return out;
}

Vec3 World::BodyPointVelocity(const BodyId& body, const Vec3& point) const {
  if (body.is_link()) return LinkPointVelocity(body.index, point);
  const ObjectState& o = objects_[body.index];
  if (o.attached_link) return LinkPointVelocity(*o.attached_link, point);
  return o.spec.dynamic ? o.velocity : Vec3::Zero();
}

Eigen::VectorXd World::CommandedVelocities() {
  Eigen::VectorXd qd = Eigen::VectorXd::Zero(model_.dof());
  if (command_status_.terminal()) return qd;
  const double h = step_size();
  const Eigen::VectorXd vmax = model_.MaxVelocities();
  auto drive = [&](const std::vector<int>& indices,
                   const Eigen::VectorXd& targets, bool full) {
    for (size_t i = 0; i < indices.size(); ++i) {
      const int qi = indices[i];
      const double target = full ? targets[qi] : targets[static_cast<Eigen::Index>(i)];
      qd[qi] = std::clamp((target - q_[qi]) / h, -vmax[qi], vmax[qi]);
    }
  };
  if (auto* vc = std::get_if<VelocityCommand>(&command_)) {
    for (size_t i = 0; i < vc->q_indices.size(); ++i) {
      qd[vc->q_indices[i]] = vc->velocities[static_cast<Eigen::Index>(i)];
    }
  } else if (auto* pc = std::get_if<PositionCommand>(&command_)) {
    drive(pc->q_indices, pc->targets, false);
  } else if (auto* wc = std::get_if<WaypointCommand>(&command_)) {
    const Vec3 ee = transforms_[wc->link].translation();
    while (wc->current + 1 < wc->waypoints.size() &&
           (ee - wc->waypoints[wc->current].position).norm() <
               wc->switch_radius) {
      ++wc->current;
    }
    drive(wc->q_indices, wc->joint_targets[wc->current], true);
  }
  return qd;
}

void World::UpdateCommandStatus(const std::vector<Contact>& contacts) {
  if (command_status_.terminal()) return;
  const CommandOptions* options = nullptr;
  bool done = false;
  auto reached = [&](const std::vector<int>& indices,
                     const Eigen::VectorXd& targets, bool full) {
    for (size_t i = 0; i < indices.size(); ++i) {
      const int qi = indices[i];
      const double target = full ? targets[qi] : targets[static_cast<Eigen::Index>(i)];
      if (std::abs(q_[qi] - target) >= kPositionTolerance) return false;
    }
    return true;
  };
  if (auto* pc = std::get_if<PositionCommand>(&command_)) {
    options = &pc->options;
    done = reached(pc->q_indices, pc->targets, false);
  } else if (auto* wc = std::get_if<WaypointCommand>(&command_)) {
    options = &wc->options;
    done = wc->current + 1 == wc->waypoints.size() &&
           reached(wc->q_indices, wc->joint_targets[wc->current], true);
  }
  if (options && options->stop_on_collision) {
    for (const Contact& c : contacts) {
      if (!IsRobotContact(c)) continue;
      if (IsSelfContact(c) && !options->check_self_collision) continue;
      command_status_ = {MotionState::kStoppedOnCollision,
                         fmt::format("contact at t={}", sim_time())};
      return;
    }
  }
  if (done) command_status_ = {MotionState::kDone, {}};
}

void World::IntegrateObjects() {
  const double h = step_size();
  const double decay =
      params_.linear_damping > 0.0 ? std::exp(-params_.linear_damping * h) : 1.0;
  for (ObjectState& o : objects_) {
    if (!o.spec.dynamic || o.attached_link) continue;
    o.velocity.z() -= params_.gravity * h;
    o.velocity *= decay;
    o.pose.position += o.velocity * h;
  }
}

void World::ResolveContacts(const std::vector<Contact>& contacts,
                            bool impulses) {
  auto free_dynamic = [&](const BodyId& b) {
    return b.is_object() && objects_[b.index].spec.dynamic &&
           !objects_[b.index].attached_link;
  };
  for (const Contact& c : contacts) {
    const bool dyn_a = free_dynamic(c.body_a);
    const bool dyn_b = free_dynamic(c.body_b);
    if (!dyn_a && !dyn_b) continue;
    // Orient the pair so that `o` is dynamic and n points from other into o.
    const BodyId& obody = dyn_b ? c.body_b : c.body_a;
    const BodyId& other = dyn_b ? c.body_a : c.body_b;
    const Vec3 n = dyn_b ? c.normal : Vec3(-c.normal);
    const bool two_body = dyn_a && dyn_b;
    ObjectState& o = objects_[obody.index];
    ObjectState* p = two_body ? &objects_[other.index] : nullptr;

    const Vec3 v_other = two_body ? p->velocity : BodyPointVelocity(other, c.point);
    const Vec3 v_rel = o.velocity - v_other;
    const double vn = v_rel.dot(n);
    const double inv_o = 1.0 / o.spec.mass;
    const double inv_p = two_body ? 1.0 / p->spec.mass : 0.0;
    const double w_o = inv_o / (inv_o + inv_p);
    const double w_p = inv_p / (inv_o + inv_p);

    if (impulses && vn < 0.0) {
      double e = two_body ? std::min(o.spec.restitution, p->spec.restitution)
                          : o.spec.restitution;
      if (-vn < params_.resting_speed) e = 0.0;
      const double dv = -(1.0 + e) * vn;
      o.velocity += w_o * dv * n;
      if (two_body) p->velocity -= w_p * dv * n;
    }
    if (impulses) {
      const Vec3 v_rel2 = o.velocity - (two_body ? p->velocity : v_other);
      const Vec3 vt = v_rel2 - v_rel2.dot(n) * n;
      const Vec3 dvt = (1.0 - params_.tangential_damping) * vt;
      o.velocity -= w_o * dvt;
      if (two_body) p->velocity += w_p * dvt;
    }

    o.pose.position += w_o * c.depth * n;
    if (two_body) p->pose.position -= w_p * c.depth * n;
  }
}

void World::UpdateGrippers(const std::vector<Contact>& contacts) {
  for (const GripperSpec& g : model_.grippers()) {
    const int hand = model_.LinkIndex(g.hand_link);
    const double opening = q_[model_.QIndex(model_.JointIndex(g.joint))];
    std::vector<int> gripper_links;
    gripper_links.push_back(hand);
    for (const std::string& l : g.links) gripper_links.push_back(model_.LinkIndex(l));
    auto is_gripper = [&](const BodyId& b) {
      return b.is_link() && std::find(gripper_links.begin(), gripper_links.end(),
                                      b.index) != gripper_links.end();
    };

    if (opening < g.release_below) {
      for (int o = 0; o < static_cast<int>(objects_.size()); ++o) {
        if (objects_[o].attached_link == hand) Detach(o);
      }
      continue;
    }
    for (int o = 0; o < static_cast<int>(objects_.size()); ++o) {
      ObjectState& obj = objects_[o];
      if (!obj.spec.dynamic || obj.attached_link) continue;
      // Normals pointing from the gripper into the object.
      std::vector<Vec3> normals;
      for (const Contact& c : contacts) {
        if (c.body_b == BodyId{BodyId::Kind::kObject, o} && is_gripper(c.body_a)) {
          normals.push_back(c.normal);
        } else if (c.body_a == BodyId{BodyId::Kind::kObject, o} &&
                   is_gripper(c.body_b)) {
          normals.push_back(-c.normal);
        }
      }
      bool opposed = false;
      for (size_t i = 0; i < normals.size() && !opposed; ++i) {
        for (size_t k = i + 1; k < normals.size(); ++k) {
          if (normals[i].dot(normals[k]) < -0.5) {
            opposed = true;
            break;
          }
        }
      }
      if (opposed) Attach(o, hand);
    }
  }
}

StepReport World::UpdateSimulation() {
  const double h = step_size();
  const Eigen::VectorXd qd = CommandedVelocities();
  const Eigen::VectorXd q_prev = q_;
  q_ = (q_ + qd * h).cwiseMax(model_.LowerLimits()).cwiseMin(model_.UpperLimits());
  q_dot_ = (q_ - q_prev) / h;
  ++step_count_;
  RefreshKinematics();
  UpdateAttachedObjects();
  IntegrateObjects();
  RefreshColliders();

  std::vector<Contact> contacts = DetectCollisions();
  ResolveContacts(contacts, /*impulses=*/true);
  for (int it = 1; it < params_.contact_iterations; ++it) {
    RefreshColliders();
    std::vector<Contact> again = DetectCollisions();
    bool penetrating = false;
    for (const Contact& c : again) penetrating |= c.depth > 1e-9;
    if (!penetrating) break;
    ResolveContacts(again, /*impulses=*/false);
  }
  UpdateGrippers(contacts);
  UpdateAttachedObjects();
  RefreshColliders();
  UpdateCommandStatus(contacts);
  last_contacts_ = contacts;
  if (config_.flags.skin) skin_ = ComputeSkinActivations(*this);

  StepReport report;
  report.sim_time = sim_time();
  report.contacts = std::move(contacts);
  if (has_command()) report.command_status = command_status_.state;
  if (observer_) observer_(*this, report);
  return report;
}

bool World::StepIfElapsed(double elapsed_since_last_step, double min_period) {
  if (!(min_period >= 0.0)) {
    throw PreconditionError("min_period must be non-negative");
  }
  if (elapsed_since_last_step < min_period) return false;
  UpdateSimulation();
  return true;
}

}  // namespace humsim
