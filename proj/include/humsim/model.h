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

// Robot description (URDF subset with collision-primitive extensions), scene
// configuration, and tactile taxel layouts.

#ifndef HUMSIM_MODEL_H_
#define HUMSIM_MODEL_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "humsim/geometry.h"

namespace humsim {

enum class JointType { kRevolute, kFixed };

struct Joint {
  std::string name;
  JointType type = JointType::kFixed;
  std::string parent;
  std::string child;
  Transform origin = Transform::Identity();  // child frame in parent frame
  Vec3 axis = Vec3::UnitZ();                 // in the child frame
  double lower = 0.0;
  double upper = 0.0;
  double max_velocity = 1.0;
};

struct Link {
  std::string name;
  std::vector<Primitive> collision;
  std::optional<std::string> visual_mesh;
};

struct Taxel {
  int id = 0;
  std::string link;
  Vec3 local_position = Vec3::Zero();
  Vec3 local_normal = Vec3::UnitZ();
  double ray_length = 0.005;
};

struct CameraMount {
  std::string name;
  std::string link;
  Transform local = Transform::Identity();  // optical frame: z fwd, x right
  int width = 160;
  int height = 120;
  double focal_length = 130.0;  // pixels
};

struct SkinPartSpec {
  std::string name;
  std::string link;
  std::string layout_file;  // as written in the description, may be empty
  std::vector<Taxel> taxels;
};

// One-DoF gripper. An object squeezed between two of `links` from opposing
// sides is attached to the hand; it is released once the gripper joint drops
// below `release_below`.
struct GripperSpec {
  std::string name;
  std::string joint;
  std::string hand_link;
  std::vector<std::string> links;
  double release_below = 0.1;
};

// Plain data as read from a description file. RobotModel validates it.
struct RobotDescription {
  std::string name;
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<CameraMount> cameras;
  std::map<std::string, std::string> end_effectors;  // name -> link
  std::vector<SkinPartSpec> skin_parts;
  std::vector<GripperSpec> grippers;
};

// Validated kinematic tree. Joints are stored in a topological order; the
// joint-space vector q holds one entry per revolute joint in that order.
class RobotModel {
 public:
  RobotModel() = default;
  explicit RobotModel(RobotDescription description);

  const std::string& name() const { return desc_.name; }
  const std::vector<Link>& links() const { return desc_.links; }
  const std::vector<Joint>& joints() const { return desc_.joints; }
  const std::vector<CameraMount>& cameras() const { return desc_.cameras; }
  const std::map<std::string, std::string>& end_effectors() const {
    return desc_.end_effectors;
  }
  const std::vector<SkinPartSpec>& skin_parts() const {
    return desc_.skin_parts;
  }
  const std::vector<GripperSpec>& grippers() const { return desc_.grippers; }
  const RobotDescription& description() const { return desc_; }

  int root_link() const { return root_link_; }
  int dof() const { return static_cast<int>(actuated_.size()); }
  // Joint index of the i-th entry of q.
  const std::vector<int>& actuated_joints() const { return actuated_; }
  // Entry of q driven by a joint, or -1 for fixed joints.
  int QIndex(int joint) const { return q_index_[joint]; }
  // Joint whose child is the link, or -1 for the root.
  int ParentJoint(int link) const { return parent_joint_[link]; }
  int ParentLink(int link) const;
  int JointParentLink(int joint) const { return joint_parent_link_[joint]; }
  int JointChildLink(int joint) const { return joint_child_link_[joint]; }
  const std::vector<int>& ChildJoints(int link) const {
    return child_joints_[link];
  }

  int LinkIndex(std::string_view name) const;   // throws LookupError
  int JointIndex(std::string_view name) const;  // throws LookupError
  std::optional<int> FindLink(std::string_view name) const;
  std::optional<int> FindJoint(std::string_view name) const;
  const CameraMount& Camera(std::string_view name) const;

  // Resolves an end-effector name or a plain link name to a link index.
  int EndEffectorLink(std::string_view name) const;

  // Actuated joints (joint indices) between the root and the link.
  std::vector<int> ChainJoints(int link) const;

  // True when both links carry geometry and are joined through joints whose
  // intermediate links carry none. Such pairs never self-collide.
  bool Adjacent(int link_a, int link_b) const;

  Eigen::VectorXd LowerLimits() const;
  Eigen::VectorXd UpperLimits() const;
  Eigen::VectorXd MaxVelocities() const;
  // Zero posture clamped into the joint limits.
  Eigen::VectorXd HomePosture() const;

  int TaxelCount() const;

 private:
  RobotDescription desc_;
  int root_link_ = 0;
  std::vector<int> actuated_;
  std::vector<int> q_index_;
  std::vector<int> parent_joint_;
  std::vector<int> joint_parent_link_;
  std::vector<int> joint_child_link_;
  std::vector<std::vector<int>> child_joints_;
  std::vector<int> geometric_ancestor_;
  std::map<std::string, int, std::less<>> link_by_name_;
  std::map<std::string, int, std::less<>> joint_by_name_;
};

// Parses the URDF subset. Elements: robot, link (collision with sphere,
// capsule, box geometry; visual mesh), joint (revolute|fixed; parent, child,
// origin xyz/rpy, axis, limit lower/upper/velocity), and the extension tags
// camera, end_effector, skin, gripper. Skin layout files are not read.
RobotModel ParseRobotDescription(std::string_view text);
std::string SerializeRobotDescription(const RobotModel& model);

// Parses the description and loads every skin layout file, resolved relative
// to the description's directory.
RobotModel LoadRobotModel(const std::filesystem::path& path);

// Rebuilds a model with the skin layouts replaced.
RobotModel WithSkinParts(const RobotModel& model,
                         std::vector<SkinPartSpec> parts);

// Taxel layout file: one record per line, `id link x y z nx ny nz ray_len`.
// Blank lines and lines starting with '#' are ignored.
std::vector<Taxel> ParseTaxelLayout(std::string_view text);
std::string FormatTaxelLayout(const std::vector<Taxel>& taxels);

// Uniform random taxels over the union surface of the link's primitives with
// outward normals. Deterministic for fixed arguments.
std::vector<Taxel> GenerateTaxelLayout(const Link& link, int count,
                                       std::uint64_t seed,
                                       double ray_length = 0.005,
                                       int first_id = 0);

using Rgb = std::array<std::uint8_t, 3>;

enum class ObjectShapeKind { kSphere, kBox, kMesh };

struct ObjectSpec {
  std::string name;
  ObjectShapeKind kind = ObjectShapeKind::kSphere;
  // Collision primitive in the object frame. Mesh objects collide as the
  // bounding box of their vertices, filled in by ResolveMeshObjects.
  std::optional<Primitive> collision;
  std::string mesh_file;
  Pose pose;
  Rgb color = {200, 200, 200};
  bool dynamic = false;
  double mass = 1.0;
  double restitution = 0.5;
};

struct SceneFlags {
  bool gui = false;  // accepted and ignored
  bool skin = true;
  bool eyes = true;
  bool log = false;
  bool self_collisions = true;
};

struct SceneConfig {
  std::string robot = "humanoid.urdf";
  SceneFlags flags;
  std::vector<std::pair<std::string, double>> initial_joints;
  std::string end_effector;
  double step_size = 1.0 / 240.0;
  std::vector<ObjectSpec> objects;
};

// Strict YAML subset. Unknown keys, malformed values and invalid object specs
// raise errors. Keys: robot, gui, skin, eyes, log, self_collisions,
// initial_joints, end_effector, step_size, objects.
SceneConfig ParseSceneConfig(std::string_view text);
// As above, and checks joint names, limits and the end effector against the
// model.
SceneConfig ParseSceneConfig(std::string_view text, const RobotModel& model);
void ValidateSceneConfig(const SceneConfig& config, const RobotModel& model);

// Loads vertex bounding boxes for mesh objects (paths relative to base_dir).
void ResolveMeshObjects(SceneConfig& config,
                        const std::filesystem::path& base_dir);

// Minimal Wavefront OBJ reader: vertex positions only.
std::vector<Vec3> ReadObjVertices(const std::filesystem::path& path);

// HUMSIM_ASSET_DIR if set, else the asset directory of the source tree.
std::filesystem::path DefaultAssetDir();

struct LoadedScene {
  RobotModel model;
  SceneConfig config;
  std::string config_text;
};

// Reads a scene config, then the robot it names (relative to the config file
// directory, falling back to the asset directory) and validates both.
LoadedScene LoadScene(const std::filesystem::path& config_path,
                      const std::filesystem::path& asset_dir =
                          DefaultAssetDir());
LoadedScene LoadSceneFromText(std::string_view text,
                              const std::filesystem::path& base_dir,
                              const std::filesystem::path& asset_dir =
                                  DefaultAssetDir());

std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace humsim

#endif  // HUMSIM_MODEL_H_
