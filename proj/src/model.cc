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

#include "humsim/model.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "humsim/error.h"

#ifndef HUMSIM_DEFAULT_ASSET_DIR
#define HUMSIM_DEFAULT_ASSET_DIR "assets"
#endif

namespace humsim {
namespace {

namespace pt = boost::property_tree;

constexpr double kPi = 3.14159265358979323846;

//------------------------------ robot validation ------------------------------

void ValidateTaxel(const Taxel& taxel, const SkinPartSpec& part) {
  if (taxel.link != part.link) {
    throw ValidationError(fmt::format(
        "taxel {} of skin part '{}' is on link '{}', expected '{}'", taxel.id,
        part.name, taxel.link, part.link));
  }
  if (std::abs(taxel.local_normal.norm() - 1.0) > 1e-9) {
    throw ValidationError(
        fmt::format("taxel {} normal is not unit length", taxel.id));
  }
  if (!(taxel.ray_length > 0.0)) {
    throw ValidationError(
        fmt::format("taxel {} ray length must be positive", taxel.id));
  }
}

}  // namespace

RobotModel::RobotModel(RobotDescription description)
    : desc_(std::move(description)) {
  const int num_links = static_cast<int>(desc_.links.size());
  if (num_links == 0) throw ValidationError("robot has no links");

  for (int i = 0; i < num_links; ++i) {
    const Link& link = desc_.links[i];
    if (link.name.empty()) throw ValidationError("link without a name");
    if (!link_by_name_.emplace(link.name, i).second) {
      throw ValidationError(fmt::format("duplicate link '{}'", link.name));
    }
    for (const Primitive& p : link.collision) {
      if (!ShapeDimensionsValid(p.shape)) {
        throw ValidationError(fmt::format(
            "link '{}' has a primitive with non-positive size", link.name));
      }
    }
  }

  parent_joint_.assign(num_links, -1);
  std::vector<std::vector<int>> children(num_links);
  std::set<std::string> joint_names;
  for (int j = 0; j < static_cast<int>(desc_.joints.size()); ++j) {
    Joint& joint = desc_.joints[j];
    if (!joint_names.insert(joint.name).second) {
      throw ValidationError(fmt::format("duplicate joint '{}'", joint.name));
    }
    auto parent = link_by_name_.find(joint.parent);
    if (parent == link_by_name_.end()) {
      throw ValidationError(fmt::format("joint '{}' references unknown parent "
                                        "link '{}'",
                                        joint.name, joint.parent));
    }
    auto child = link_by_name_.find(joint.child);
    if (child == link_by_name_.end()) {
      throw ValidationError(fmt::format(
          "joint '{}' references unknown child link '{}'", joint.name,
          joint.child));
    }
    if (parent_joint_[child->second] != -1) {
      throw ValidationError(
          fmt::format("link '{}' is the child of more than one joint",
                      joint.child));
    }
    parent_joint_[child->second] = j;
    children[parent->second].push_back(j);
    if (joint.type == JointType::kRevolute) {
      const double n = joint.axis.norm();
      if (!(n > 1e-12)) {
        throw ValidationError(
            fmt::format("joint '{}' has a zero axis", joint.name));
      }
      joint.axis /= n;
      if (!(joint.lower <= joint.upper)) {
        throw ValidationError(
            fmt::format("joint '{}' has lower limit above upper", joint.name));
      }
      if (!(joint.max_velocity > 0.0)) {
        throw ValidationError(fmt::format(
            "joint '{}' needs a positive velocity limit", joint.name));
      }
    }
  }

  std::vector<int> roots;
  for (int i = 0; i < num_links; ++i) {
    if (parent_joint_[i] == -1) roots.push_back(i);
  }
  if (roots.size() != 1) {
    throw ValidationError(fmt::format(
        "link graph must have exactly one root, found {}", roots.size()));
  }
  root_link_ = roots.front();

  // Breadth-first order from the root gives the topological joint order and
  // detects links unreachable through a cycle.
  std::vector<int> order;
  std::vector<char> seen(num_links, 0);
  std::deque<int> queue = {root_link_};
  seen[root_link_] = 1;
  int visited = 1;
  while (!queue.empty()) {
    const int link = queue.front();
    queue.pop_front();
    for (int j : children[link]) {
      order.push_back(j);
      const int child = link_by_name_.at(desc_.joints[j].child);
      if (seen[child]) throw ValidationError("link graph contains a cycle");
      seen[child] = 1;
      ++visited;
      queue.push_back(child);
    }
  }
  if (visited != num_links) throw ValidationError("link graph contains a cycle");

  std::vector<Joint> sorted;
  sorted.reserve(order.size());
  for (int j : order) sorted.push_back(std::move(desc_.joints[j]));
  desc_.joints = std::move(sorted);

  child_joints_.assign(num_links, {});
  q_index_.assign(desc_.joints.size(), -1);
  for (int j = 0; j < static_cast<int>(desc_.joints.size()); ++j) {
    const Joint& joint = desc_.joints[j];
    joint_by_name_.emplace(joint.name, j);
    const int child = link_by_name_.at(joint.child);
    const int parent = link_by_name_.at(joint.parent);
    parent_joint_[child] = j;
    child_joints_[parent].push_back(j);
    joint_parent_link_.push_back(parent);
    joint_child_link_.push_back(child);
    if (joint.type == JointType::kRevolute) {
      q_index_[j] = static_cast<int>(actuated_.size());
      actuated_.push_back(j);
    }
  }

  geometric_ancestor_.assign(num_links, -1);
  for (int i = 0; i < num_links; ++i) {
    int cur = ParentLink(i);
    while (cur != -1 && desc_.links[cur].collision.empty()) {
      cur = ParentLink(cur);
    }
    geometric_ancestor_[i] = cur;
  }

  std::set<std::string> names;
  for (const CameraMount& cam : desc_.cameras) {
    if (!names.insert(cam.name).second) {
      throw ValidationError(fmt::format("duplicate camera '{}'", cam.name));
    }
    if (!FindLink(cam.link)) {
      throw ValidationError(fmt::format("camera '{}' mounted on unknown link "
                                        "'{}'",
                                        cam.name, cam.link));
    }
    if (cam.width < 1 || cam.height < 1 || !(cam.focal_length > 0.0)) {
      throw ValidationError(
          fmt::format("camera '{}' has invalid intrinsics", cam.name));
    }
  }
  for (const auto& [ee, link] : desc_.end_effectors) {
    if (!FindLink(link)) {
      throw ValidationError(fmt::format(
          "end effector '{}' references unknown link '{}'", ee, link));
    }
  }
  names.clear();
  for (const SkinPartSpec& part : desc_.skin_parts) {
    if (!names.insert(part.name).second) {
      throw ValidationError(fmt::format("duplicate skin part '{}'", part.name));
    }
    if (!FindLink(part.link)) {
      throw ValidationError(fmt::format(
          "skin part '{}' references unknown link '{}'", part.name, part.link));
    }
    for (const Taxel& t : part.taxels) ValidateTaxel(t, part);
  }
  for (const GripperSpec& g : desc_.grippers) {
    const auto joint = FindJoint(g.joint);
    if (!joint || desc_.joints[*joint].type != JointType::kRevolute) {
      throw ValidationError(fmt::format(
          "gripper '{}' needs a revolute joint, got '{}'", g.name, g.joint));
    }
    if (!FindLink(g.hand_link)) {
      throw ValidationError(fmt::format("gripper '{}' has unknown hand '{}'",
                                        g.name, g.hand_link));
    }
    for (const std::string& l : g.links) {
      if (!FindLink(l)) {
        throw ValidationError(
            fmt::format("gripper '{}' has unknown link '{}'", g.name, l));
      }
    }
  }
}

int RobotModel::ParentLink(int link) const {
  const int j = parent_joint_[link];
  if (j < 0) return -1;
  return joint_parent_link_[j];
}

int RobotModel::LinkIndex(std::string_view name) const {
  if (auto idx = FindLink(name)) return *idx;
  throw LookupError(fmt::format("unknown link '{}'", name));
}

int RobotModel::JointIndex(std::string_view name) const {
  if (auto idx = FindJoint(name)) return *idx;
  throw LookupError(fmt::format("unknown joint '{}'", name));
}

std::optional<int> RobotModel::FindLink(std::string_view name) const {
  auto it = link_by_name_.find(name);
  if (it == link_by_name_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> RobotModel::FindJoint(std::string_view name) const {
  auto it = joint_by_name_.find(name);
  if (it == joint_by_name_.end()) return std::nullopt;
  return it->second;
}

const CameraMount& RobotModel::Camera(std::string_view name) const {
  for (const CameraMount& cam : desc_.cameras) {
    if (cam.name == name) return cam;
  }
  throw LookupError(fmt::format("unknown camera '{}'", name));
}

int RobotModel::EndEffectorLink(std::string_view name) const {
  auto it = desc_.end_effectors.find(std::string(name));
  if (it != desc_.end_effectors.end()) return LinkIndex(it->second);
  if (auto link = FindLink(name)) return *link;
  throw LookupError(fmt::format("unknown end effector '{}'", name));
}

std::vector<int> RobotModel::ChainJoints(int link) const {
  std::vector<int> chain;
  for (int cur = link; parent_joint_[cur] != -1; cur = ParentLink(cur)) {
    const int j = parent_joint_[cur];
    if (desc_.joints[j].type == JointType::kRevolute) chain.push_back(j);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

bool RobotModel::Adjacent(int link_a, int link_b) const {
  return geometric_ancestor_[link_a] == link_b ||
         geometric_ancestor_[link_b] == link_a;
}

Eigen::VectorXd RobotModel::LowerLimits() const {
  Eigen::VectorXd v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = desc_.joints[actuated_[i]].lower;
  return v;
}

Eigen::VectorXd RobotModel::UpperLimits() const {
  Eigen::VectorXd v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = desc_.joints[actuated_[i]].upper;
  return v;
}

Eigen::VectorXd RobotModel::MaxVelocities() const {
  Eigen::VectorXd v(dof());
  for (int i = 0; i < dof(); ++i) {
    v[i] = desc_.joints[actuated_[i]].max_velocity;
  }
  return v;
}

Eigen::VectorXd RobotModel::HomePosture() const {
  return Eigen::VectorXd::Zero(dof()).cwiseMax(LowerLimits()).cwiseMin(
      UpperLimits());
}

int RobotModel::TaxelCount() const {
  int total = 0;
  for (const SkinPartSpec& part : desc_.skin_parts) {
    total += static_cast<int>(part.taxels.size());
  }
  return total;
}

//------------------------------ URDF subset -----------------------------------

namespace {

std::vector<double> ParseNumbers(const std::string& text,
                                 std::string_view what) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw ParseError(fmt::format("invalid number '{}' in {}", token, what));
    }
    out.push_back(v);
  }
  return out;
}

Vec3 ParseVec3(const std::string& text, std::string_view what) {
  const std::vector<double> v = ParseNumbers(text, what);
  if (v.size() != 3) {
    throw ParseError(fmt::format("{} needs 3 numbers, got '{}'", what, text));
  }
  return Vec3(v[0], v[1], v[2]);
}

double ParseNumber(const std::string& text, std::string_view what) {
  const std::vector<double> v = ParseNumbers(text, what);
  if (v.size() != 1) {
    throw ParseError(fmt::format("{} needs a number, got '{}'", what, text));
  }
  return v[0];
}

const pt::ptree* Attributes(const pt::ptree& node) {
  auto it = node.find("<xmlattr>");
  if (it == node.not_found()) return nullptr;
  return &it->second;
}

std::optional<std::string> Attr(const pt::ptree& node, const char* key) {
  const pt::ptree* attrs = Attributes(node);
  if (!attrs) return std::nullopt;
  auto v = attrs->get_optional<std::string>(key);
  if (!v) return std::nullopt;
  return *v;
}

std::string RequireAttr(const pt::ptree& node, const char* key,
                        std::string_view element) {
  auto v = Attr(node, key);
  if (!v) {
    throw ParseError(
        fmt::format("<{}> is missing attribute '{}'", element, key));
  }
  return *v;
}

Transform ParseOrigin(const pt::ptree& parent) {
  Transform t = Transform::Identity();
  auto it = parent.find("origin");
  if (it == parent.not_found()) return t;
  if (auto xyz = Attr(it->second, "xyz")) {
    t.translation() = ParseVec3(*xyz, "origin xyz");
  }
  if (auto rpy = Attr(it->second, "rpy")) {
    t.linear() = RpyToMatrix(ParseVec3(*rpy, "origin rpy"));
  }
  return t;
}

bool IsMetaKey(const std::string& key) {
  return key == "<xmlattr>" || key == "<xmlcomment>";
}

Shape ParseGeometry(const pt::ptree& geometry, const std::string& link) {
  std::optional<Shape> shape;
  for (const auto& [key, node] : geometry) {
    if (IsMetaKey(key)) continue;
    if (shape) {
      throw ParseError(
          fmt::format("link '{}': geometry holds more than one shape", link));
    }
    if (key == "sphere") {
      shape = Sphere{ParseNumber(RequireAttr(node, "radius", key), "radius")};
    } else if (key == "capsule") {
      const double r = ParseNumber(RequireAttr(node, "radius", key), "radius");
      const double len =
          ParseNumber(RequireAttr(node, "length", key), "length");
      shape = Capsule{r, 0.5 * len};
    } else if (key == "box") {
      shape = Box{0.5 * ParseVec3(RequireAttr(node, "size", key), "box size")};
    } else {
      throw ParseError(fmt::format(
          "link '{}': unsupported collision geometry <{}>", link, key));
    }
  }
  if (!shape) {
    throw ParseError(fmt::format("link '{}': empty geometry", link));
  }
  return *shape;
}

Link ParseLink(const pt::ptree& node) {
  Link link;
  link.name = RequireAttr(node, "name", "link");
  for (const auto& [key, child] : node) {
    if (IsMetaKey(key)) continue;
    if (key == "collision") {
      auto geom = child.find("geometry");
      if (geom == child.not_found()) {
        throw ParseError(
            fmt::format("link '{}': collision without geometry", link.name));
      }
      link.collision.push_back(
          Primitive{ParseGeometry(geom->second, link.name), ParseOrigin(child)});
    } else if (key == "visual") {
      auto mesh = child.get_child_optional("geometry.mesh");
      if (mesh) link.visual_mesh = RequireAttr(*mesh, "filename", "mesh");
    } else if (key == "inertial") {
      // Kinematic robot: inertial data is accepted and ignored.
    } else {
      throw ParseError(
          fmt::format("link '{}': unsupported element <{}>", link.name, key));
    }
  }
  return link;
}

Joint ParseJoint(const pt::ptree& node) {
  Joint joint;
  joint.name = RequireAttr(node, "name", "joint");
  const std::string type = RequireAttr(node, "type", "joint");
  if (type == "revolute") {
    joint.type = JointType::kRevolute;
  } else if (type == "fixed") {
    joint.type = JointType::kFixed;
  } else {
    throw ParseError(fmt::format("joint '{}': unsupported type '{}'",
                                 joint.name, type));
  }
  bool has_limit = false;
  for (const auto& [key, child] : node) {
    if (IsMetaKey(key)) continue;
    if (key == "parent") {
      joint.parent = RequireAttr(child, "link", "parent");
    } else if (key == "child") {
      joint.child = RequireAttr(child, "link", "child");
    } else if (key == "origin") {
      // Handled below.
    } else if (key == "axis") {
      joint.axis = ParseVec3(RequireAttr(child, "xyz", "axis"), "axis xyz");
    } else if (key == "limit") {
      has_limit = true;
      if (auto v = Attr(child, "lower")) joint.lower = ParseNumber(*v, "lower");
      if (auto v = Attr(child, "upper")) joint.upper = ParseNumber(*v, "upper");
      if (auto v = Attr(child, "velocity")) {
        joint.max_velocity = ParseNumber(*v, "velocity");
      }
    } else if (key == "dynamics") {
      // Ignored.
    } else {
      throw ParseError(
          fmt::format("joint '{}': unsupported element <{}>", joint.name, key));
    }
  }
  if (joint.parent.empty() || joint.child.empty()) {
    throw ParseError(
        fmt::format("joint '{}' needs both parent and child", joint.name));
  }
  if (joint.type == JointType::kRevolute && !has_limit) {
    throw ParseError(
        fmt::format("revolute joint '{}' needs a <limit>", joint.name));
  }
  joint.origin = ParseOrigin(node);
  return joint;
}

std::string Num(double v) { return fmt::format("{}", v); }

std::string Vec3Text(const Vec3& v) {
  return fmt::format("{} {} {}", v.x(), v.y(), v.z());
}

std::string OriginXml(const Transform& t) {
  return fmt::format("<origin xyz=\"{}\" rpy=\"{}\"/>",
                     Vec3Text(t.translation()),
                     Vec3Text(MatrixToRpy(t.linear())));
}

}  // namespace

RobotModel ParseRobotDescription(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(fmt::format("malformed robot description: {}", e.what()));
  }
  auto robot_it = tree.find("robot");
  if (robot_it == tree.not_found()) {
    throw ParseError("robot description has no <robot> element");
  }
  const pt::ptree& robot = robot_it->second;
  RobotDescription desc;
  desc.name = Attr(robot, "name").value_or("robot");
  try {
    for (const auto& [key, node] : robot) {
      if (IsMetaKey(key)) continue;
      if (key == "link") {
        desc.links.push_back(ParseLink(node));
      } else if (key == "joint") {
        desc.joints.push_back(ParseJoint(node));
      } else if (key == "camera") {
        CameraMount cam;
        cam.name = RequireAttr(node, "name", key);
        cam.link = RequireAttr(node, "link", key);
        cam.width = static_cast<int>(
            ParseNumber(RequireAttr(node, "width", key), "camera width"));
        cam.height = static_cast<int>(
            ParseNumber(RequireAttr(node, "height", key), "camera height"));
        cam.focal_length =
            ParseNumber(RequireAttr(node, "focal", key), "camera focal");
        cam.local = ParseOrigin(node);
        desc.cameras.push_back(cam);
      } else if (key == "end_effector") {
        desc.end_effectors[RequireAttr(node, "name", key)] =
            RequireAttr(node, "link", key);
      } else if (key == "skin") {
        SkinPartSpec part;
        part.name = RequireAttr(node, "part", key);
        part.link = RequireAttr(node, "link", key);
        part.layout_file = Attr(node, "file").value_or("");
        desc.skin_parts.push_back(part);
      } else if (key == "gripper") {
        GripperSpec g;
        g.name = RequireAttr(node, "name", key);
        g.joint = RequireAttr(node, "joint", key);
        g.hand_link = RequireAttr(node, "hand", key);
        std::istringstream links(RequireAttr(node, "links", key));
        for (std::string l; links >> l;) g.links.push_back(l);
        if (auto v = Attr(node, "release_below")) {
          g.release_below = ParseNumber(*v, "release_below");
        }
        desc.grippers.push_back(g);
      } else {
        throw ParseError(fmt::format("unsupported element <{}>", key));
      }
    }
  } catch (const pt::ptree_error& e) {
    throw ParseError(fmt::format("malformed robot description: {}", e.what()));
  }
  return RobotModel(std::move(desc));
}

std::string SerializeRobotDescription(const RobotModel& model) {
  std::string out = fmt::format("<robot name=\"{}\">\n", model.name());
  for (const Link& link : model.links()) {
    if (link.collision.empty() && !link.visual_mesh) {
      out += fmt::format("  <link name=\"{}\"/>\n", link.name);
      continue;
    }
    out += fmt::format("  <link name=\"{}\">\n", link.name);
    for (const Primitive& p : link.collision) {
      std::string geom;
      if (const auto* s = std::get_if<Sphere>(&p.shape)) {
        geom = fmt::format("<sphere radius=\"{}\"/>", s->radius);
      } else if (const auto* c = std::get_if<Capsule>(&p.shape)) {
        geom = fmt::format("<capsule radius=\"{}\" length=\"{}\"/>", c->radius,
                           2.0 * c->half_length);
      } else {
        geom = fmt::format("<box size=\"{}\"/>",
                           Vec3Text(2.0 * std::get<Box>(p.shape).half_extents));
      }
      out += fmt::format(
          "    <collision>{}<geometry>{}</geometry></collision>\n",
          OriginXml(p.local), geom);
    }
    if (link.visual_mesh) {
      out += fmt::format(
          "    <visual><geometry><mesh filename=\"{}\"/></geometry></visual>\n",
          *link.visual_mesh);
    }
    out += "  </link>\n";
  }
  for (const Joint& j : model.joints()) {
    out += fmt::format("  <joint name=\"{}\" type=\"{}\">\n", j.name,
                       j.type == JointType::kRevolute ? "revolute" : "fixed");
    out += fmt::format("    <parent link=\"{}\"/>\n    <child link=\"{}\"/>\n",
                       j.parent, j.child);
    out += fmt::format("    {}\n", OriginXml(j.origin));
    if (j.type == JointType::kRevolute) {
      out += fmt::format("    <axis xyz=\"{}\"/>\n", Vec3Text(j.axis));
      out += fmt::format(
          "    <limit lower=\"{}\" upper=\"{}\" velocity=\"{}\"/>\n",
          Num(j.lower), Num(j.upper), Num(j.max_velocity));
    }
    out += "  </joint>\n";
  }
  for (const CameraMount& c : model.cameras()) {
    out += fmt::format(
        "  <camera name=\"{}\" link=\"{}\" width=\"{}\" height=\"{}\" "
        "focal=\"{}\">{}</camera>\n",
        c.name, c.link, c.width, c.height, c.focal_length, OriginXml(c.local));
  }
  for (const auto& [name, link] : model.end_effectors()) {
    out += fmt::format("  <end_effector name=\"{}\" link=\"{}\"/>\n", name,
                       link);
  }
  for (const SkinPartSpec& s : model.skin_parts()) {
    out += fmt::format("  <skin part=\"{}\" link=\"{}\"", s.name, s.link);
    if (!s.layout_file.empty()) {
      out += fmt::format(" file=\"{}\"", s.layout_file);
    }
    out += "/>\n";
  }
  for (const GripperSpec& g : model.grippers()) {
    std::string links;
    for (const std::string& l : g.links) {
      if (!links.empty()) links += ' ';
      links += l;
    }
    out += fmt::format(
        "  <gripper name=\"{}\" joint=\"{}\" hand=\"{}\" links=\"{}\" "
        "release_below=\"{}\"/>\n",
        g.name, g.joint, g.hand_link, links, Num(g.release_below));
  }
  out += "</robot>\n";
  return out;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LookupError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RobotModel LoadRobotModel(const std::filesystem::path& path) {
  RobotModel parsed = ParseRobotDescription(ReadTextFile(path));
  std::vector<SkinPartSpec> parts = parsed.skin_parts();
  for (SkinPartSpec& part : parts) {
    if (part.layout_file.empty()) continue;
    part.taxels =
        ParseTaxelLayout(ReadTextFile(path.parent_path() / part.layout_file));
  }
  return WithSkinParts(parsed, std::move(parts));
}

RobotModel WithSkinParts(const RobotModel& model,
                         std::vector<SkinPartSpec> parts) {
  RobotDescription desc = model.description();
  desc.skin_parts = std::move(parts);
  return RobotModel(std::move(desc));
}

//------------------------------ taxel layouts ---------------------------------

std::vector<Taxel> ParseTaxelLayout(std::string_view text) {
  std::vector<Taxel> taxels;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Taxel t;
    std::string extra;
    if (!(fields >> t.id >> t.link >> t.local_position.x() >>
          t.local_position.y() >> t.local_position.z() >> t.local_normal.x() >>
          t.local_normal.y() >> t.local_normal.z() >> t.ray_length) ||
        (fields >> extra)) {
      throw ParseError(
          fmt::format("taxel layout line {}: expected 'id link x y z nx ny nz "
                      "ray_len'",
                      line_no));
    }
    taxels.push_back(std::move(t));
  }
  return taxels;
}

std::string FormatTaxelLayout(const std::vector<Taxel>& taxels) {
  std::string out;
  for (const Taxel& t : taxels) {
    out += fmt::format("{} {} {} {} {} {} {} {} {}\n", t.id, t.link,
                       t.local_position.x(), t.local_position.y(),
                       t.local_position.z(), t.local_normal.x(),
                       t.local_normal.y(), t.local_normal.z(), t.ray_length);
  }
  return out;
}

namespace {

// Portable uniform double in [0, 1) from a 64-bit engine.
double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec3 UnitSpherePoint(std::mt19937_64& rng) {
  const double z = 2.0 * Uniform01(rng) - 1.0;
  const double phi = 2.0 * kPi * Uniform01(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(s * std::cos(phi), s * std::sin(phi), z);
}

// Uniform surface sample of a shape in its own frame: (point, normal).
std::pair<Vec3, Vec3> SampleSurface(const Shape& shape, std::mt19937_64& rng) {
  if (const auto* s = std::get_if<Sphere>(&shape)) {
    const Vec3 n = UnitSpherePoint(rng);
    return {s->radius * n, n};
  }
  if (const auto* c = std::get_if<Capsule>(&shape)) {
    const double side = 4.0 * kPi * c->radius * c->half_length;
    const double caps = 4.0 * kPi * c->radius * c->radius;
    if (Uniform01(rng) * (side + caps) < side) {
      const double z = c->half_length * (2.0 * Uniform01(rng) - 1.0);
      const double phi = 2.0 * kPi * Uniform01(rng);
      const Vec3 n(std::cos(phi), std::sin(phi), 0.0);
      return {c->radius * n + Vec3(0, 0, z), n};
    }
    const Vec3 n = UnitSpherePoint(rng);
    const double offset = n.z() >= 0.0 ? c->half_length : -c->half_length;
    return {c->radius * n + Vec3(0, 0, offset), n};
  }
  const Vec3& h = std::get<Box>(shape).half_extents;
  const std::array<double, 3> face_area = {h.y() * h.z(), h.x() * h.z(),
                                           h.x() * h.y()};
  const double total = 2.0 * (face_area[0] + face_area[1] + face_area[2]);
  double pick = Uniform01(rng) * total;
  int axis = 0;
  while (axis < 2 && pick >= 2.0 * face_area[axis]) {
    pick -= 2.0 * face_area[axis];
    ++axis;
  }
  const double sign = Uniform01(rng) < 0.5 ? -1.0 : 1.0;
  Vec3 p;
  for (int i = 0; i < 3; ++i) p[i] = h[i] * (2.0 * Uniform01(rng) - 1.0);
  p[axis] = sign * h[axis];
  Vec3 n = Vec3::Zero();
  n[axis] = sign;
  return {p, n};
}

}  // namespace

std::vector<Taxel> GenerateTaxelLayout(const Link& link, int count,
                                       std::uint64_t seed, double ray_length,
                                       int first_id) {
  if (count < 0) throw PreconditionError("taxel count must be non-negative");
  if (count == 0) return {};
  if (link.collision.empty()) {
    throw PreconditionError(fmt::format(
        "link '{}' has no collision primitives to cover with skin", link.name));
  }
  std::vector<double> cumulative;
  double total = 0.0;
  for (const Primitive& p : link.collision) {
    total += SurfaceArea(p.shape);
    cumulative.push_back(total);
  }
  std::mt19937_64 rng(seed);
  std::vector<Taxel> taxels;
  taxels.reserve(count);
  const std::int64_t max_attempts = 1000LL * count + 1000;
  for (std::int64_t attempt = 0;
       static_cast<int>(taxels.size()) < count; ++attempt) {
    if (attempt >= max_attempts) {
      throw ValidationError(fmt::format(
          "link '{}': union surface too small to place taxels", link.name));
    }
    const double pick = Uniform01(rng) * total;
    const size_t k =
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) -
        cumulative.begin();
    const Primitive& prim = link.collision[std::min(k, cumulative.size() - 1)];
    auto [p_local, n_local] = SampleSurface(prim.shape, rng);
    const Vec3 p = prim.local * p_local;
    const Vec3 n = (prim.local.linear() * n_local).normalized();
    bool covered = false;
    for (const Primitive& other : link.collision) {
      if (&other == &prim) continue;
      if (SignedDistance(other.shape, other.local, p) < -1e-9) {
        covered = true;
        break;
      }
    }
    if (covered) continue;
    Taxel t;
    t.id = first_id + static_cast<int>(taxels.size());
    t.link = link.name;
    t.local_position = p;
    t.local_normal = n;
    t.ray_length = ray_length;
    taxels.push_back(std::move(t));
  }
  return taxels;
}

//------------------------------ scene config ----------------------------------

namespace {

template <typename T>
T As(const YAML::Node& node, std::string_view what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(fmt::format("malformed value for '{}'", what));
  }
}

std::vector<double> AsNumbers(const YAML::Node& node, size_t n,
                              std::string_view what) {
  if (!node.IsSequence() || node.size() != n) {
    throw ParseError(fmt::format("'{}' must be a list of {} numbers", what, n));
  }
  std::vector<double> out;
  for (const YAML::Node& v : node) out.push_back(As<double>(v, what));
  return out;
}

void CheckKeys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
               std::string_view context) {
  for (const auto& kv : map) {
    const std::string key = As<std::string>(kv.first, "key");
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(fmt::format("unknown key '{}' in {}", key, context));
    }
  }
}

ObjectSpec ParseObject(const YAML::Node& node) {
  if (!node.IsMap()) throw ParseError("each object must be a mapping");
  CheckKeys(node,
            {"name", "shape", "radius", "size", "file", "position",
             "orientation", "rpy", "color", "dynamic", "mass", "restitution"},
            "object");
  ObjectSpec spec;
  if (!node["name"]) throw ParseError("object without a name");
  spec.name = As<std::string>(node["name"], "name");
  if (spec.name.empty()) throw ParseError("object with an empty name");
  const std::string ctx = fmt::format("object '{}'", spec.name);
  const std::string shape =
      node["shape"] ? As<std::string>(node["shape"], "shape") : "";
  if (shape == "sphere") {
    spec.kind = ObjectShapeKind::kSphere;
    if (!node["radius"]) throw ParseError(ctx + ": sphere needs 'radius'");
    spec.collision = Primitive{Sphere{As<double>(node["radius"], "radius")}};
  } else if (shape == "box") {
    spec.kind = ObjectShapeKind::kBox;
    if (!node["size"]) throw ParseError(ctx + ": box needs 'size'");
    const auto s = AsNumbers(node["size"], 3, "size");
    spec.collision = Primitive{Box{0.5 * Vec3(s[0], s[1], s[2])}};
  } else if (shape == "mesh") {
    spec.kind = ObjectShapeKind::kMesh;
    if (!node["file"]) throw ParseError(ctx + ": mesh needs 'file'");
    spec.mesh_file = As<std::string>(node["file"], "file");
  } else {
    throw ParseError(fmt::format("{}: shape must be sphere, box or mesh", ctx));
  }
  if (spec.collision && !ShapeDimensionsValid(spec.collision->shape)) {
    throw ValidationError(ctx + ": dimensions must be positive");
  }
  if (node["position"]) {
    const auto p = AsNumbers(node["position"], 3, "position");
    spec.pose.position = Vec3(p[0], p[1], p[2]);
  }
  if (node["orientation"] && node["rpy"]) {
    throw ParseError(ctx + ": give either 'orientation' or 'rpy'");
  }
  if (node["orientation"]) {
    const auto q = AsNumbers(node["orientation"], 4, "orientation");
    Quat quat(q[0], q[1], q[2], q[3]);
    if (!(quat.norm() > 1e-12)) {
      throw ValidationError(ctx + ": zero orientation quaternion");
    }
    spec.pose.orientation = CanonicalQuat(quat);
  }
  if (node["rpy"]) {
    const auto r = AsNumbers(node["rpy"], 3, "rpy");
    spec.pose.orientation = CanonicalQuat(Quat(RpyToMatrix(Vec3(r[0], r[1], r[2]))));
  }
  if (node["color"]) {
    const auto c = AsNumbers(node["color"], 3, "color");
    for (int i = 0; i < 3; ++i) {
      if (c[i] < 0 || c[i] > 255 || c[i] != std::floor(c[i])) {
        throw ValidationError(ctx + ": color channels must be integers 0-255");
      }
      spec.color[i] = static_cast<std::uint8_t>(c[i]);
    }
  }
  if (node["dynamic"]) spec.dynamic = As<bool>(node["dynamic"], "dynamic");
  if (node["mass"]) spec.mass = As<double>(node["mass"], "mass");
  if (node["restitution"]) {
    spec.restitution = As<double>(node["restitution"], "restitution");
  }
  if (spec.dynamic && !(spec.mass > 0.0)) {
    throw ValidationError(ctx + ": dynamic objects need a positive mass");
  }
  if (!(spec.restitution >= 0.0 && spec.restitution <= 1.0)) {
    throw ValidationError(ctx + ": restitution must lie in [0, 1]");
  }
  return spec;
}

}  // namespace

SceneConfig ParseSceneConfig(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(fmt::format("malformed scene config: {}", e.what()));
  }
  SceneConfig config;
  if (root.IsNull()) return config;
  if (!root.IsMap()) throw ParseError("scene config must be a mapping");
  CheckKeys(root,
            {"robot", "gui", "skin", "eyes", "log", "self_collisions",
             "initial_joints", "end_effector", "step_size", "objects"},
            "scene config");
  if (root["robot"]) config.robot = As<std::string>(root["robot"], "robot");
  if (root["gui"]) config.flags.gui = As<bool>(root["gui"], "gui");
  if (root["skin"]) config.flags.skin = As<bool>(root["skin"], "skin");
  if (root["eyes"]) config.flags.eyes = As<bool>(root["eyes"], "eyes");
  if (root["log"]) config.flags.log = As<bool>(root["log"], "log");
  if (root["self_collisions"]) {
    config.flags.self_collisions =
        As<bool>(root["self_collisions"], "self_collisions");
  }
  if (root["end_effector"]) {
    config.end_effector = As<std::string>(root["end_effector"], "end_effector");
  }
  if (root["step_size"]) {
    config.step_size = As<double>(root["step_size"], "step_size");
    if (!(config.step_size > 0.0) || !std::isfinite(config.step_size)) {
      throw ValidationError("step_size must be positive");
    }
  }
  if (const YAML::Node joints = root["initial_joints"]; joints && !joints.IsNull()) {
    if (!joints.IsMap()) throw ParseError("'initial_joints' must be a mapping");
    for (const auto& kv : joints) {
      const std::string name = As<std::string>(kv.first, "joint name");
      config.initial_joints.emplace_back(
          name, As<double>(kv.second, "initial_joints." + name));
    }
  }
  if (const YAML::Node objects = root["objects"]; objects && !objects.IsNull()) {
    if (!objects.IsSequence()) throw ParseError("'objects' must be a list");
    std::set<std::string> names;
    for (const YAML::Node& obj : objects) {
      ObjectSpec spec = ParseObject(obj);
      if (!names.insert(spec.name).second) {
        throw ValidationError(fmt::format("duplicate object '{}'", spec.name));
      }
      config.objects.push_back(std::move(spec));
    }
  }
  return config;
}

void ValidateSceneConfig(const SceneConfig& config, const RobotModel& model) {
  for (const auto& [name, value] : config.initial_joints) {
    const auto j = model.FindJoint(name);
    if (!j) {
      throw LookupError(
          fmt::format("initial_joints: unknown joint '{}'", name));
    }
    const Joint& joint = model.joints()[*j];
    if (joint.type != JointType::kRevolute) {
      throw ValidationError(
          fmt::format("initial_joints: joint '{}' is fixed", name));
    }
    if (value < joint.lower || value > joint.upper) {
      throw ValidationError(fmt::format(
          "initial_joints: {} = {} outside limits [{}, {}]", name, value,
          joint.lower, joint.upper));
    }
  }
  if (!config.end_effector.empty()) model.EndEffectorLink(config.end_effector);
}

SceneConfig ParseSceneConfig(std::string_view text, const RobotModel& model) {
  SceneConfig config = ParseSceneConfig(text);
  ValidateSceneConfig(config, model);
  return config;
}

std::vector<Vec3> ReadObjVertices(const std::filesystem::path& path) {
  std::istringstream in(ReadTextFile(path));
  std::vector<Vec3> vertices;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) != 0) continue;
    std::istringstream fields(line.substr(2));
    Vec3 v;
    if (!(fields >> v.x() >> v.y() >> v.z())) {
      throw ParseError(fmt::format("malformed vertex in '{}'", path.string()));
    }
    vertices.push_back(v);
  }
  if (vertices.empty()) {
    throw ParseError(fmt::format("mesh '{}' has no vertices", path.string()));
  }
  return vertices;
}

void ResolveMeshObjects(SceneConfig& config,
                        const std::filesystem::path& base_dir) {
  for (ObjectSpec& spec : config.objects) {
    if (spec.kind != ObjectShapeKind::kMesh || spec.collision) continue;
    std::filesystem::path file = spec.mesh_file;
    if (file.is_relative()) file = base_dir / file;
    Aabb box;
    for (const Vec3& v : ReadObjVertices(file)) box.Extend(v);
    Vec3 half = 0.5 * (box.max - box.min);
    half = half.cwiseMax(1e-4);  // flat meshes still get a thin slab
    Primitive prim{Box{half}};
    prim.local.translation() = 0.5 * (box.min + box.max);
    spec.collision = prim;
  }
}

std::filesystem::path DefaultAssetDir() {
  if (const char* env = std::getenv("HUMSIM_ASSET_DIR"); env && *env) {
    return env;
  }
  return HUMSIM_DEFAULT_ASSET_DIR;
}

namespace {

std::filesystem::path ResolveAsset(const std::string& name,
                                   const std::filesystem::path& base_dir,
                                   const std::filesystem::path& asset_dir) {
  std::filesystem::path p = name;
  if (p.is_absolute()) return p;
  if (!base_dir.empty() && std::filesystem::exists(base_dir / p)) {
    return base_dir / p;
  }
  return asset_dir / p;
}

}  // namespace

LoadedScene LoadSceneFromText(std::string_view text,
                              const std::filesystem::path& base_dir,
                              const std::filesystem::path& asset_dir) {
  LoadedScene scene;
  scene.config_text = std::string(text);
  scene.config = ParseSceneConfig(text);
  scene.model =
      LoadRobotModel(ResolveAsset(scene.config.robot, base_dir, asset_dir));
  ValidateSceneConfig(scene.config, scene.model);
  for (ObjectSpec& spec : scene.config.objects) {
    if (spec.kind == ObjectShapeKind::kMesh && !spec.collision) {
      spec.mesh_file =
          ResolveAsset(spec.mesh_file, base_dir, asset_dir).string();
    }
  }
  ResolveMeshObjects(scene.config, base_dir);
  return scene;
}

LoadedScene LoadScene(const std::filesystem::path& config_path,
                      const std::filesystem::path& asset_dir) {
  return LoadSceneFromText(ReadTextFile(config_path),
                           config_path.parent_path(), asset_dir);
}

}  // namespace humsim
