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

#include "humsim/skin.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "humsim/world.h"

namespace humsim {
namespace {

double LongestRay(const SkinPartSpec& part) {
  double longest = 0.0;
  for (const Taxel& t : part.taxels) longest = std::max(longest, t.ray_length);
  return longest;
}

Aabb PartBox(const World& world, const SkinPartSpec& part, int link) {
  Aabb box;
  const Link& l = world.model().links()[link];
  const Transform& pose = world.link_transforms()[link];
  if (!l.collision.empty()) {
    for (const Primitive& prim : l.collision) {
      box.Extend(ComputeAabb(prim.shape, pose * prim.local));
    }
  }
  // Taxels need not lie on the primitives, so include them too.
  for (const Taxel& t : part.taxels) box.Extend(Vec3(pose * t.local_position));
  return box.Inflated(LongestRay(part));
}

// One ray per taxel against the listed colliders; adds hits to `out`.
void CastPart(const World& world, const SkinPartSpec& part, int link,
              const std::vector<int>& colliders, SkinState& out) {
  if (colliders.empty()) return;
  const Transform& pose = world.link_transforms()[link];
  const auto& all = world.colliders();
  std::map<int, TaxelReading>* readings = nullptr;
  for (const Taxel& t : part.taxels) {
    const Vec3 origin = pose * t.local_position;
    const Vec3 dir = (pose.linear() * t.local_normal).normalized();
    double nearest = std::numeric_limits<double>::infinity();
    for (int c : colliders) {
      const Collider& col = all[c];
      auto hit = RayCast(col.shape, col.pose, origin, dir, t.ray_length);
      if (hit && *hit < nearest) nearest = *hit;
    }
    if (!std::isfinite(nearest)) continue;
    const int activation = ActivationFromDistance(nearest, t.ray_length);
    if (activation <= 0) continue;
    if (!readings) readings = &out.parts[part.name];
    (*readings)[t.id] = TaxelReading{activation, origin, dir};
  }
}

}  // namespace

int ActivationFromDistance(double distance, double ray_length) {
  if (!(ray_length > 0.0) || distance > ray_length || distance < 0.0) return 0;
  const double a = std::floor(255.0 * (1.0 - distance / ray_length) + 0.5);
  return static_cast<int>(std::clamp(a, 0.0, 255.0));
}

std::vector<SkinPartCandidates> PrefilterSkinParts(const World& world) {
  std::vector<SkinPartCandidates> out;
  const auto& parts = world.model().skin_parts();
  const auto& colliders = world.colliders();
  for (int p = 0; p < static_cast<int>(parts.size()); ++p) {
    if (parts[p].taxels.empty()) continue;
    const int link = world.model().LinkIndex(parts[p].link);
    SkinPartCandidates cand{p, link, PartBox(world, parts[p], link), {}};
    for (int c = 0; c < static_cast<int>(colliders.size()); ++c) {
      const BodyId& body = colliders[c].body;
      if (body.is_link() && body.index == link) continue;
      if (colliders[c].box.Overlaps(cand.box)) cand.colliders.push_back(c);
    }
    if (!cand.colliders.empty()) out.push_back(std::move(cand));
  }
  return out;
}

SkinState ComputeSkinActivations(const World& world) {
  SkinState state;
  const auto& parts = world.model().skin_parts();
  for (const SkinPartCandidates& cand : PrefilterSkinParts(world)) {
    CastPart(world, parts[cand.part], cand.link, cand.colliders, state);
  }
  return state;
}

SkinState ComputeSkinActivationsExhaustive(const World& world) {
  SkinState state;
  const auto& colliders = world.colliders();
  for (const SkinPartSpec& part : world.model().skin_parts()) {
    const int link = world.model().LinkIndex(part.link);
    std::vector<int> foreign;
    for (int c = 0; c < static_cast<int>(colliders.size()); ++c) {
      const BodyId& body = colliders[c].body;
      if (!(body.is_link() && body.index == link)) foreign.push_back(c);
    }
    CastPart(world, part, link, foreign, state);
  }
  return state;
}

}  // namespace humsim
