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

// Raycast tactile skin. Each taxel casts a short ray along its outward normal;
// a hit at distance d of ray length L gives activation round(255 (1 - d/L)).

#ifndef HUMSIM_SKIN_H_
#define HUMSIM_SKIN_H_

#include <string>
#include <vector>

#include "humsim/geometry.h"
#include "humsim/skin_state.h"

namespace humsim {

class World;

// Maps a hit distance to an activation in 0..255; 0 means no contact.
int ActivationFromDistance(double distance, double ray_length);

struct SkinPartCandidates {
  int part = 0;  // index into RobotModel::skin_parts()
  int link = 0;
  Aabb box;      // inflated by the longest ray
  std::vector<int> colliders;  // indices into World::colliders()
};

// Parts whose inflated bounding box overlaps some collider that does not
// belong to the part's own link, with those colliders.
std::vector<SkinPartCandidates> PrefilterSkinParts(const World& world);

// Skin state with the prefilter applied.
SkinState ComputeSkinActivations(const World& world);
// Reference path: every taxel against every foreign collider.
SkinState ComputeSkinActivationsExhaustive(const World& world);

}  // namespace humsim

#endif  // HUMSIM_SKIN_H_
