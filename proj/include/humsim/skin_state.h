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

#ifndef HUMSIM_SKIN_STATE_H_
#define HUMSIM_SKIN_STATE_H_

#include <map>
#include <string>

#include "humsim/geometry.h"

namespace humsim {

struct TaxelReading {
  int activation = 0;  // 1..255
  Vec3 position = Vec3::Zero();  // world
  Vec3 normal = Vec3::UnitZ();   // world, unit
  friend bool operator==(const TaxelReading&, const TaxelReading&) = default;
};

// Activated taxels only, keyed by skin part then taxel id.
struct SkinState {
  std::map<std::string, std::map<int, TaxelReading>> parts;

  bool empty() const { return parts.empty(); }
  int ActiveTaxelCount() const {
    int n = 0;
    for (const auto& [name, taxels] : parts) n += static_cast<int>(taxels.size());
    return n;
  }
  friend bool operator==(const SkinState&, const SkinState&) = default;
};

}  // namespace humsim

#endif  // HUMSIM_SKIN_STATE_H_
