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


#include <random>
#include <set>
#include <string>

#include <doctest.h>

#include "humsim/kinematics.h"
#include "humsim/model.h"
#include "humsim/skin.h"
#include "humsim/world.h"
#include "test_support.h"

namespace humsim {
namespace {

World SkinWorld() {
  LoadedScene scene = LoadSceneFromText("self_collisions: false\n", "");
  return World(std::move(scene.model), std::move(scene.config));
}

ObjectSpec StaticBall(const Vec3& position, double radius) {
  ObjectSpec spec;
  spec.name = "ball";
  spec.collision = Primitive{Sphere{radius}};
  spec.pose.position = position;
  return spec;
}

std::set<std::string> PrefilteredParts(const World& world) {
  std::set<std::string> names;
  for (const auto& c : PrefilterSkinParts(world)) {
    names.insert(world.model().skin_parts()[c.part].name);
  }
  return names;
}

TEST_CASE("activation mapping endpoints and midpoint") {
  CHECK(ActivationFromDistance(0.0, 0.005) == 255);
  CHECK(ActivationFromDistance(0.0025, 0.005) == 128);
  CHECK(ActivationFromDistance(0.005, 0.005) == 0);
  CHECK(ActivationFromDistance(0.006, 0.005) == 0);
}

TEST_CASE("single taxel activations in a constructed scene") {
  // One taxel in front of the base link, normal +x. Dyadic distances keep the
  // hit distances exact.
  const RobotModel& shipped = testing::ShippedModel();
  Taxel t;
  t.id = 0;
  t.link = "base";
  t.local_position = Vec3(0.125, 0, 0);
  t.local_normal = Vec3::UnitX();
  t.ray_length = 0.25;
  const RobotModel model =
      WithSkinParts(shipped, {SkinPartSpec{"probe", "base", "", {t}}});
  SceneConfig config;
  config.flags.self_collisions = false;
  World world(model, config);
  CHECK(world.skin().empty());

  for (const auto& [gap, expected] :
       std::vector<std::pair<double, int>>{{0.0, 255}, {0.125, 128}, {0.5, 0}}) {
    World w(model, config);
    ObjectSpec box;
    box.name = "wall";
    box.collision = Primitive{Box{Vec3(0.125, 0.125, 0.125)}};
    box.pose.position = Vec3(0.125 + gap + 0.125, 0, 0);
    w.AddObject(box);
    const SkinState s = ComputeSkinActivations(w);
    if (expected == 0) {
      CHECK(s.empty());
    } else {
      REQUIRE(s.parts.count("probe") == 1);
      CHECK(s.parts.at("probe").at(0).activation == expected);
    }
  }
}

TEST_CASE("nothing nearby yields no candidate parts and no activation") {
  World world = SkinWorld();
  world.AddObject(StaticBall(Vec3(2, 2, 2), 0.1));
  CHECK(PrefilterSkinParts(world).empty());
  CHECK(ComputeSkinActivations(world).empty());
}

TEST_CASE("ball near one forearm selects only that part") {
  World world = SkinWorld();
  const RobotModel& m = world.model();
  const Transform forearm = world.LinkPose(m.LinkIndex("l_forearm"));
  // Just outside the capsule on the lateral side, mid-length.
  const Vec3 center = forearm * Vec3(0, 0.03 + 0.02 + 0.002, -0.075);
  world.AddObject(StaticBall(center, 0.02));
  CHECK(PrefilteredParts(world) == std::set<std::string>{"l_forearm"});
  CHECK(ComputeSkinActivations(world) == ComputeSkinActivationsExhaustive(world));
  CHECK(!ComputeSkinActivations(world).empty());
}

TEST_CASE("ball at the elbow selects both arm segments") {
  World world = SkinWorld();
  const RobotModel& m = world.model();
  const Transform forearm = world.LinkPose(m.LinkIndex("l_forearm"));
  world.AddObject(StaticBall(forearm * Vec3(0, 0.045, 0.005), 0.02));
  const auto parts = PrefilteredParts(world);
  CHECK(parts.count("l_forearm") == 1);
  CHECK(parts.count("l_upper_arm") == 1);
}

TEST_CASE("prefiltered and exhaustive activations agree") {
  std::mt19937_64 rng(31);
  for (int scene = 0; scene < 5; ++scene) {
    World world = SkinWorld();
    world.AddObject(testing::BallNearRandomTaxel(world, rng, "ball", 0.03));
    CHECK(ComputeSkinActivations(world) == ComputeSkinActivationsExhaustive(world));
  }
}

TEST_CASE("activations are positive and within range") {
  std::mt19937_64 rng(32);
  World world = SkinWorld();
  world.AddObject(testing::BallNearRandomTaxel(world, rng, "ball", 0.05));
  for (const auto& [part, taxels] : ComputeSkinActivations(world).parts) {
    for (const auto& [id, reading] : taxels) {
      CHECK(reading.activation >= 1);
      CHECK(reading.activation <= 255);
      CHECK(std::abs(reading.normal.norm() - 1.0) < 1e-12);
    }
  }
}

}  // namespace
}  // namespace humsim
