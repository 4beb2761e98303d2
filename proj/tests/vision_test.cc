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
#include <fstream>
#include <limits>
#include <random>

#include <doctest.h>

#include "humsim/error.h"
#include "humsim/model.h"
#include "humsim/vision.h"
#include "humsim/world.h"
#include "test_support.h"

namespace humsim {
namespace {

World EyesWorld(const std::string& extra = "") {
  LoadedScene scene = LoadSceneFromText("skin: false\n" + extra, "");
  return World(std::move(scene.model), std::move(scene.config));
}

Image Blank(int w, int h) {
  Image img;
  img.width = w;
  img.height = h;
  img.rgb.assign(3 * static_cast<size_t>(w) * h, 0);
  img.depth.assign(static_cast<size_t>(w) * h,
                   std::numeric_limits<double>::infinity());
  return img;
}

// Paints pixels whose centers lie within radius of (cu, cv).
int PaintDisc(Image& img, double cu, double cv, double radius, Rgb color) {
  int n = 0;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      if (std::hypot(u + 0.5 - cu, v + 0.5 - cv) > radius) continue;
      const size_t i = 3 * (static_cast<size_t>(v) * img.width + u);
      img.rgb[i] = color[0];
      img.rgb[i + 1] = color[1];
      img.rgb[i + 2] = color[2];
      ++n;
    }
  }
  return n;
}

TEST_CASE("deprojection cases") {
  CameraModel cam;
  cam.width = 160;
  cam.height = 120;
  cam.focal_length = 130;
  CHECK(DeprojectPixel(cam, cam.cx(), cam.cy(), 2.0) == Vec3(0, 0, 2));
  CHECK(DeprojectPixel(cam, cam.cx() + cam.focal_length, cam.cy(), 1.5)
            .isApprox(Vec3(1.5, 0, 1.5), 1e-15));
  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    const double u = testing::Uniform(rng, 0, cam.width);
    const double v = testing::Uniform(rng, 0, cam.height);
    const double d = testing::Uniform(rng, 0.1, 5.0);
    const Eigen::Vector2d uv = ProjectPoint(cam, DeprojectPixel(cam, u, v, d));
    CHECK(std::abs(uv.x() - u) < 1e-9);
    CHECK(std::abs(uv.y() - v) < 1e-9);
  }
  CHECK_THROWS_AS(ProjectPoint(cam, Vec3(0, 0, -1)), PreconditionError);
}

TEST_CASE("empty scene renders black with infinite depth") {
  const World world = EyesWorld();
  const Image img = RenderCamera(world, "l_eye");
  CHECK(img.width == 160);
  CHECK(img.height == 120);
  for (std::uint8_t b : img.rgb) CHECK(b == 0);
  for (double d : img.depth) CHECK(std::isinf(d));
}

TEST_CASE("sphere on the optical axis renders as a disc of radius f r / Z") {
  World world = EyesWorld();
  CameraModel cam = MakeCameraModel(world.model(), "l_eye");
  cam.focal_length = 100.0;
  const Transform pose = CameraWorldPose(world, cam);
  ObjectSpec ball;
  ball.name = "ball";
  ball.collision = Primitive{Sphere{0.1}};
  ball.pose.position = pose * Vec3(0, 0, 1.0);
  ball.color = {0, 200, 0};
  world.AddObject(ball);
  const Image img = RenderCamera(world, cam);
  const auto blob = DetectColorBlob(img, {0, 200, 0}, 0);
  REQUIRE(blob.has_value());
  const double radius = std::sqrt(blob->pixel_count / std::acos(-1.0));
  CHECK(std::abs(radius - 10.0) <= 2.0);
  CHECK(std::abs(blob->u - cam.cx()) < 0.5);
  CHECK(std::abs(blob->v - cam.cy()) < 0.5);
  double nearest = std::numeric_limits<double>::infinity();
  for (double d : img.depth) nearest = std::min(nearest, d);
  CHECK(std::abs(nearest - 0.9) < 1e-3);
}

TEST_CASE("black objects stay distinguishable from the background") {
  World world = EyesWorld();
  const CameraModel cam = MakeCameraModel(world.model(), "r_eye");
  ObjectSpec ball;
  ball.name = "ball";
  ball.collision = Primitive{Sphere{0.1}};
  ball.pose.position = CameraWorldPose(world, cam) * Vec3(0, 0, 1.0);
  ball.color = {0, 0, 0};
  world.AddObject(ball);
  const Image img = RenderCamera(world, cam);
  CHECK(img.At(80, 60) == Rgb{1, 1, 1});
}

TEST_CASE("rendering needs eyes and a known camera") {
  const World blind = EyesWorld("eyes: false\n");
  CHECK_THROWS_AS(RenderCamera(blind, "l_eye"), PreconditionError);
  const World world = EyesWorld();
  CHECK_THROWS_AS(RenderCamera(world, "nose"), LookupError);
}

TEST_CASE("blob detection on constructed images") {
  Image img = Blank(80, 80);
  CHECK_FALSE(DetectColorBlob(img, {0, 200, 0}).has_value());

  PaintDisc(img, 30, 40, 6, {0, 200, 0});
  auto blob = DetectColorBlob(img, {0, 200, 0});
  REQUIRE(blob.has_value());
  CHECK(std::abs(blob->u - 30) < 0.5);
  CHECK(std::abs(blob->v - 40) < 0.5);

  Image two = Blank(80, 80);
  const int small = PaintDisc(two, 10, 10, 1.8, {0, 200, 0});
  const int large = PaintDisc(two, 50, 50, 5.6, {0, 200, 0});
  CHECK(small == 12);
  CHECK(large == 96);
  blob = DetectColorBlob(two, {0, 200, 0});
  REQUIRE(blob.has_value());
  CHECK(blob->pixel_count == large);
  CHECK(std::abs(blob->u - 50) < 0.5);
  CHECK(std::abs(blob->v - 50) < 0.5);
}

TEST_CASE("ppm and depth pgm files") {
  Image img = Blank(7, 5);
  PaintDisc(img, 3, 2, 2, {10, 20, 30});
  img.depth[0] = 1.2345;
  const auto dir = testing::ScratchDir("vision_files");
  WritePpm(dir / "a.ppm", img);
  const Image back = ReadPpm(dir / "a.ppm");
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.rgb == img.rgb);

  WriteDepthPgm(dir / "a.pgm", img);
  std::ifstream in(dir / "a.pgm", std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  CHECK(magic == "P5");
  CHECK(maxval == 65535);
  unsigned char px[4];
  in.read(reinterpret_cast<char*>(px), 4);
  CHECK((px[0] << 8 | px[1]) == 1235);
  CHECK((px[2] << 8 | px[3]) == 65535);
  CHECK_THROWS_AS(ReadPpm(dir / "a.pgm"), ParseError);
}

}  // namespace
}  // namespace humsim
