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

// Pinhole eye cameras rendered by raycasting the collision geometry.
//
// Optical frame: z along the viewing direction, x to the right, y down.
// Pixel (u, v) covers [u, u+1) x [v, v+1); its ray passes through the pixel
// center (u + 0.5, v + 0.5). The principal point is (width/2, height/2).

#ifndef HUMSIM_VISION_H_
#define HUMSIM_VISION_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "humsim/geometry.h"
#include "humsim/model.h"

namespace humsim {

class World;

// Color of every robot link in rendered images.
inline constexpr Rgb kRobotColor = {160, 160, 160};

struct CameraModel {
  int link = 0;
  Transform local = Transform::Identity();
  int width = 160;
  int height = 120;
  double focal_length = 130.0;

  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }
};

CameraModel MakeCameraModel(const RobotModel& model, std::string_view camera);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
  // Distance along the optical axis; +inf where nothing was hit.
  std::vector<double> depth;

  Rgb At(int u, int v) const;
  double DepthAt(int u, int v) const;
};

Transform CameraWorldPose(const World& world, const CameraModel& camera);

// Requires the eyes flag. Background pixels are black; objects declared
// black are drawn as (1, 1, 1) so they stay distinguishable.
Image RenderCamera(const World& world, std::string_view camera);
Image RenderCamera(const World& world, const CameraModel& camera);

// Point in the optical frame for a pixel coordinate and axial depth.
Vec3 DeprojectPixel(const CameraModel& camera, double u, double v,
                    double depth);
// Pixel coordinate of a point in the optical frame (z > 0).
Eigen::Vector2d ProjectPoint(const CameraModel& camera, const Vec3& p);

struct Blob {
  double u = 0.0;  // centroid, pixel-center coordinates
  double v = 0.0;
  int pixel_count = 0;
};

// Largest 4-connected group of pixels whose channels all lie within
// tolerance of target; ties go to the group met first in row-major order.
std::optional<Blob> DetectColorBlob(const Image& image, Rgb target,
                                    int tolerance = 10);

// Binary PPM (P6) and 16-bit PGM (P5) of depth in millimetres, saturated.
void WritePpm(const std::filesystem::path& path, const Image& image);
void WriteDepthPgm(const std::filesystem::path& path, const Image& image);
// Reads a binary P6 file; depth is left empty.
Image ReadPpm(const std::filesystem::path& path);

}  // namespace humsim

#endif  // HUMSIM_VISION_H_
