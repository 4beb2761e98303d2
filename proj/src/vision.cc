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

#include "humsim/vision.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "humsim/error.h"
#include "humsim/world.h"

namespace humsim {

CameraModel MakeCameraModel(const RobotModel& model, std::string_view camera) {
  const CameraMount& mount = model.Camera(camera);
  CameraModel cam;
  cam.link = model.LinkIndex(mount.link);
  cam.local = mount.local;
  cam.width = mount.width;
  cam.height = mount.height;
  cam.focal_length = mount.focal_length;
  return cam;
}

Rgb Image::At(int u, int v) const {
  const size_t i = 3 * (static_cast<size_t>(v) * width + u);
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

double Image::DepthAt(int u, int v) const {
  return depth[static_cast<size_t>(v) * width + u];
}

Transform CameraWorldPose(const World& world, const CameraModel& camera) {
  return world.link_transforms()[camera.link] * camera.local;
}

Vec3 DeprojectPixel(const CameraModel& camera, double u, double v,
                    double depth) {
  return Vec3((u - camera.cx()) * depth / camera.focal_length,
              (v - camera.cy()) * depth / camera.focal_length, depth);
}

Eigen::Vector2d ProjectPoint(const CameraModel& camera, const Vec3& p) {
  if (!(p.z() > 0.0)) throw PreconditionError("point is behind the camera");
  return {camera.focal_length * p.x() / p.z() + camera.cx(),
          camera.focal_length * p.y() / p.z() + camera.cy()};
}

Image RenderCamera(const World& world, std::string_view camera) {
  return RenderCamera(world, MakeCameraModel(world.model(), camera));
}

Image RenderCamera(const World& world, const CameraModel& camera) {
  if (!world.config().flags.eyes) {
    throw PreconditionError("rendering requires the eyes flag");
  }
  Image img;
  img.width = camera.width;
  img.height = camera.height;
  img.rgb.assign(3 * static_cast<size_t>(img.width) * img.height, 0);
  img.depth.assign(static_cast<size_t>(img.width) * img.height,
                   std::numeric_limits<double>::infinity());

  const Transform pose = CameraWorldPose(world, camera);
  const Vec3 origin = pose.translation();
  const Mat3 rot = pose.linear();
  const auto& colliders = world.colliders();
  std::vector<Rgb> colors(colliders.size());
  for (size_t c = 0; c < colliders.size(); ++c) {
    const BodyId& b = colliders[c].body;
    if (b.is_link()) {
      colors[c] = kRobotColor;
    } else {
      Rgb col = world.objects()[b.index].spec.color;
      if (col == Rgb{0, 0, 0}) col = {1, 1, 1};
      colors[c] = col;
    }
  }
  constexpr double kFar = 100.0;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const Vec3 ray_cam = DeprojectPixel(camera, u + 0.5, v + 0.5, 1.0);
      const Vec3 dir = (rot * ray_cam).normalized();
      double best = std::numeric_limits<double>::infinity();
      int hit = -1;
      for (size_t c = 0; c < colliders.size(); ++c) {
        auto t = RayCast(colliders[c].shape, colliders[c].pose, origin, dir, kFar);
        // Shapes that contain the camera are not visible.
        if (t && *t > 0.0 && *t < best) {
          best = *t;
          hit = static_cast<int>(c);
        }
      }
      if (hit < 0) continue;
      const size_t i = static_cast<size_t>(v) * img.width + u;
      img.depth[i] = best / ray_cam.norm();
      img.rgb[3 * i] = colors[hit][0];
      img.rgb[3 * i + 1] = colors[hit][1];
      img.rgb[3 * i + 2] = colors[hit][2];
    }
  }
  return img;
}

std::optional<Blob> DetectColorBlob(const Image& image, Rgb target,
                                    int tolerance) {
  const int w = image.width;
  const int h = image.height;
  std::vector<std::uint8_t> mask(static_cast<size_t>(w) * h, 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Rgb c = image.At(u, v);
      bool match = true;
      for (int k = 0; k < 3; ++k) {
        match &= std::abs(static_cast<int>(c[k]) - target[k]) <= tolerance;
      }
      mask[static_cast<size_t>(v) * w + u] = match ? 1 : 0;
    }
  }
  // 4-connected flood fill; the first largest group in scan order wins.
  std::optional<Blob> best;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (mask[start] != 1) continue;
    double su = 0.0, sv = 0.0;
    int n = 0;
    mask[start] = 2;
    stack.push_back(start);
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      const int u = i % w, v = i / w;
      su += u + 0.5;
      sv += v + 0.5;
      ++n;
      const int next[4][2] = {{u - 1, v}, {u + 1, v}, {u, v - 1}, {u, v + 1}};
      for (const auto& [nu, nv] : next) {
        if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
        const int j = nv * w + nu;
        if (mask[j] != 1) continue;
        mask[j] = 2;
        stack.push_back(j);
      }
    }
    if (!best || n > best->pixel_count) best = Blob{su / n, sv / n, n};
  }
  return best;
}

void WritePpm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
}

void WriteDepthPgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << "P5\n" << image.width << " " << image.height << "\n65535\n";
  for (double d : image.depth) {
    const double mm = std::isfinite(d) ? std::round(d * 1000.0) : 65535.0;
    const auto val = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
    const char bytes[2] = {static_cast<char>(val >> 8),
                           static_cast<char>(val & 0xff)};
    out.write(bytes, 2);
  }
}

Image ReadPpm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw ParseError(fmt::format("{}: not an 8-bit binary PPM", path.string()));
  }
  in.get();
  Image img;
  img.width = w;
  img.height = h;
  img.rgb.resize(3 * static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(img.rgb.data()),
          static_cast<std::streamsize>(img.rgb.size()));
  if (!in) throw ParseError(fmt::format("{}: truncated PPM", path.string()));
  return img;
}

}  // namespace humsim
