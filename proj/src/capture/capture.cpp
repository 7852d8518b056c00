// SPDX-License-Identifier: Apache-2.0
#include "holo/capture/capture.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "holo/common/error.hpp"

namespace holo::capture {

void CameraModel::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw Error(Errc::ConfigError, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(Errc::ConfigError, "image size must be positive");
  if (!(cx >= 0 && cx < width && cy >= 0 && cy < height))
    throw Error(Errc::ConfigError, "principal point outside the image");
  if (!is_rigid(extrinsic)) throw Error(Errc::InvalidTransform, "camera extrinsic is not a rigid transform");
}

Mat4 CameraModel::intrinsic_matrix() const noexcept {
  Mat4 k = Mat4::identity();
  k(0, 0) = fx;
  k(1, 1) = fy;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return k;
}

void SceneConfig::validate() const {
  if (target_points <= 0) throw Error(Errc::ConfigError, "target_points must be positive");
  if (!(motion_amplitude >= 0)) throw Error(Errc::ConfigError, "motion_amplitude must be >= 0");
  if (!(camera_distance > 0)) throw Error(Errc::ConfigError, "camera_distance must be positive");
}

CameraModel default_camera(const SceneConfig& scene) {
  CameraModel cam;
  // Looking down world -Z: camera x -> world x, camera y (down) -> world -y,
  // camera z (forward) -> world -z.
  Mat4 e = Mat4::identity();
  e(1, 1) = -1;
  e(2, 2) = -1;
  e(1, 3) = kRigHeight;
  e(2, 3) = scene.camera_distance;
  cam.extrinsic = e;
  return cam;
}

PointCloudFrame back_project(const DepthImage& depth, const ColorImage& color, const CameraModel& cam) {
  if (depth.width != cam.width || depth.height != cam.height)
    throw Error(Errc::DimensionError, "depth image does not match camera resolution");
  if (color.width != depth.width || color.height != depth.height)
    throw Error(Errc::DimensionError, "color image does not match depth image");
  if (depth.data.size() != std::size_t(depth.width) * depth.height ||
      color.data.size() != std::size_t(color.width) * color.height * 3)
    throw Error(Errc::DimensionError, "image buffer size inconsistent with its dimensions");

  PointCloudFrame out;
  const double inv_fx = 1.0 / cam.fx, inv_fy = 1.0 / cam.fy;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const std::uint16_t d = depth.at(u, v);
      if (d == 0) continue;
      const double z = d / 1000.0;
      out.points.push_back({static_cast<float>((u - cam.cx) * z * inv_fx),
                            static_cast<float>((v - cam.cy) * z * inv_fy), static_cast<float>(z)});
      out.colors.push_back(color.at(u, v));
    }
  }
  return out;
}

PointCloudFrame transform_to_world(PointCloudFrame frame, const Mat4& extrinsic) {
  if (!is_rigid(extrinsic)) throw Error(Errc::InvalidTransform, "extrinsic is not a rigid transform");
  for (auto& p : frame.points) {
    const Vec3d w = extrinsic.apply({p.x, p.y, p.z});
    p = {static_cast<float>(w.x), static_cast<float>(w.y), static_cast<float>(w.z)};
  }
  return frame;
}

PointCloudFrame fuse(std::span<const PointCloudFrame> frames, double capture_radius_m) {
  if (frames.empty()) throw Error(Errc::EmptyInput, "no frames to fuse");
  const auto& first = frames.front();
  std::size_t total = 0;
  for (const auto& f : frames) {
    if (f.source_id != first.source_id || f.capture_ts_us != first.capture_ts_us)
      throw Error(Errc::FusionMismatch, "frames belong to different sources or capture instants");
    if (f.points.size() != f.colors.size()) throw Error(Errc::DimensionError, "points/colors length mismatch");
    total += f.size();
  }

  PointCloudFrame out;
  out.source_id = first.source_id;
  out.seq = first.seq;
  out.capture_ts_us = first.capture_ts_us;
  out.points.reserve(total);
  out.colors.reserve(total);
  const double r2 = capture_radius_m * capture_radius_m;
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto& p = f.points[i];
      if (double(p.x) * p.x + double(p.z) * p.z > r2) continue;
      out.points.push_back(p);
      out.colors.push_back(f.colors[i]);
    }
  }
  return out;
}

DepthImage remove_background(DepthImage depth, int z_min_mm, int z_max_mm) {
  if (z_min_mm < 0 || z_min_mm >= z_max_mm)
    throw Error(Errc::ConfigError, "background range requires 0 <= z_min < z_max");
  for (auto& d : depth.data)
    if (d < z_min_mm || d > z_max_mm) d = 0;
  return depth;
}

PointCloudFrame capture_point_cloud(const SceneConfig& scene, const CameraModel& cam, std::int64_t t_us,
                                    const CaptureOptions& options) {
  RgbdFrame rgbd = synth_capture(scene, t_us, cam);
  const DepthImage depth = remove_background(std::move(rgbd.depth), options.z_min_mm, options.z_max_mm);
  const PointCloudFrame world = transform_to_world(back_project(depth, rgbd.color, cam), cam.extrinsic);
  return fuse(std::span(&world, 1), options.capture_radius_m);
}

}  // namespace holo::capture
