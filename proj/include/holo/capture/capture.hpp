// SPDX-License-Identifier: Apache-2.0
//
// RGB-D capture: pinhole back-projection, extrinsic transform into the rig
// frame, multi-camera fusion and a procedural stand-in for a seated subject.
//
// Conventions: camera frame is x right, y down, z forward (meters). The world
// (rig) frame is y up with the subject standing on the rig origin. Depth is in
// millimeters, 0 meaning "no measurement".
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "holo/common/geometry.hpp"

namespace holo::capture {

struct CameraModel {
  double fx = 504.0;
  double fy = 504.0;
  double cx = 320.0;
  double cy = 288.0;
  int width = 640;
  int height = 576;
  Mat4 extrinsic = Mat4::identity();  // camera -> world

  /// Throws ConfigError on non-positive focal lengths or an out-of-image
  /// principal point, InvalidTransform on a non-rigid extrinsic.
  void validate() const;

  /// 4x4 homogeneous intrinsic matrix reconstructed from (fx, fy, cx, cy).
  Mat4 intrinsic_matrix() const noexcept;
};

struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;  // millimeters, row-major

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), data(std::size_t(w) * h, 0) {}

  std::uint16_t& at(int u, int v) { return data[std::size_t(v) * width + u]; }
  std::uint16_t at(int u, int v) const { return data[std::size_t(v) * width + u]; }
  friend bool operator==(const DepthImage&, const DepthImage&) = default;
};

struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // RGB, row-major

  ColorImage() = default;
  ColorImage(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 3, 0) {}

  Rgb8 at(int u, int v) const {
    const std::size_t i = (std::size_t(v) * width + u) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int u, int v, Rgb8 c) {
    const std::size_t i = (std::size_t(v) * width + u) * 3;
    data[i] = c.r;
    data[i + 1] = c.g;
    data[i + 2] = c.b;
  }
  friend bool operator==(const ColorImage&, const ColorImage&) = default;
};

struct PointCloudFrame {
  std::uint32_t source_id = 0;
  std::uint32_t seq = 0;
  std::uint64_t capture_ts_us = 0;
  std::vector<Vec3f> points;
  std::vector<Rgb8> colors;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

/// Parameters of the synthetic subject.
struct SceneConfig {
  std::uint64_t seed = 1;
  int target_points = 50'000;     // desired foreground pixel count
  double motion_amplitude = 0.05;  // meters
  double camera_distance = 3.0;    // meters, along the optical axis

  void validate() const;
};

struct RgbdFrame {
  DepthImage depth;
  ColorImage color;
};

inline constexpr double kDefaultCaptureRadius = 1.5;
inline constexpr double kRigHeight = 1.0;  // camera and torso centre height, meters

/// Camera resolution/intrinsics of a commodity depth sensor, mounted at the
/// scene's camera distance and rig height, looking at the rig origin.
CameraModel default_camera(const SceneConfig& scene);

PointCloudFrame back_project(const DepthImage& depth, const ColorImage& color, const CameraModel& cam);

PointCloudFrame transform_to_world(PointCloudFrame frame, const Mat4& extrinsic);

/// Concatenates per-camera clouds of one subject, dropping points whose
/// horizontal distance from the rig origin exceeds `capture_radius_m`.
PointCloudFrame fuse(std::span<const PointCloudFrame> frames, double capture_radius_m = kDefaultCaptureRadius);

DepthImage remove_background(DepthImage depth, int z_min_mm, int z_max_mm);

/// Renders the procedural subject as seen by `cam` at time `t_us`. Pure
/// function of its arguments.
RgbdFrame synth_capture(const SceneConfig& scene, std::int64_t t_us, const CameraModel& cam);

struct CaptureOptions {
  int z_min_mm = 300;
  int z_max_mm = 6000;
  double capture_radius_m = kDefaultCaptureRadius;
};

/// Single-camera capture chain: synth_capture -> remove_background ->
/// back_project -> transform_to_world -> fuse. Identity fields are left zero.
PointCloudFrame capture_point_cloud(const SceneConfig& scene, const CameraModel& cam, std::int64_t t_us,
                                    const CaptureOptions& options = {});

}  // namespace holo::capture
