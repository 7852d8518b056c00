// SPDX-License-Identifier: Apache-2.0
//
// Procedural seated-subject proxy: head sphere, torso ellipsoid and two arm
// capsules, ray cast per pixel. The proxy is placed on the optical axis at
// `camera_distance` and uniformly scaled so that its projected area covers
// roughly `target_points` pixels.
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "holo/capture/capture.hpp"
#include "holo/common/error.hpp"
#include "holo/common/random.hpp"

namespace holo::capture {
namespace {

struct V3 {
  double x = 0, y = 0, z = 0;
};
V3 operator+(V3 a, V3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
V3 operator-(V3 a, V3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
V3 operator*(V3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
double dot(V3 a, V3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
V3 normalized(V3 a) {
  const double n = std::sqrt(dot(a, a));
  return n > 0 ? a * (1.0 / n) : V3{0, 0, -1};
}

// Unit-scale body dimensions (meters) of the proxy.
constexpr double kHeadRadius = 0.11;
constexpr double kHeadHeight = 0.47;
constexpr V3 kTorsoAxes{0.19, 0.30, 0.12};
constexpr double kShoulderX = 0.25;
constexpr double kShoulderY = 0.22;
constexpr double kArmLength = 0.55;
constexpr double kArmRadius = 0.045;
constexpr double kArmAbduction = 0.25;  // radians

// Projected area of the unit-scale proxy facing the camera, used to pick
// the scale that meets target_points.
double unit_projected_area() {
  const double pi = std::numbers::pi;
  const double head = pi * kHeadRadius * kHeadRadius;
  const double torso = pi * kTorsoAxes.x * kTorsoAxes.y;
  const double arm = 2 * kArmRadius * kArmLength + pi * kArmRadius * kArmRadius;
  return head + torso + 2 * arm;
}

enum class Part : std::uint8_t { None, Head, Torso, LeftArm, RightArm };

struct Sphere {
  V3 c;
  double r;
};
struct Ellipsoid {
  V3 c, axes;
};
struct Capsule {
  V3 a, b;
  double r;
};

// Returns the ray parameter of the nearest hit in front of the origin, or -1.
// `rd` must be unit length.
double hit_sphere(V3 rd, V3 c, double r) {
  const double b = dot(rd, c);
  const double h = b * b - (dot(c, c) - r * r);
  if (h < 0) return -1;
  const double t = b - std::sqrt(h);
  return t > 0 ? t : -1;
}

double hit_ellipsoid(V3 rd, const Ellipsoid& e) {
  const V3 d{rd.x / e.axes.x, rd.y / e.axes.y, rd.z / e.axes.z};
  const V3 c{e.c.x / e.axes.x, e.c.y / e.axes.y, e.c.z / e.axes.z};
  const double a = dot(d, d), b = dot(d, c), k = dot(c, c) - 1.0;
  const double h = b * b - a * k;
  if (h < 0) return -1;
  const double t = (b - std::sqrt(h)) / a;
  return t > 0 ? t : -1;
}

double hit_capsule(V3 rd, const Capsule& cap) {
  const V3 ba = cap.b - cap.a;
  const V3 oa = V3{} - cap.a;
  const double baba = dot(ba, ba), bard = dot(ba, rd), baoa = dot(ba, oa);
  const double rdoa = dot(rd, oa), oaoa = dot(oa, oa);
  const double a = baba - bard * bard;
  const double b = baba * rdoa - baoa * bard;
  const double c = baba * oaoa - baoa * baoa - cap.r * cap.r * baba;
  const double h = b * b - a * c;
  if (h < 0) return -1;
  const double t = (-b - std::sqrt(h)) / a;
  const double y = baoa + t * bard;
  if (y > 0 && y < baba) return t > 0 ? t : -1;
  const V3 oc = y <= 0 ? oa : V3{} - cap.b;
  const double bb = dot(rd, oc), cc = dot(oc, oc) - cap.r * cap.r;
  const double hh = bb * bb - cc;
  if (hh <= 0) return -1;
  const double tc = -bb - std::sqrt(hh);
  return tc > 0 ? tc : -1;
}

V3 capsule_normal(V3 p, const Capsule& cap) {
  const V3 ba = cap.b - cap.a;
  const double h = std::clamp(dot(p - cap.a, ba) / dot(ba, ba), 0.0, 1.0);
  return normalized(p - (cap.a + ba * h));
}

struct Pose {
  Sphere head;
  Ellipsoid torso;
  Capsule arms[2];
};

struct Appearance {
  Rgb8 skin, hair, shirt, trousers;
  double phase[4];
};

Appearance appearance_for(std::uint64_t seed) {
  static constexpr std::array<Rgb8, 4> kSkins{{{224, 172, 140}, {198, 134, 96}, {141, 85, 54}, {241, 194, 160}}};
  static constexpr std::array<Rgb8, 6> kShirts{
      {{40, 70, 150}, {150, 40, 45}, {45, 120, 70}, {200, 200, 205}, {60, 60, 65}, {210, 150, 40}}};
  static constexpr std::array<Rgb8, 3> kHair{{{45, 30, 20}, {90, 60, 30}, {20, 20, 20}}};
  SplitMix64 rng(derive_seed(seed, {0x5ce7e}));
  Appearance a{};
  a.skin = kSkins[rng.next() % kSkins.size()];
  a.shirt = kShirts[rng.next() % kShirts.size()];
  a.hair = kHair[rng.next() % kHair.size()];
  a.trousers = {50, 50, 60};
  for (double& p : a.phase) p = rng.uniform(0, 2 * std::numbers::pi);
  return a;
}

// Pose in camera coordinates at time t. Body frame: y up, z toward camera,
// origin at the torso centre; mapped to camera frame by (x, -y, d - z).
Pose pose_at(const SceneConfig& scene, const Appearance& look, double t_s, double scale) {
  const double amp = scene.motion_amplitude;
  const double two_pi = 2 * std::numbers::pi;
  const double sway = amp * std::sin(two_pi * 0.3 * t_s + look.phase[0]);
  const double nod_x = 0.5 * amp * std::sin(two_pi * 0.5 * t_s + look.phase[1]);
  const double nod_z = 0.5 * amp * std::sin(two_pi * 0.4 * t_s + look.phase[2]);
  const double swing = (4.0 * amp / kArmLength) * std::sin(two_pi * 0.35 * t_s + look.phase[3]);

  const double d = scene.camera_distance;
  auto to_cam = [&](V3 body) { return V3{body.x * scale, -body.y * scale, d - body.z * scale}; };

  Pose pose;
  pose.torso = {to_cam({sway, 0, 0}), kTorsoAxes * scale};
  pose.head = {to_cam({sway + nod_x, kHeadHeight, nod_z}), kHeadRadius * scale};
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? -1.0 : 1.0;
    const double fwd = side == 0 ? swing : -swing;
    const V3 shoulder{sway + sign * kShoulderX, kShoulderY, 0};
    const V3 dir{sign * std::sin(kArmAbduction), -std::cos(kArmAbduction) * std::cos(fwd),
                 std::cos(kArmAbduction) * std::sin(fwd)};
    pose.arms[side] = {to_cam(shoulder), to_cam(shoulder + dir * kArmLength), kArmRadius * scale};
  }
  return pose;
}

struct PixelRect {
  int u0, u1, v0, v1;  // inclusive
};

// Conservative screen rectangle of an axis-aligned box in camera space.
PixelRect project_box(V3 lo, V3 hi, const CameraModel& cam) {
  double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
  for (int i = 0; i < 8; ++i) {
    const V3 p{(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z};
    const double z = std::max(p.z, 1e-3);
    const double u = cam.cx + cam.fx * p.x / z, v = cam.cy + cam.fy * p.y / z;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  auto clampi = [](double x, int lo, int hi) { return int(std::clamp(x, double(lo), double(hi))); };
  return {clampi(std::floor(umin), 0, cam.width - 1), clampi(std::ceil(umax), 0, cam.width - 1),
          clampi(std::floor(vmin), 0, cam.height - 1), clampi(std::ceil(vmax), 0, cam.height - 1)};
}

Rgb8 shade(Rgb8 albedo, V3 normal) {
  static const V3 light = normalized({-0.3, -0.5, -1.0});
  const double lambert = std::max(0.0, dot(normal, light));
  const double k = 0.6 + 0.4 * lambert;
  auto ch = [k](std::uint8_t c) { return static_cast<std::uint8_t>(std::lround(std::min(255.0, c * k))); };
  return {ch(albedo.r), ch(albedo.g), ch(albedo.b)};
}

}  // namespace

RgbdFrame synth_capture(const SceneConfig& scene, std::int64_t t_us, const CameraModel& cam) {
  scene.validate();
  cam.validate();

  const double d = scene.camera_distance;
  const double scale = std::sqrt(double(scene.target_points) * d * d / (unit_projected_area() * cam.fx * cam.fy));
  const Appearance look = appearance_for(scene.seed);
  const Pose pose = pose_at(scene, look, double(t_us) * 1e-6, scale);

  const int w = cam.width, h = cam.height;
  std::vector<double> zbuf(std::size_t(w) * h, std::numeric_limits<double>::infinity());
  std::vector<Part> part(std::size_t(w) * h, Part::None);

  auto raster = [&](PixelRect r, Part id, auto&& hit) {
    for (int v = r.v0; v <= r.v1; ++v) {
      for (int u = r.u0; u <= r.u1; ++u) {
        const V3 rd = normalized({(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0});
        const double t = hit(rd);
        if (t <= 0) continue;
        const double z = t * rd.z;
        const std::size_t i = std::size_t(v) * w + u;
        if (z < zbuf[i]) {
          zbuf[i] = z;
          part[i] = id;
        }
      }
    }
  };

  const V3 hr{pose.head.r, pose.head.r, pose.head.r};
  raster(project_box(pose.head.c - hr, pose.head.c + hr, cam), Part::Head,
         [&](V3 rd) { return hit_sphere(rd, pose.head.c, pose.head.r); });
  raster(project_box(pose.torso.c - pose.torso.axes, pose.torso.c + pose.torso.axes, cam), Part::Torso,
         [&](V3 rd) { return hit_ellipsoid(rd, pose.torso); });
  for (int side = 0; side < 2; ++side) {
    const Capsule& cap = pose.arms[side];
    const V3 lo{std::min(cap.a.x, cap.b.x) - cap.r, std::min(cap.a.y, cap.b.y) - cap.r,
                std::min(cap.a.z, cap.b.z) - cap.r};
    const V3 hi{std::max(cap.a.x, cap.b.x) + cap.r, std::max(cap.a.y, cap.b.y) + cap.r,
                std::max(cap.a.z, cap.b.z) + cap.r};
    raster(project_box(lo, hi, cam), side == 0 ? Part::LeftArm : Part::RightArm,
           [&](V3 rd) { return hit_capsule(rd, cap); });
  }

  RgbdFrame out{DepthImage(w, h), ColorImage(w, h)};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t i = std::size_t(v) * w + u;
      if (part[i] == Part::None) continue;
      const double z = zbuf[i];
      const long mm = std::lround(z * 1000.0);
      if (mm <= 0 || mm > 65535) continue;
      out.depth.data[i] = static_cast<std::uint16_t>(mm);

      const V3 p{(u - cam.cx) / cam.fx * z, (v - cam.cy) / cam.fy * z, z};
      V3 n;
      Rgb8 albedo;
      switch (part[i]) {
        case Part::Head: {
          n = normalized(p - pose.head.c);
          // Hair covers the crown (camera y points down).
          albedo = n.y < -0.35 ? look.hair : look.skin;
          break;
        }
        case Part::Torso: {
          const V3 q = p - pose.torso.c;
          const V3& ax = pose.torso.axes;
          n = normalized({q.x / (ax.x * ax.x), q.y / (ax.y * ax.y), q.z / (ax.z * ax.z)});
          albedo = q.y > 0.55 * ax.y ? look.trousers : look.shirt;
          break;
        }
        default: {
          const Capsule& cap = pose.arms[part[i] == Part::LeftArm ? 0 : 1];
          n = capsule_normal(p, cap);
          const V3 ba = cap.b - cap.a;
          const double along = dot(p - cap.a, ba) / dot(ba, ba);
          albedo = along < 0.55 ? look.shirt : look.skin;
          break;
        }
      }
      out.color.set(u, v, shade(albedo, n));
    }
  }
  return out;
}

}  // namespace holo::capture
