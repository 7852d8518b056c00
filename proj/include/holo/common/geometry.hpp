// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace holo {

struct Vec3f {
  float x = 0, y = 0, z = 0;
  friend bool operator==(const Vec3f&, const Vec3f&) = default;
};

struct Vec3d {
  double x = 0, y = 0, z = 0;
  friend bool operator==(const Vec3d&, const Vec3d&) = default;
};

inline double distance(const Vec3f& a, const Vec3f& b) noexcept {
  const double dx = double(a.x) - b.x, dy = double(a.y) - b.y, dz = double(a.z) - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Row-major 4x4 homogeneous transform.
struct Mat4 {
  std::array<double, 16> m{};

  static Mat4 identity() noexcept {
    Mat4 t;
    t.m[0] = t.m[5] = t.m[10] = t.m[15] = 1.0;
    return t;
  }

  static Mat4 translation(double tx, double ty, double tz) noexcept {
    Mat4 t = identity();
    t.m[3] = tx;
    t.m[7] = ty;
    t.m[11] = tz;
    return t;
  }

  /// Rotation about +Y by `radians` (right-handed).
  static Mat4 rotation_y(double radians) noexcept {
    Mat4 t = identity();
    const double c = std::cos(radians), s = std::sin(radians);
    t.m[0] = c;
    t.m[2] = s;
    t.m[8] = -s;
    t.m[10] = c;
    return t;
  }

  double operator()(int row, int col) const noexcept { return m[row * 4 + col]; }
  double& operator()(int row, int col) noexcept { return m[row * 4 + col]; }

  Vec3d apply(const Vec3d& p) const noexcept {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
  }

  friend Mat4 operator*(const Mat4& a, const Mat4& b) noexcept {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double s = 0;
        for (int k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
        r(i, j) = s;
      }
    return r;
  }
};

/// True when the upper-left 3x3 block is orthonormal with determinant +1 and
/// the bottom row is (0,0,0,1).
inline bool is_rigid(const Mat4& t, double tol = 1e-6) noexcept {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double dot = 0;
      for (int k = 0; k < 3; ++k) dot += t(k, i) * t(k, j);
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > tol) return false;
    }
  const double det = t(0, 0) * (t(1, 1) * t(2, 2) - t(1, 2) * t(2, 1)) -
                     t(0, 1) * (t(1, 0) * t(2, 2) - t(1, 2) * t(2, 0)) +
                     t(0, 2) * (t(1, 0) * t(2, 1) - t(1, 1) * t(2, 0));
  if (std::abs(det - 1.0) > tol) return false;
  return t(3, 0) == 0 && t(3, 1) == 0 && t(3, 2) == 0 && t(3, 3) == 1;
}

}  // namespace holo
