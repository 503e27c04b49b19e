#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "pcmm/cloud.hpp"

namespace pcmm::testing {

/// Fixed, generic orientation used by the tilted scene variants.
inline Eigen::Matrix3d scene_rotation() {
  return (Eigen::AngleAxisd(0.37, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(0.21, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(-0.13, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

inline void transform(PointMatrix& points, const Eigen::Matrix3d& rotation, const Point& shift) {
  for (auto& p : points) p = rotation * p + shift;
}

inline void add_noise(PointMatrix& points, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  for (auto& p : points) p += Point(n(rng), n(rng), n(rng));
}

/// Six walls of an axis-aligned cube [0, side]^3, each sampled on a square
/// lattice at half-pitch inset so that walls do not share edge rows.
inline PointMatrix room(double side = 3.0, double pitch = 0.01, double sigma = 0.005,
                        std::uint64_t seed = 1) {
  PointMatrix out;
  const int n = static_cast<int>(std::lround(side / pitch));
  for (int face = 0; face < 6; ++face) {
    const int axis = face / 2;
    const double level = (face % 2) ? side : 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Point p;
        p[axis] = level;
        p[(axis + 1) % 3] = (i + 0.5) * pitch;
        p[(axis + 2) % 3] = (j + 0.5) * pitch;
        out.push_back(p);
      }
    }
  }
  std::mt19937_64 rng(seed);
  add_noise(out, sigma, rng);
  return out;
}

/// Half cylinder x^2 + z^2 = r^2, z >= 0, y in [0, height], sampled at the
/// given arc-length pitch.
inline PointMatrix half_cylinder(double radius = 1.0, double height = 1.0, double pitch = 0.01,
                                 double sigma = 0.003, std::uint64_t seed = 2) {
  PointMatrix out;
  const int na = static_cast<int>(std::lround(std::numbers::pi * radius / pitch));
  const int nh = static_cast<int>(std::lround(height / pitch));
  for (int i = 0; i < na; ++i) {
    const double t = (i + 0.5) * std::numbers::pi / na;
    for (int j = 0; j < nh; ++j) {
      out.emplace_back(radius * std::cos(t), (j + 0.5) * pitch, radius * std::sin(t));
    }
  }
  std::mt19937_64 rng(seed);
  add_noise(out, sigma, rng);
  return out;
}

/// Isotropic Gaussian blob.
inline PointMatrix blob(const Point& center, double sigma, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  PointMatrix out;
  for (int k = 0; k < count; ++k) out.push_back(center + Point(n(rng), n(rng), n(rng)));
  return out;
}

/// Noise-free square of the given side centered at `center`, sampled on a
/// lattice of `pitch` in the plane with unit normal along `normal`. A tilted
/// normal makes the sheet cross the filter lattice obliquely, which keeps
/// the filtered density above one point per voxel face.
inline PointMatrix tilted_plane(const Eigen::Vector3d& normal, double side = 1.0, double pitch = 0.005,
                                const Point& center = Point(0.7, 0.4, 0.9)) {
  const Eigen::Vector3d n = normal.normalized();
  Eigen::Vector3d t = n.cross(Eigen::Vector3d::UnitZ());
  if (t.norm() < 1e-6) t = n.cross(Eigen::Vector3d::UnitY());
  t.normalize();
  const Eigen::Vector3d s = n.cross(t);
  const int count = static_cast<int>(std::lround(side / pitch));
  PointMatrix out;
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < count; ++j) {
      const double x = (i + 0.5) * pitch - 0.5 * side;
      const double y = (j + 0.5) * pitch - 0.5 * side;
      out.push_back(center + x * t + y * s);
    }
  }
  return out;
}

/// A tilted plane, a half-cylinder section away from it, and three
/// 200-point blobs.
inline PointMatrix mixed_scene(std::uint64_t seed = 3) {
  PointMatrix out = tilted_plane(Eigen::Vector3d(0.3, 0.2, 1.0), 1.5, 0.01, Point(0.0, 0.0, 0.0));
  std::mt19937_64 rng(seed);
  add_noise(out, 0.002, rng);
  PointMatrix cyl = half_cylinder(1.0, 1.0, 0.01, 0.003, seed + 1);
  transform(cyl, Eigen::Matrix3d::Identity(), Point(4.0, 0.0, 0.0));
  out.insert(out.end(), cyl.begin(), cyl.end());
  for (int k = 0; k < 3; ++k) {
    const PointMatrix b = blob(Point(-3.0, 2.0 * k, 1.0), 0.08, 200, seed + 10 + static_cast<std::uint64_t>(k));
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

}  // namespace pcmm::testing
