#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pcmm/cloud.hpp"

namespace pcmm {

/// Points expressed in their own PCA frame: local = Q^T (p - origin).
struct LocalFrame {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d basis = Eigen::Matrix3d::Identity();  // columns v0 v1 v2
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();
  PointMatrix local_points;

  Point to_world(const Point& local) const { return basis * local + origin; }
  Point to_local(const Point& world) const { return basis.transpose() * (world - origin); }
};

/// Throws "degenerate plane support" for collinear input (lambda1 at
/// round-off level relative to lambda0).
LocalFrame to_local_frame(std::span<const Point> cluster);

/// Voxel corner ids; ties in the farthest-corner search resolve in this order.
enum class Corner : std::uint8_t { kMinMin = 0, kMinMax = 1, kMaxMin = 2, kMaxMax = 3 };

/// Per-voxel clip offsets measured from the empty corner (x', y'). The kept
/// part of the voxel is |x - x'| >= lx, |y - y'| >= ly and
/// |x - x'| + |y - y'| >= lxy.
struct ClipLines {
  Corner corner = Corner::kMinMin;
  double lx = 0.0;
  double ly = 0.0;
  double lxy = 0.0;

  bool operator==(const ClipLines&) const = default;
};

/// 2D occupancy description of a primitive's footprint in its local xy-plane.
/// Cell (i, j) covers [x0 + i*a, x0 + (i+1)*a) x [y0 + j*a, y0 + (j+1)*a);
/// per-cell arrays are row-major with index i * ny + j.
struct BoundaryGrid {
  double cell_size = 0.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();  // (x_min00, y_min00)
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> occupied;  // E
  std::vector<std::uint8_t> boundary;  // B
  std::vector<ClipLines> clips;        // meaningful where B = 1
  /// Fitting intermediates; not part of a stored model.
  std::vector<Eigen::Vector3d> cell_means;
  std::vector<std::uint32_t> cell_counts;

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(j);
  }
  std::size_t cell_count() const { return occupied.size(); }
  bool in_grid(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  bool is_occupied(int i, int j) const { return in_grid(i, j) && occupied[index(i, j)] != 0; }
  bool is_boundary(int i, int j) const { return in_grid(i, j) && boundary[index(i, j)] != 0; }

  double x_min(int i) const { return origin.x() + i * cell_size; }
  double y_min(int j) const { return origin.y() + j * cell_size; }
  Eigen::Vector2d corner_point(int i, int j, Corner c) const;

  /// Cell containing a local (x, y); the far edge folds into the last cell.
  std::pair<int, int> cell_of(double x, double y) const;

  /// True unless (x, y) falls in a region removed by the cell's clip lines.
  bool keeps(int i, int j, double x, double y) const;

  /// Drops the fitting intermediates.
  BoundaryGrid stripped() const;

  bool operator==(const BoundaryGrid&) const = default;
};

/// Occupancy E, boundary mask B (edge cells, or any empty 4-neighbor), and
/// per-cell means and counts. Grid spans the xy-extent of the local points.
BoundaryGrid build_boundary(const LocalFrame& frame, double cell_size);

/// Chooses each boundary cell's empty corner (farthest from the in-cell mean)
/// and the three clip offsets, using a margin of 0.5 a_voxel for the axis
/// lines and sqrt(2)/2 a_voxel for the diagonal. Offsets are clamped at 0 and
/// are zero when all three cells touching the corner are occupied.
BoundaryGrid fit_clip_lines(BoundaryGrid grid, const LocalFrame& frame, double a_voxel);

}  // namespace pcmm
