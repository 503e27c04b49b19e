#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcmm/cloud.hpp"

namespace pcmm {

/// Uniform grid over the bounding box of a point set, stored as a compressed
/// cell list. Queries are exact: nearest() returns the same squared distance
/// as a linear scan.
class PointGrid {
 public:
  /// `cell_size` <= 0 picks a size giving roughly one point per cell.
  explicit PointGrid(std::span<const Point> points, double cell_size = 0.0);

  struct Neighbor {
    std::size_t index = 0;  // into the original point order
    double squared_distance = 0.0;
  };

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double cell_size() const { return cell_; }

  Neighbor nearest(const Point& query) const;

  /// True iff some stored point lies strictly closer than `radius`.
  bool any_within(const Point& query, double radius) const;

 private:
  using CellIndex = std::array<std::int64_t, 3>;

  CellIndex cell_of(const Point& p) const;
  std::size_t flat(const CellIndex& c) const {
    return static_cast<std::size_t>((c[0] * dims_[1] + c[1]) * dims_[2] + c[2]);
  }

  Eigen::Vector3d lower_ = Eigen::Vector3d::Zero();
  double cell_ = 1.0;
  CellIndex dims_{1, 1, 1};
  std::vector<std::size_t> cell_start_;
  PointMatrix points_;                 // sorted by cell
  std::vector<std::size_t> original_;  // sorted position -> input index
};

}  // namespace pcmm
