#include "pcmm/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcmm {
namespace {

// Keeps the dense cell array proportional to the point count.
constexpr double kMaxCellsPerPoint = 8.0;
constexpr double kMinCellBudget = 1 << 16;

double auto_cell_size(const Eigen::Vector3d& extent, std::size_t n) {
  const double count = static_cast<double>(std::max<std::size_t>(n, 1));
  std::array<double, 3> e{extent.x(), extent.y(), extent.z()};
  std::sort(e.begin(), e.end());
  // Cube-, plate- and rod-shaped clouds each get about one point per cell.
  const double volume_cell = std::cbrt(e[0] * e[1] * e[2] / count);
  const double area_cell = std::sqrt(e[1] * e[2] / count);
  const double line_cell = e[2] / count;
  const double cell = std::max({volume_cell, area_cell, line_cell});
  return cell > 0.0 ? cell : 1.0;
}

}  // namespace

PointGrid::PointGrid(std::span<const Point> points, double cell_size) {
  if (points.empty()) return;

  Eigen::Vector3d lo = points.front();
  Eigen::Vector3d hi = points.front();
  for (const Point& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  lower_ = lo;
  const Eigen::Vector3d extent = hi - lo;

  cell_ = cell_size > 0.0 ? cell_size : auto_cell_size(extent, points.size());
  const double budget =
      std::max(kMinCellBudget, kMaxCellsPerPoint * static_cast<double>(points.size()));
  for (;;) {
    double total = 1.0;
    for (int k = 0; k < 3; ++k) {
      dims_[k] = static_cast<std::int64_t>(std::floor(extent[k] / cell_)) + 1;
      total *= static_cast<double>(dims_[k]);
    }
    if (total <= budget) break;
    cell_ *= 2.0;
  }

  const std::size_t cell_count = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
  std::vector<std::size_t> cell_ids(points.size());
  cell_start_.assign(cell_count + 1, 0);
  for (std::size_t n = 0; n < points.size(); ++n) {
    cell_ids[n] = flat(cell_of(points[n]));
    ++cell_start_[cell_ids[n] + 1];
  }
  for (std::size_t c = 0; c < cell_count; ++c) cell_start_[c + 1] += cell_start_[c];

  points_.resize(points.size());
  original_.resize(points.size());
  std::vector<std::size_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t n = 0; n < points.size(); ++n) {
    const std::size_t slot = cursor[cell_ids[n]]++;
    points_[slot] = points[n];
    original_[slot] = n;
  }
}

PointGrid::CellIndex PointGrid::cell_of(const Point& p) const {
  CellIndex c{};
  for (int k = 0; k < 3; ++k) {
    const double f = std::floor((p[k] - lower_[k]) / cell_);
    c[k] = static_cast<std::int64_t>(
        std::clamp(f, 0.0, static_cast<double>(dims_[k] - 1)));
  }
  return c;
}

PointGrid::Neighbor PointGrid::nearest(const Point& query) const {
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  if (points_.empty()) return best;

  const CellIndex center = cell_of(query);
  const std::int64_t max_ring =
      std::max({dims_[0], dims_[1], dims_[2]});

  auto scan_cell = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
    const std::size_t c = flat({x, y, z});
    for (std::size_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
      const double d = (points_[s] - query).squaredNorm();
      if (d < best.squared_distance ||
          (d == best.squared_distance && original_[s] < best.index)) {
        best = {original_[s], d};
      }
    }
  };

  for (std::int64_t r = 0; r <= max_ring; ++r) {
    const std::int64_t x0 = std::max<std::int64_t>(center[0] - r, 0);
    const std::int64_t x1 = std::min<std::int64_t>(center[0] + r, dims_[0] - 1);
    const std::int64_t y0 = std::max<std::int64_t>(center[1] - r, 0);
    const std::int64_t y1 = std::min<std::int64_t>(center[1] + r, dims_[1] - 1);
    for (std::int64_t x = x0; x <= x1; ++x) {
      for (std::int64_t y = y0; y <= y1; ++y) {
        const bool on_shell = std::abs(x - center[0]) == r || std::abs(y - center[1]) == r;
        if (on_shell) {
          const std::int64_t z0 = std::max<std::int64_t>(center[2] - r, 0);
          const std::int64_t z1 = std::min<std::int64_t>(center[2] + r, dims_[2] - 1);
          for (std::int64_t z = z0; z <= z1; ++z) scan_cell(x, y, z);
        } else {
          if (center[2] - r >= 0) scan_cell(x, y, center[2] - r);
          if (r > 0 && center[2] + r < dims_[2]) scan_cell(x, y, center[2] + r);
        }
      }
    }
    // Cells beyond ring r are at least r whole cells away from the query.
    const double reach = static_cast<double>(r) * cell_;
    if (best.squared_distance <= reach * reach) break;
  }
  return best;
}

bool PointGrid::any_within(const Point& query, double radius) const {
  if (points_.empty() || !(radius > 0.0)) return false;
  const double r2 = radius * radius;
  CellIndex lo{}, hi{};
  for (int k = 0; k < 3; ++k) {
    const double a = std::floor((query[k] - radius - lower_[k]) / cell_);
    const double b = std::floor((query[k] + radius - lower_[k]) / cell_);
    if (b < 0.0 || a > static_cast<double>(dims_[k] - 1)) return false;
    lo[k] = static_cast<std::int64_t>(std::max(a, 0.0));
    hi[k] = static_cast<std::int64_t>(std::min(b, static_cast<double>(dims_[k] - 1)));
  }
  for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
        const std::size_t c = flat({x, y, z});
        for (std::size_t s = cell_start_[c]; s < cell_start_[c + 1]; ++s) {
          if ((points_[s] - query).squaredNorm() < r2) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace pcmm
