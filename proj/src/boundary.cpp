#include "pcmm/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pcmm/error.hpp"

namespace pcmm {
namespace {

constexpr double kCollinearTolerance = 1e-12;

bool corner_is_max_x(Corner c) { return c == Corner::kMaxMin || c == Corner::kMaxMax; }
bool corner_is_max_y(Corner c) { return c == Corner::kMinMax || c == Corner::kMaxMax; }

int cell_coordinate(double value, double origin, double cell, int count) {
  const double f = std::floor((value - origin) / cell);
  return static_cast<int>(std::clamp(f, 0.0, static_cast<double>(count - 1)));
}

}  // namespace

LocalFrame to_local_frame(std::span<const Point> cluster) {
  if (cluster.size() < 3) {
    throw Error(ErrorKind::kInvalidArgument, "degenerate plane support");
  }
  const Moments m = compute_moments(cluster);
  if (!(m.eigenvalues[1] > kCollinearTolerance * m.eigenvalues[0])) {
    throw Error(ErrorKind::kInvalidArgument, "degenerate plane support");
  }
  LocalFrame frame;
  frame.origin = m.mean;
  frame.basis = m.eigenvectors;
  frame.eigenvalues = m.eigenvalues;
  frame.local_points.reserve(cluster.size());
  for (const Point& p : cluster) frame.local_points.push_back(frame.to_local(p));
  return frame;
}

Eigen::Vector2d BoundaryGrid::corner_point(int i, int j, Corner c) const {
  return {x_min(i) + (corner_is_max_x(c) ? cell_size : 0.0),
          y_min(j) + (corner_is_max_y(c) ? cell_size : 0.0)};
}

std::pair<int, int> BoundaryGrid::cell_of(double x, double y) const {
  return {cell_coordinate(x, origin.x(), cell_size, nx),
          cell_coordinate(y, origin.y(), cell_size, ny)};
}

bool BoundaryGrid::keeps(int i, int j, double x, double y) const {
  if (!is_boundary(i, j)) return true;
  const ClipLines& c = clips[index(i, j)];
  const Eigen::Vector2d corner = corner_point(i, j, c.corner);
  const double dx = std::abs(x - corner.x());
  const double dy = std::abs(y - corner.y());
  return dx >= c.lx && dy >= c.ly && dx + dy >= c.lxy;
}

BoundaryGrid BoundaryGrid::stripped() const {
  BoundaryGrid out = *this;
  out.cell_means.clear();
  out.cell_counts.clear();
  return out;
}

BoundaryGrid build_boundary(const LocalFrame& frame, double cell_size) {
  if (!(cell_size > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "boundary cell size must be positive");
  }
  if (frame.local_points.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "empty plane support");
  }

  Eigen::Vector2d lo = frame.local_points.front().head<2>();
  Eigen::Vector2d hi = lo;
  for (const Point& p : frame.local_points) {
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  }

  BoundaryGrid grid;
  grid.cell_size = cell_size;
  grid.origin = lo;
  grid.nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell_size)));
  grid.ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell_size)));
  const std::size_t cells = static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);
  grid.occupied.assign(cells, 0);
  grid.boundary.assign(cells, 0);
  grid.clips.assign(cells, ClipLines{});
  grid.cell_means.assign(cells, Eigen::Vector3d::Zero());
  grid.cell_counts.assign(cells, 0);

  for (const Point& p : frame.local_points) {
    const auto [i, j] = grid.cell_of(p.x(), p.y());
    const std::size_t k = grid.index(i, j);
    grid.cell_means[k] += p;
    ++grid.cell_counts[k];
  }
  for (std::size_t k = 0; k < cells; ++k) {
    if (grid.cell_counts[k] == 0) continue;
    grid.occupied[k] = 1;
    grid.cell_means[k] /= static_cast<double>(grid.cell_counts[k]);
  }

  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      if (!grid.is_occupied(i, j)) continue;
      const bool on_edge = i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1;
      const bool open_neighbor = !grid.is_occupied(i, j + 1) || !grid.is_occupied(i + 1, j) ||
                                 !grid.is_occupied(i, j - 1) || !grid.is_occupied(i - 1, j);
      grid.boundary[grid.index(i, j)] = on_edge || open_neighbor ? 1 : 0;
    }
  }
  return grid;
}

BoundaryGrid fit_clip_lines(BoundaryGrid grid, const LocalFrame& frame, double a_voxel) {
  const std::size_t cells = grid.cell_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Choose corners first; the minima below depend on them.
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      if (!grid.is_boundary(i, j)) continue;
      const std::size_t k = grid.index(i, j);
      const Eigen::Vector2d mean = grid.cell_means[k].head<2>();
      Corner best = Corner::kMinMin;
      double best_distance = -1.0;
      for (auto c : {Corner::kMinMin, Corner::kMinMax, Corner::kMaxMin, Corner::kMaxMax}) {
        const double d = (grid.corner_point(i, j, c) - mean).norm();
        if (d > best_distance) {
          best_distance = d;
          best = c;
        }
      }
      grid.clips[k] = ClipLines{best, 0.0, 0.0, 0.0};
    }
  }

  std::vector<double> min_dx(cells, kInf), min_dy(cells, kInf), min_l1(cells, kInf);
  for (const Point& p : frame.local_points) {
    const auto [i, j] = grid.cell_of(p.x(), p.y());
    if (!grid.is_boundary(i, j)) continue;
    const std::size_t k = grid.index(i, j);
    const Eigen::Vector2d corner = grid.corner_point(i, j, grid.clips[k].corner);
    const double dx = std::abs(p.x() - corner.x());
    const double dy = std::abs(p.y() - corner.y());
    min_dx[k] = std::min(min_dx[k], dx);
    min_dy[k] = std::min(min_dy[k], dy);
    min_l1[k] = std::min(min_l1[k], dx + dy);
  }

  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      if (!grid.is_boundary(i, j)) continue;
      const std::size_t k = grid.index(i, j);
      ClipLines& clip = grid.clips[k];
      const int di = corner_is_max_x(clip.corner) ? 1 : -1;
      const int dj = corner_is_max_y(clip.corner) ? 1 : -1;
      const bool surrounded = grid.is_occupied(i + di, j) && grid.is_occupied(i, j + dj) &&
                              grid.is_occupied(i + di, j + dj);
      if (surrounded || grid.cell_counts[k] == 0) continue;
      clip.lx = std::max(0.0, min_dx[k] - 0.5 * a_voxel);
      clip.ly = std::max(0.0, min_dy[k] - 0.5 * a_voxel);
      clip.lxy = std::max(0.0, min_l1[k] - 0.5 * std::numbers::sqrt2 * a_voxel);
    }
  }
  return grid;
}

}  // namespace pcmm
