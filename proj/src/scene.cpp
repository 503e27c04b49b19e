#include "pcmm/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "pcmm/error.hpp"
#include "pcmm/spatial_index.hpp"

namespace pcmm {
namespace {

constexpr int kMaxRejections = 1000;

// Lattice offsets inside one cell: the largest count whose pitch is not
// finer than `pitch`; equals the pitch exactly when it divides the cell.
int samples_per_side(double cell, double pitch) {
  return std::max(1, static_cast<int>(std::round(cell / pitch)));
}

template <typename HeightFn>
PointMatrix resample_grid(const Eigen::Vector3d& origin, const Eigen::Matrix3d& basis,
                          const BoundaryGrid& grid, double pitch, HeightFn&& height) {
  PointMatrix out;
  const int m = samples_per_side(grid.cell_size, pitch);
  const double step = grid.cell_size / m;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      if (!grid.is_occupied(i, j)) continue;
      for (int a = 0; a < m; ++a) {
        const double x = grid.x_min(i) + (a + 0.5) * step;
        for (int b = 0; b < m; ++b) {
          const double y = grid.y_min(j) + (b + 0.5) * step;
          if (!grid.keeps(i, j, x, y)) continue;
          out.push_back(basis * Eigen::Vector3d(x, y, height(x, y)) + origin);
        }
      }
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

PointMatrix resample_plane(const PlanePrimitive& plane, double pitch) {
  return resample_grid(plane.origin, plane.basis, plane.grid, pitch,
                       [](double, double) { return 0.0; });
}

PointMatrix resample_surface(const SurfacePrimitive& surface, double pitch) {
  return resample_grid(surface.origin, surface.basis, surface.grid, pitch,
                       [&](double x, double y) {
                         const Eigen::Vector2d uv = surface_parameters(surface.grid, x, y);
                         return eval_height(surface.patch, uv.x(), uv.y());
                       });
}

PointMatrix resample_gaussian(const GaussianPrimitive& gaussian, std::uint64_t seed) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(gaussian.covariance);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::kNumerical, "bad Gaussian covariance");
  const Eigen::Vector3d scale = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix3d transform = solver.eigenvectors() * scale.asDiagonal();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::uint64_t count = std::max<std::uint64_t>(4, gaussian.point_count);
  PointMatrix out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    Eigen::Vector3d xi;
    int tries = 0;
    do {
      xi = {normal(rng), normal(rng), normal(rng)};
      // chi-square(3) mass inside 3 sigma is 97%; this never realistically trips
      if (++tries > kMaxRejections) xi.setZero();
    } while (xi.squaredNorm() > 9.0);
    out.push_back(gaussian.mean + transform * xi);
  }
  return out;
}

PointMatrix resample(const SceneModel& model) {
  const double pitch = model.config.a_voxel;
  PointMatrix out;
  for (std::size_t k = 0; k < model.gaussians.size(); ++k) {
    const PointMatrix pts = resample_gaussian(model.gaussians[k], mix_seed(model.config.rng_seed, k));
    out.insert(out.end(), pts.begin(), pts.end());
  }
  for (const auto& plane : model.planes) {
    const PointMatrix pts = resample_plane(plane, pitch);
    out.insert(out.end(), pts.begin(), pts.end());
  }
  for (const auto& surface : model.surfaces) {
    const PointMatrix pts = resample_surface(surface, pitch);
    out.insert(out.end(), pts.begin(), pts.end());
  }
  return out;
}

double rmse(std::span<const Point> from, std::span<const Point> to) {
  if (from.empty() || to.empty()) throw Error(ErrorKind::kInvalidArgument, "empty input");
  const PointGrid index(to);
  double total = 0.0;
  for (const Point& p : from) total += index.nearest(p).squared_distance;
  return std::sqrt(total / static_cast<double>(from.size()));
}

double parameter_count(const SceneModel& model) {
  double count = 9.0 * static_cast<double>(model.gaussians.size());
  auto grid_cost = [](const BoundaryGrid& g) {
    const double clip_tuples =
        static_cast<double>(std::count(g.boundary.begin(), g.boundary.end(), std::uint8_t{1}));
    return 12.0 + 2.0 * static_cast<double>(g.cell_count()) / 32.0 + 3.0 * clip_tuples;
  };
  for (const auto& p : model.planes) count += grid_cost(p.grid);
  for (const auto& s : model.surfaces) {
    count += grid_cost(s.grid) + static_cast<double>(s.patch.ctrl_z.size());
  }
  return count;
}

EvalReport evaluate(const SceneModel& model, std::span<const Point> original) {
  if (original.empty()) throw Error(ErrorKind::kInvalidArgument, "empty input");
  const PointMatrix generated = resample(model);
  if (generated.empty()) throw Error(ErrorKind::kInvalidArgument, "model generates no points");
  const PointMatrix filtered = voxel_filter(original, model.config.a_voxel);

  EvalReport r;
  r.precision_rmse = rmse(generated, original);
  r.completeness_rmse = rmse(original, generated);
  r.precision_rmse_filtered = rmse(generated, filtered);
  r.completeness_rmse_filtered = rmse(filtered, generated);
  r.generated_points = generated.size();
  r.original_points = original.size();
  r.filtered_points = filtered.size();
  r.parameter_count = parameter_count(model);
  r.compression_ratio = 3.0 * static_cast<double>(original.size()) / r.parameter_count;
  r.gaussians = model.gaussians.size();
  r.planes = model.planes.size();
  r.surfaces = model.surfaces.size();
  return r;
}

}  // namespace pcmm
