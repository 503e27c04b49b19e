#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcmm/boundary.hpp"
#include "pcmm/bspline.hpp"
#include "pcmm/config.hpp"
#include "pcmm/detection.hpp"

namespace pcmm {

struct PlanePrimitive {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d basis = Eigen::Matrix3d::Identity();
  BoundaryGrid grid;
  std::uint64_t point_count = 0;  // filtered points in the merged component

  bool operator==(const PlanePrimitive&) const = default;
};

struct SurfacePrimitive {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d basis = Eigen::Matrix3d::Identity();
  BoundaryGrid grid;
  SplinePatch patch;
  std::uint64_t point_count = 0;

  bool operator==(const SurfacePrimitive&) const = default;
};

/// Deterministic bookkeeping stored with a model. Wall-clock timings are kept
/// out so that identical runs serialize identically.
struct ModelStats {
  std::uint64_t input_points = 0;
  std::uint64_t filtered_points = 0;

  bool operator==(const ModelStats&) const = default;
};

struct SceneModel {
  std::vector<GaussianPrimitive> gaussians;
  std::vector<PlanePrimitive> planes;
  std::vector<SurfacePrimitive> surfaces;
  PipelineConfig config;
  ModelStats stats;

  std::size_t primitive_count() const { return gaussians.size() + planes.size() + surfaces.size(); }

  bool operator==(const SceneModel&) const = default;
};

/// Lattice points of pitch ~a_voxel in every occupied cell, minus clipped
/// corner regions, at z = 0 of the plane's frame.
PointMatrix resample_plane(const PlanePrimitive& plane, double pitch);

/// Same lattice as planes with heights from the spline.
PointMatrix resample_surface(const SurfacePrimitive& surface, double pitch);

/// max(4, point_count) draws from N(mean, covariance) inside the three-sigma
/// ellipsoid (rejection sampling).
PointMatrix resample_gaussian(const GaussianPrimitive& gaussian, std::uint64_t seed);

/// All primitives; deterministic given model.config.rng_seed.
PointMatrix resample(const SceneModel& model);

/// sqrt(mean over `from` of the squared distance to the nearest point of `to`).
double rmse(std::span<const Point> from, std::span<const Point> to);

struct EvalReport {
  double precision_rmse = 0.0;     // generated -> original
  double completeness_rmse = 0.0;  // original -> generated
  double precision_rmse_filtered = 0.0;
  double completeness_rmse_filtered = 0.0;
  std::uint64_t generated_points = 0;
  std::uint64_t original_points = 0;
  std::uint64_t filtered_points = 0;
  double parameter_count = 0.0;
  double compression_ratio = 0.0;  // 3 * original / parameter_count
  std::uint64_t gaussians = 0;
  std::uint64_t planes = 0;
  std::uint64_t surfaces = 0;
};

/// Scalar count of the model parameters: mean 3 + covariance 6 per Gaussian;
/// pose 12, occupancy and boundary bitmaps at 1/32 per cell each, and 3 per
/// clip tuple for planes and surfaces; plus one per control height.
double parameter_count(const SceneModel& model);

EvalReport evaluate(const SceneModel& model, std::span<const Point> original);

}  // namespace pcmm
