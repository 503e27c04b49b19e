#pragma once

#include <cstddef>
#include <span>

#include "pcmm/scene.hpp"

namespace pcmm {

/// Wall-clock milliseconds per stage plus intermediate counts.
struct RunStats {
  double filter_ms = 0.0;
  double clustering_ms = 0.0;
  double detection_ms = 0.0;
  double plane_fit_ms = 0.0;
  double surface_fit_ms = 0.0;
  double total_ms = 0.0;

  std::size_t input_points = 0;
  std::size_t filtered_points = 0;
  std::size_t cluster_count = 0;
  std::size_t flat_cluster_count = 0;
  std::size_t merge_edges = 0;
  std::size_t demoted_components = 0;  // components stored as Gaussians
};

struct PipelineResult {
  SceneModel model;
  RunStats stats;
};

/// Voxel filter, hierarchical clustering, merge detection, boundary and
/// surface fitting. Merged components with fewer than n_min points, collinear
/// support, or a minor extent 6*sqrt(lambda1) below the boundary cell size
/// are stored as Gaussians. Errors are rethrown with the failing stage prefixed to the
/// message and their kind preserved.
PipelineResult run_pipeline(std::span<const Point> cloud, const PipelineConfig& config);

/// Fits one merged component as a bounded plane.
PlanePrimitive fit_plane(std::span<const Point> points, const PipelineConfig& config);

/// Fits one merged component as a bounded B-spline height field.
SurfacePrimitive fit_surface(std::span<const Point> points, const PipelineConfig& config);

}  // namespace pcmm
