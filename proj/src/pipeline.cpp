#include "pcmm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include "pcmm/error.hpp"

namespace pcmm {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
auto stage(const char* name, double& elapsed_ms, F&& body) {
  const auto start = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      elapsed_ms += ms_since(start);
    } else {
      auto out = body();
      elapsed_ms += ms_since(start);
      return out;
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  }
}

// A component is kept as a plane or surface only if it is a proper 2D
// support: at least N_min points, not collinear, and at least one boundary
// cell wide across its minor in-plane axis. Anything else is stored as a
// Gaussian.
bool unsupported(const MergedComponent& c, double cell_size, const PipelineConfig& config) {
  const auto& ev = c.moments.eigenvalues;
  if (c.points.size() < std::max<std::size_t>(3, config.n_min)) return true;
  if (!(ev[1] > 1e-12 * ev[0])) return true;
  return 6.0 * std::sqrt(ev[1]) < cell_size;
}

GaussianPrimitive as_gaussian(const MergedComponent& c) {
  return {c.moments.mean, c.moments.covariance, static_cast<std::uint64_t>(c.points.size())};
}

}  // namespace

PlanePrimitive fit_plane(std::span<const Point> points, const PipelineConfig& config) {
  const LocalFrame frame = to_local_frame(points);
  BoundaryGrid grid = build_boundary(frame, config.plane_boundary_voxel);
  grid = fit_clip_lines(std::move(grid), frame, config.a_voxel);
  return {frame.origin, frame.basis, grid.stripped(), points.size()};
}

SurfacePrimitive fit_surface(std::span<const Point> points, const PipelineConfig& config) {
  const LocalFrame frame = to_local_frame(points);
  BoundaryGrid grid = build_boundary(frame, config.surface_boundary_voxel);
  grid = fit_clip_lines(std::move(grid), frame, config.a_voxel);
  SplinePatch patch = fit_heights(init_control_points(grid), grid);
  return {frame.origin, frame.basis, grid.stripped(), std::move(patch), points.size()};
}

PipelineResult run_pipeline(std::span<const Point> cloud, const PipelineConfig& config) {
  const auto start = Clock::now();
  PipelineResult result;
  RunStats& stats = result.stats;
  SceneModel& model = result.model;

  double ignored = 0.0;
  stage("config", ignored, [&] { config.validate(); });
  model.config = config;
  stats.input_points = cloud.size();

  const PointMatrix filtered = stage("filter", stats.filter_ms, [&] {
    require_finite(cloud);
    return voxel_filter(cloud, config.a_voxel);
  });
  stats.filtered_points = filtered.size();

  const ClusterSet clusters = stage("clustering", stats.clustering_ms,
                                    [&] { return hierarchical_cluster(filtered, config); });
  stats.cluster_count = clusters.clusters.size();

  DetectionResult detection =
      stage("detection", stats.detection_ms, [&] { return detect(clusters, config); });
  stats.flat_cluster_count = detection.flat_clusters.size();
  stats.merge_edges = detection.graph.edges.size();
  model.gaussians = std::move(detection.gaussians);

  stage("plane fit", stats.plane_fit_ms, [&] {
    for (const auto& c : detection.planes) {
      if (unsupported(c, config.plane_boundary_voxel, config)) {
        model.gaussians.push_back(as_gaussian(c));
        ++stats.demoted_components;
        continue;
      }
      model.planes.push_back(fit_plane(c.points, config));
    }
  });
  stage("surface fit", stats.surface_fit_ms, [&] {
    for (const auto& c : detection.surfaces) {
      if (unsupported(c, config.surface_boundary_voxel, config)) {
        model.gaussians.push_back(as_gaussian(c));
        ++stats.demoted_components;
        continue;
      }
      model.surfaces.push_back(fit_surface(c.points, config));
    }
  });

  model.stats.input_points = stats.input_points;
  model.stats.filtered_points = stats.filtered_points;
  stats.total_ms = ms_since(start);
  return result;
}

}  // namespace pcmm
