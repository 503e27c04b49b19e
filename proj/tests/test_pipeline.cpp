#include <algorithm>

#include <gtest/gtest.h>

#include "pcmm/error.hpp"
#include "pcmm/model_io.hpp"
#include "pcmm/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace pcmm {
namespace {

std::uint64_t modeled_points(const SceneModel& m) {
  std::uint64_t total = 0;
  for (const auto& g : m.gaussians) total += g.point_count;
  for (const auto& p : m.planes) total += p.point_count;
  for (const auto& s : m.surfaces) total += s.point_count;
  return total;
}

TEST(Pipeline, ExactTiltedPlaneGivesOnePlane) {
  for (const Eigen::Vector3d& n : {Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(0.3, 0.2, 1),
                                   Eigen::Vector3d(1, 2, 3)}) {
    const PointMatrix cloud = testing::tilted_plane(n);
    const PipelineResult r = run_pipeline(cloud, PipelineConfig{});
    EXPECT_EQ(r.model.planes.size(), 1u) << n.transpose();
    EXPECT_TRUE(r.model.gaussians.empty()) << n.transpose();
    EXPECT_TRUE(r.model.surfaces.empty()) << n.transpose();
    ASSERT_EQ(r.model.planes.size(), 1u);
    const PlanePrimitive& p = r.model.planes[0];
    EXPECT_GT(std::abs(p.basis.col(2).dot(n.normalized())), 1.0 - 1e-9);
    EXPECT_EQ(p.point_count, r.stats.filtered_points);
  }
}

TEST(Pipeline, MixedSceneHasAllTypesAndConservesPoints) {
  const PointMatrix cloud = testing::mixed_scene();
  const PipelineResult r = run_pipeline(cloud, PipelineConfig{});
  EXPECT_GE(r.model.gaussians.size(), 1u);
  EXPECT_GE(r.model.planes.size(), 1u);
  EXPECT_GE(r.model.surfaces.size(), 1u);
  EXPECT_EQ(modeled_points(r.model), r.stats.filtered_points);
  EXPECT_EQ(r.model.stats.input_points, cloud.size());
  EXPECT_EQ(r.model.stats.filtered_points, voxel_filter(cloud, 0.03).size());
}

TEST(Pipeline, DeterministicModelBytes) {
  const PointMatrix cloud = testing::mixed_scene();
  PipelineConfig cfg;
  cfg.rng_seed = 5;
  const std::string a = serialize_model(run_pipeline(cloud, cfg).model);
  const std::string b = serialize_model(run_pipeline(cloud, cfg).model);
  EXPECT_EQ(a, b);
}

TEST(Pipeline, StageErrorsAreTagged) {
  PipelineConfig bad;
  bad.r_min = 5;
  try {
    run_pipeline(testing::tilted_plane(Eigen::Vector3d(1, 1, 1)), bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
    EXPECT_EQ(std::string(e.what()).rfind("config: ", 0), 0u) << e.what();
  }

  PointMatrix cloud = testing::tilted_plane(Eigen::Vector3d(1, 1, 1));
  cloud[10].y() = std::numeric_limits<double>::quiet_NaN();
  try {
    run_pipeline(cloud, PipelineConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("filter: ", 0), 0u) << e.what();
  }

  try {
    run_pipeline(PointMatrix{}, PipelineConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("filter: ", 0), 0u) << e.what();
  }

  try {
    run_pipeline(PointMatrix{{0.01, 0.01, 0.01}}, PipelineConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("clustering: ", 0), 0u) << e.what();
  }
}

TEST(Pipeline, StatsAreConsistent) {
  const PointMatrix cloud = testing::mixed_scene();
  const PipelineResult r = run_pipeline(cloud, PipelineConfig{});
  EXPECT_EQ(r.stats.input_points, cloud.size());
  EXPECT_LE(r.stats.flat_cluster_count, r.stats.cluster_count);
  EXPECT_GE(r.stats.total_ms, r.stats.clustering_ms);
  EXPECT_GE(r.model.gaussians.size(), r.stats.demoted_components);
}

TEST(FitPlane, RecoversSquareFootprint) {
  const PointMatrix pts = testing::tilted_plane(Eigen::Vector3d(0, 0, 1), 0.9, 0.01, Point(0, 0, 0));
  const PlanePrimitive p = fit_plane(pts, PipelineConfig{});
  EXPECT_EQ(p.point_count, pts.size());
  EXPECT_EQ(p.grid.nx, 6);
  EXPECT_EQ(p.grid.ny, 6);
  EXPECT_TRUE(p.grid.cell_means.empty());
  const PointMatrix back = resample_plane(p, 0.03);
  EXPECT_LE(oracle::rmse(back, pts), 0.03);
  EXPECT_LE(oracle::rmse(pts, back), 0.03);
}

TEST(FitSurface, HalfCylinderBeatsBestPlane) {
  const PointMatrix pts = testing::half_cylinder(1.0, 1.0, 0.02, 0.0, 2);
  const SurfacePrimitive s = fit_surface(pts, PipelineConfig{});
  const PointMatrix back = resample_surface(s, 0.03);
  const double ours = oracle::rmse(back, pts);
  EXPECT_LT(ours, oracle::best_plane_rms(pts));
}

}  // namespace
}  // namespace pcmm
