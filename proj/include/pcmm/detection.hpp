#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pcmm/clustering.hpp"

namespace pcmm {

/// d_a: |v2_i . v2_j| > cos(theta_min).
bool judge_angle(const Moments& mi, const Moments& mj, double theta_min);

/// d_n: mean of the two normal-direction offsets between the means is below
/// l_min.
bool judge_normal_distance(const Moments& mi, const Moments& mj, double l_min);

/// Distance between the three-sigma ellipsoid boundaries along the line
/// joining the means: |dp| - l_v^i - l_v^j, where l_v = 3 * sum_k
/// sqrt(lambda_k) |v_k . dp_hat|. Zero for coincident means.
double gaussian_gap(const Moments& mi, const Moments& mj);

/// d_g: gaussian_gap < 5 * a_voxel.
bool judge_gaussian_gap(const Moments& mi, const Moments& mj, double a_voxel);

/// d_p: some pair of points is strictly closer than 3 * a_voxel.
bool judge_point_adjacency(std::span<const Point> pi, std::span<const Point> pj,
                           double a_voxel);

/// Undirected merge graph over the flat clusters (indices into that list).
struct MergeGraph {
  std::size_t node_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted
};

/// Builds edges where d = d_a*d_n*d_g*d_p = 1, evaluating the cheap
/// judgments first. With `gap_prefilter` false, d_g is skipped and d_p is
/// evaluated on every angle/normal-passing pair.
MergeGraph build_merge_graph(const std::vector<const Cluster*>& flat_clusters,
                             const PipelineConfig& config, bool gap_prefilter = true);

/// Connected components via union-find. Members ascend within a component;
/// components are ordered by their smallest member.
std::vector<std::vector<std::size_t>> connected_components(const MergeGraph& graph);

struct GaussianPrimitive {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  std::uint64_t point_count = 0;

  bool operator==(const GaussianPrimitive&) const = default;
};

/// A merged component of flat clusters.
struct MergedComponent {
  PointMatrix points;
  Moments moments;
  std::vector<std::size_t> members;  // indices into DetectionResult::flat_clusters
};

struct DetectionResult {
  std::vector<GaussianPrimitive> gaussians;  // non-flat clusters
  std::vector<MergedComponent> planes;       // 6*sqrt(lambda2) <  a_voxel
  std::vector<MergedComponent> surfaces;     // 6*sqrt(lambda2) >= a_voxel
  std::vector<std::size_t> flat_clusters;    // indices into the ClusterSet
  MergeGraph graph;
};

DetectionResult detect(const ClusterSet& clusters, const PipelineConfig& config);

}  // namespace pcmm
