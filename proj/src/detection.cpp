#include "pcmm/detection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pcmm/spatial_index.hpp"

namespace pcmm {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) x = std::exchange(parent_[x], root);
    return root;
  }

  // The smaller index becomes the root, which keeps roots canonical.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

double ellipsoid_extent(const Moments& m, const Eigen::Vector3d& direction) {
  const Eigen::Vector3d local = m.eigenvectors.transpose() * direction;
  return 3.0 * (m.eigenvalues.cwiseSqrt().array() * local.cwiseAbs().array()).sum();
}

bool adjacent(std::span<const Point> queries, const PointGrid& other, double radius) {
  return std::any_of(queries.begin(), queries.end(),
                     [&](const Point& q) { return other.any_within(q, radius); });
}

}  // namespace

bool judge_angle(const Moments& mi, const Moments& mj, double theta_min) {
  return std::abs(mi.normal().dot(mj.normal())) > std::cos(theta_min);
}

bool judge_normal_distance(const Moments& mi, const Moments& mj, double l_min) {
  const Eigen::Vector3d delta = mi.mean - mj.mean;
  const double li = std::abs(mi.normal().dot(delta));
  const double lj = std::abs(mj.normal().dot(delta));
  return 0.5 * (li + lj) < l_min;
}

double gaussian_gap(const Moments& mi, const Moments& mj) {
  const Eigen::Vector3d delta = mi.mean - mj.mean;
  const double length = delta.norm();
  if (length == 0.0) return 0.0;
  const Eigen::Vector3d direction = delta / length;
  return length - ellipsoid_extent(mi, direction) - ellipsoid_extent(mj, direction);
}

bool judge_gaussian_gap(const Moments& mi, const Moments& mj, double a_voxel) {
  return gaussian_gap(mi, mj) < 5.0 * a_voxel;
}

bool judge_point_adjacency(std::span<const Point> pi, std::span<const Point> pj,
                           double a_voxel) {
  const double radius = 3.0 * a_voxel;
  if (pi.size() < pj.size()) return adjacent(pi, PointGrid(pj, radius), radius);
  return adjacent(pj, PointGrid(pi, radius), radius);
}

MergeGraph build_merge_graph(const std::vector<const Cluster*>& flat_clusters,
                             const PipelineConfig& config, bool gap_prefilter) {
  MergeGraph graph;
  graph.node_count = flat_clusters.size();
  const double radius = 3.0 * config.a_voxel;

  std::vector<PointGrid> grids;
  grids.reserve(flat_clusters.size());
  for (const Cluster* c : flat_clusters) grids.emplace_back(c->points, radius);

  for (std::size_t i = 0; i < flat_clusters.size(); ++i) {
    const Cluster& ci = *flat_clusters[i];
    for (std::size_t j = i + 1; j < flat_clusters.size(); ++j) {
      const Cluster& cj = *flat_clusters[j];
      if (!judge_angle(ci.moments, cj.moments, config.theta_min)) continue;
      if (!judge_normal_distance(ci.moments, cj.moments, config.l_min)) continue;
      if (gap_prefilter && !judge_gaussian_gap(ci.moments, cj.moments, config.a_voxel)) continue;
      const bool touching = ci.points.size() <= cj.points.size()
                                ? adjacent(ci.points, grids[j], radius)
                                : adjacent(cj.points, grids[i], radius);
      if (touching) graph.edges.emplace_back(i, j);
    }
  }
  return graph;
}

std::vector<std::vector<std::size_t>> connected_components(const MergeGraph& graph) {
  DisjointSets sets(graph.node_count);
  for (const auto& [i, j] : graph.edges) sets.unite(i, j);

  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t n = 0; n < graph.node_count; ++n) by_root[sets.find(n)].push_back(n);

  std::vector<std::vector<std::size_t>> out;
  out.reserve(by_root.size());
  for (auto& [root, members] : by_root) out.push_back(std::move(members));
  return out;
}

DetectionResult detect(const ClusterSet& clusters, const PipelineConfig& config) {
  DetectionResult result;
  std::vector<const Cluster*> flat;
  for (std::size_t k = 0; k < clusters.clusters.size(); ++k) {
    const Cluster& c = clusters.clusters[k];
    if (c.flat) {
      flat.push_back(&c);
      result.flat_clusters.push_back(k);
    } else {
      result.gaussians.push_back(
          {c.moments.mean, c.moments.covariance, static_cast<std::uint64_t>(c.points.size())});
    }
  }

  result.graph = build_merge_graph(flat, config);
  for (auto& members : connected_components(result.graph)) {
    MergedComponent component;
    for (std::size_t m : members) {
      const auto& pts = flat[m]->points;
      component.points.insert(component.points.end(), pts.begin(), pts.end());
    }
    component.members = std::move(members);
    component.moments = compute_moments(component.points);
    const bool is_plane = 6.0 * std::sqrt(component.moments.eigenvalues[2]) < config.a_voxel;
    (is_plane ? result.planes : result.surfaces).push_back(std::move(component));
  }
  return result;
}

}  // namespace pcmm
