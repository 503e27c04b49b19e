#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pcmm/cloud.hpp"
#include "pcmm/config.hpp"

namespace pcmm {

/// Outcome of the termination predicate f = min{1, f_l*f_p*f_c + f_n}.
struct Termination {
  bool inside_three_sigma = false;  // f_l: every point has Mahalanobis^2 < 9
  bool thin = false;                // f_p: 6*sqrt(lambda2) < a_voxel
  bool dense = false;               // f_c: N*a^2 > pi*r_min^2*sqrt(lambda0*lambda1)
  bool small = false;               // f_n: N < N_min

  /// f_l * f_p * f_c; the cluster is a planar-primitive candidate.
  bool flat() const { return inside_three_sigma && thin && dense; }
  /// f; the cluster needs no further splitting.
  bool terminal() const { return flat() || small; }
};

/// Squared Mahalanobis distance with a pseudo-inverse. Directions whose
/// variance is below max(1e-12 * lambda0, 1e-18 m^2) are treated as having
/// that floor variance, so offsets along an (effectively) zero-variance axis
/// count as outside three sigma unless they are at round-off level.
double squared_mahalanobis(const Moments& moments, const Point& p);

Termination termination_check(std::span<const Point> cluster, const Moments& moments,
                              const PipelineConfig& config);

enum class SplitMethod { kKMeans, kEm, kMedian };

struct Bipartition {
  PointMatrix first;
  PointMatrix second;
  SplitMethod method = SplitMethod::kKMeans;
};

/// One-to-two partition: 2-means above config.n_em points, two-component
/// EM-GMM otherwise. Falls back to a median split along v0 if either side
/// would hold fewer than two points. Returns nullopt for N < 4.
std::optional<Bipartition> bipartition(std::span<const Point> cluster,
                                       const PipelineConfig& config);

struct Cluster {
  PointMatrix points;
  Moments moments;
  bool flat = false;
  std::size_t creation_index = 0;  // root is 0; children numbered on creation
};

struct ClusterSet {
  std::vector<Cluster> clusters;  // sorted by creation_index
  std::size_t iterations() const { return clusters.size(); }
  std::size_t point_count() const;
};

/// Repeatedly bipartitions clusters (FIFO) until every cluster passes the
/// termination predicate. Clusters below four points are kept as-is.
ClusterSet hierarchical_cluster(std::span<const Point> cloud, const PipelineConfig& config);

}  // namespace pcmm
