#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace pcmm {

using Point = Eigen::Vector3d;

/// Ordered list of 3D points in meters.
using PointMatrix = std::vector<Point>;

/// First and second moments of a point cluster together with its PCA frame.
struct Moments {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  /// Descending: eigenvalues(0) >= eigenvalues(1) >= eigenvalues(2) >= 0.
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();
  /// Columns v0, v1, v2; right-handed orthonormal basis (v0 x v1 = v2).
  Eigen::Matrix3d eigenvectors = Eigen::Matrix3d::Identity();

  const Eigen::Matrix3d& basis() const { return eigenvectors; }
  Eigen::Vector3d normal() const { return eigenvectors.col(2); }

  /// Semi-axis j of the three-sigma ellipsoid, 3*sqrt(lambda_j)*v_j.
  Eigen::Vector3d three_sigma_axis(int j) const;
};

/// Throws if any coordinate is NaN or infinite.
void require_finite(std::span<const Point> cloud);

/// Voxel-grid downsampling on the lattice anchored at the origin. Each
/// occupied voxel of edge `a_voxel` yields the centroid of its points; output
/// is ordered lexicographically by integer voxel index.
PointMatrix voxel_filter(std::span<const Point> cloud, double a_voxel);

/// Mean, (N-1)-normalized covariance, and sorted eigen-decomposition.
/// Requires at least two points.
Moments compute_moments(std::span<const Point> cluster);

/// Eigen-decomposition of a given symmetric covariance with the same ordering
/// and sign conventions as compute_moments.
Moments moments_from_covariance(const Eigen::Vector3d& mean,
                                const Eigen::Matrix3d& covariance);

}  // namespace pcmm
