#include "pcmm/cloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "pcmm/error.hpp"

namespace pcmm {
namespace {

using VoxelKey = std::array<std::int64_t, 3>;

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    auto h = static_cast<std::uint64_t>(k[0]) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k[1]) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k[2]) + 0x94D049BB133111EBULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

struct VoxelAccumulator {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  std::size_t count = 0;
};

// Index of the component with the largest magnitude; first one wins ties.
int dominant_component(const Eigen::Vector3d& v) {
  int best = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(v[k]) > std::abs(v[best])) best = k;
  }
  return best;
}

void make_dominant_positive(Eigen::Vector3d& v) {
  if (v[dominant_component(v)] < 0.0) v = -v;
}

}  // namespace

Eigen::Vector3d Moments::three_sigma_axis(int j) const {
  return 3.0 * std::sqrt(eigenvalues[j]) * eigenvectors.col(j);
}

void require_finite(std::span<const Point> cloud) {
  for (std::size_t n = 0; n < cloud.size(); ++n) {
    if (!cloud[n].allFinite()) {
      throw Error(ErrorKind::kInput,
                  "non-finite coordinate in point " + std::to_string(n));
    }
  }
}

PointMatrix voxel_filter(std::span<const Point> cloud, double a_voxel) {
  if (cloud.empty()) throw Error(ErrorKind::kInvalidArgument, "empty input");
  if (!(a_voxel > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "voxel size must be positive");
  }

  std::unordered_map<VoxelKey, VoxelAccumulator, VoxelKeyHash> voxels;
  voxels.reserve(cloud.size() / 4 + 1);
  for (const Point& p : cloud) {
    const VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / a_voxel)),
                       static_cast<std::int64_t>(std::floor(p.y() / a_voxel)),
                       static_cast<std::int64_t>(std::floor(p.z() / a_voxel))};
    auto& acc = voxels[key];
    acc.sum += p;
    ++acc.count;
  }

  std::vector<std::pair<VoxelKey, VoxelAccumulator>> ordered(voxels.begin(),
                                                             voxels.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  PointMatrix out;
  out.reserve(ordered.size());
  for (const auto& [key, acc] : ordered) {
    out.push_back(acc.sum / static_cast<double>(acc.count));
  }
  return out;
}

Moments compute_moments(std::span<const Point> cluster) {
  if (cluster.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "cluster too small");
  }
  const auto n = static_cast<double>(cluster.size());

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const Point& p : cluster) mean += p;
  mean /= n;

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const Point& p : cluster) {
    const Eigen::Vector3d d = p - mean;
    scatter.noalias() += d * d.transpose();
  }
  Eigen::Matrix3d covariance = scatter / (n - 1.0);
  // exact symmetry so that serialized covariances round-trip as written
  covariance = (0.5 * (covariance + covariance.transpose())).eval();
  return moments_from_covariance(mean, covariance);
}

Moments moments_from_covariance(const Eigen::Vector3d& mean,
                                const Eigen::Matrix3d& covariance) {
  if (!mean.allFinite() || !covariance.allFinite()) {
    throw Error(ErrorKind::kNumerical, "non-finite moments");
  }
  Moments m;
  m.mean = mean;
  m.covariance = covariance;

  // Ascending order from Eigen; reversed into v0 (largest) .. v2 (smallest).
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "eigen-decomposition failed");
  }
  const Eigen::Vector3d& values = solver.eigenvalues();
  const Eigen::Matrix3d& vectors = solver.eigenvectors();
  for (int j = 0; j < 3; ++j) m.eigenvalues[j] = std::max(0.0, values[2 - j]);

  // Gram-Schmidt keeps the basis orthonormal when eigenvalues repeat.
  Eigen::Vector3d v0 = vectors.col(2).normalized();
  Eigen::Vector3d v2 = vectors.col(0);
  v2 -= v2.dot(v0) * v0;
  v2.normalize();
  make_dominant_positive(v0);
  make_dominant_positive(v2);
  m.eigenvectors.col(0) = v0;
  m.eigenvectors.col(1) = v2.cross(v0);
  m.eigenvectors.col(2) = v2;
  return m;
}

}  // namespace pcmm
