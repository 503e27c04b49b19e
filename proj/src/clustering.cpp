#include "pcmm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>

#include <Eigen/Cholesky>

#include "pcmm/error.hpp"

namespace pcmm {
namespace {

constexpr int kKMeansMaxIterations = 25;
constexpr int kEmMaxIterations = 50;
constexpr double kEmTolerance = 1e-4;
constexpr double kEmRegularization = 1e-8;
constexpr double kRelativeVarianceFloor = 1e-12;
constexpr double kAbsoluteVarianceFloor = 1e-18;

using Labels = std::vector<unsigned char>;

Bipartition split_by_labels(std::span<const Point> cluster, const Labels& labels,
                            SplitMethod method) {
  Bipartition out;
  out.method = method;
  for (std::size_t n = 0; n < cluster.size(); ++n) {
    (labels[n] == 0 ? out.first : out.second).push_back(cluster[n]);
  }
  return out;
}

std::size_t count_label(const Labels& labels, unsigned char label) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

// Lloyd iterations seeded at mean +- sqrt(lambda0) v0.
Labels two_means(std::span<const Point> cluster, const Moments& m) {
  const Eigen::Vector3d offset = std::sqrt(m.eigenvalues[0]) * m.eigenvectors.col(0);
  std::array<Eigen::Vector3d, 2> centers{m.mean + offset, m.mean - offset};
  Labels labels(cluster.size(), 0);

  auto assign = [&]() {
    bool changed = false;
    for (std::size_t n = 0; n < cluster.size(); ++n) {
      const double d0 = (cluster[n] - centers[0]).squaredNorm();
      const double d1 = (cluster[n] - centers[1]).squaredNorm();
      const unsigned char label = d1 < d0 ? 1 : 0;
      changed |= label != labels[n];
      labels[n] = label;
    }
    return changed;
  };

  assign();
  for (int iter = 0; iter < kKMeansMaxIterations; ++iter) {
    std::array<Eigen::Vector3d, 2> sums{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
    std::array<std::size_t, 2> counts{0, 0};
    for (std::size_t n = 0; n < cluster.size(); ++n) {
      sums[labels[n]] += cluster[n];
      ++counts[labels[n]];
    }
    if (counts[0] == 0 || counts[1] == 0) break;
    for (int k = 0; k < 2; ++k) centers[k] = sums[k] / static_cast<double>(counts[k]);
    if (!assign()) break;
  }
  return labels;
}

struct Component {
  double weight = 0.5;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

// Two-component full-covariance EM initialized from a 2-means partition;
// returns the hard (maximum responsibility) assignment.
Labels two_component_em(std::span<const Point> cluster, const Moments& m) {
  const std::size_t n_points = cluster.size();
  Labels labels = two_means(cluster, m);
  if (count_label(labels, 0) == 0 || count_label(labels, 1) == 0) return labels;

  std::array<Component, 2> comps;
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_points), 2);
  for (std::size_t n = 0; n < n_points; ++n) resp(static_cast<Eigen::Index>(n), labels[n]) = 1.0;

  auto m_step = [&]() -> bool {
    for (int k = 0; k < 2; ++k) {
      const double nk = resp.col(k).sum();
      if (!(nk > 1e-12)) return false;
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (std::size_t n = 0; n < n_points; ++n) {
        mean += resp(static_cast<Eigen::Index>(n), k) * cluster[n];
      }
      mean /= nk;
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (std::size_t n = 0; n < n_points; ++n) {
        const Eigen::Vector3d d = cluster[n] - mean;
        cov.noalias() += resp(static_cast<Eigen::Index>(n), k) * d * d.transpose();
      }
      cov /= nk;
      cov.diagonal().array() += kEmRegularization;
      comps[static_cast<std::size_t>(k)] = {nk / static_cast<double>(n_points), mean, cov};
    }
    return true;
  };

  // Fills resp with posterior probabilities; returns the log-likelihood.
  auto e_step = [&]() -> double {
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    std::array<Eigen::LLT<Eigen::Matrix3d>, 2> chol{Eigen::LLT<Eigen::Matrix3d>(comps[0].covariance),
                                                    Eigen::LLT<Eigen::Matrix3d>(comps[1].covariance)};
    std::array<double, 2> log_norm{};
    for (std::size_t k = 0; k < 2; ++k) {
      const double log_det = 2.0 * chol[k].matrixL().toDenseMatrix().diagonal().array().log().sum();
      log_norm[k] = std::log(comps[k].weight) - 0.5 * (3.0 * log_2pi + log_det);
    }
    double log_likelihood = 0.0;
    for (std::size_t n = 0; n < n_points; ++n) {
      std::array<double, 2> lp{};
      for (std::size_t k = 0; k < 2; ++k) {
        const Eigen::Vector3d d = cluster[n] - comps[k].mean;
        const Eigen::Vector3d w = chol[k].matrixL().solve(d);
        lp[k] = log_norm[k] - 0.5 * w.squaredNorm();
      }
      const double top = std::max(lp[0], lp[1]);
      const double lse = top + std::log(std::exp(lp[0] - top) + std::exp(lp[1] - top));
      log_likelihood += lse;
      const auto row = static_cast<Eigen::Index>(n);
      resp(row, 0) = std::exp(lp[0] - lse);
      resp(row, 1) = std::exp(lp[1] - lse);
    }
    return log_likelihood;
  };

  if (!m_step()) return labels;
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < kEmMaxIterations; ++iter) {
    const double ll = e_step();
    if (!std::isfinite(ll)) return labels;
    const bool converged = iter > 0 && ll - previous < kEmTolerance;
    previous = ll;
    if (converged || !m_step()) break;
  }

  for (std::size_t n = 0; n < n_points; ++n) {
    const auto row = static_cast<Eigen::Index>(n);
    labels[n] = resp(row, 1) > resp(row, 0) ? 1 : 0;
  }
  return labels;
}

Labels median_split(std::span<const Point> cluster, const Moments& m) {
  std::vector<std::size_t> order(cluster.size());
  std::iota(order.begin(), order.end(), 0);
  const Eigen::Vector3d axis = m.eigenvectors.col(0);
  std::vector<double> proj(cluster.size());
  for (std::size_t n = 0; n < cluster.size(); ++n) proj[n] = axis.dot(cluster[n] - m.mean);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });
  Labels labels(cluster.size(), 0);
  for (std::size_t r = cluster.size() / 2; r < cluster.size(); ++r) labels[order[r]] = 1;
  return labels;
}

}  // namespace

double squared_mahalanobis(const Moments& m, const Point& p) {
  const double floor =
      std::max(kRelativeVarianceFloor * m.eigenvalues[0], kAbsoluteVarianceFloor);
  const Eigen::Vector3d local = m.eigenvectors.transpose() * (p - m.mean);
  double d2 = 0.0;
  for (int j = 0; j < 3; ++j) d2 += local[j] * local[j] / std::max(m.eigenvalues[j], floor);
  return d2;
}

Termination termination_check(std::span<const Point> cluster, const Moments& m,
                              const PipelineConfig& config) {
  Termination t;
  const auto n = static_cast<double>(cluster.size());
  t.inside_three_sigma = std::all_of(cluster.begin(), cluster.end(), [&](const Point& p) {
    return squared_mahalanobis(m, p) < 9.0;
  });
  t.thin = 6.0 * std::sqrt(m.eigenvalues[2]) < config.a_voxel;
  t.dense = n * config.a_voxel * config.a_voxel >
            std::numbers::pi * config.r_min * config.r_min *
                std::sqrt(m.eigenvalues[0] * m.eigenvalues[1]);
  t.small = cluster.size() < config.n_min;
  return t;
}

std::optional<Bipartition> bipartition(std::span<const Point> cluster,
                                       const PipelineConfig& config) {
  if (cluster.size() < 4) return std::nullopt;
  const Moments m = compute_moments(cluster);

  const bool use_kmeans = cluster.size() > config.n_em;
  Labels labels = use_kmeans ? two_means(cluster, m) : two_component_em(cluster, m);
  SplitMethod method = use_kmeans ? SplitMethod::kKMeans : SplitMethod::kEm;
  if (count_label(labels, 0) < 2 || count_label(labels, 1) < 2) {
    labels = median_split(cluster, m);
    method = SplitMethod::kMedian;
  }
  return split_by_labels(cluster, labels, method);
}

std::size_t ClusterSet::point_count() const {
  std::size_t total = 0;
  for (const auto& c : clusters) total += c.points.size();
  return total;
}

ClusterSet hierarchical_cluster(std::span<const Point> cloud, const PipelineConfig& config) {
  if (cloud.size() < 2) throw Error(ErrorKind::kInvalidArgument, "cluster too small");

  struct Pending {
    PointMatrix points;
    std::size_t creation_index;
  };
  std::deque<Pending> queue;
  queue.push_back({PointMatrix(cloud.begin(), cloud.end()), 0});
  std::size_t next_index = 1;

  ClusterSet out;
  while (!queue.empty()) {
    Pending item = std::move(queue.front());
    queue.pop_front();

    Moments m = compute_moments(item.points);
    const Termination t = termination_check(item.points, m, config);
    std::optional<Bipartition> split;
    if (!t.terminal()) split = bipartition(item.points, config);

    if (!split) {
      // Sub-four-point clusters that still fail f stay as Gaussians.
      const bool flat = t.terminal() && t.flat();
      out.clusters.push_back({std::move(item.points), m, flat, item.creation_index});
      continue;
    }
    queue.push_back({std::move(split->first), next_index++});
    queue.push_back({std::move(split->second), next_index++});
  }

  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.creation_index < b.creation_index; });
  return out;
}

}  // namespace pcmm
