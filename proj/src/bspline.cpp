#include "pcmm/bspline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "pcmm/error.hpp"

namespace pcmm {
namespace {

void require_unit_interval(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "parameter out of range");
}

// Nonzero basis values at u: first index and degree + 1 values.
struct SparseBasis {
  int first = 0;
  std::vector<double> values;
};

SparseBasis sparse_basis(double u, const std::vector<double>& knots, int degree) {
  const std::vector<double> all = basis_functions(u, knots, degree);
  SparseBasis out;
  int last = -1;
  for (int a = 0; a < static_cast<int>(all.size()); ++a) {
    if (all[static_cast<std::size_t>(a)] != 0.0) {
      if (last < 0) out.first = a;
      last = a;
    }
  }
  if (last >= 0) out.values.assign(all.begin() + out.first, all.begin() + last + 1);
  return out;
}

struct HeightSystem {
  Eigen::SparseMatrix<double> design;  // observations x control heights
  Eigen::VectorXd targets;
};

HeightSystem assemble(const SplinePatch& patch, const BoundaryGrid& grid) {
  const int cols = patch.cols();
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> targets;
  int row = 0;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      if (!grid.is_occupied(i, j)) continue;
      const Eigen::Vector3d& mean = grid.cell_means[grid.index(i, j)];
      const Eigen::Vector2d uv = surface_parameters(grid, mean.x(), mean.y());
      const SparseBasis bu = sparse_basis(uv.x(), patch.knots_x, patch.degree_x);
      const SparseBasis bv = sparse_basis(uv.y(), patch.knots_y, patch.degree_y);
      for (std::size_t a = 0; a < bu.values.size(); ++a) {
        for (std::size_t b = 0; b < bv.values.size(); ++b) {
          const int alpha = bu.first + static_cast<int>(a);
          const int beta = bv.first + static_cast<int>(b);
          triplets.emplace_back(row, alpha * cols + beta, bu.values[a] * bv.values[b]);
        }
      }
      targets.push_back(mean.z());
      ++row;
    }
  }
  HeightSystem system;
  system.design.resize(row, patch.rows() * cols);
  system.design.setFromTriplets(triplets.begin(), triplets.end());
  system.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), row);
  return system;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  // row-major: index alpha * cols + beta
  Eigen::VectorXd out(m.size());
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    for (Eigen::Index b = 0; b < m.cols(); ++b) out[a * m.cols() + b] = m(a, b);
  }
  return out;
}

}  // namespace

std::vector<double> build_knots(int n, int degree) {
  if (n < 1 || degree < 1) throw Error(ErrorKind::kInvalidArgument, "bad knot vector size");
  const int length = n + degree + 3;
  std::vector<double> knots(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    double value;
    if (i <= degree) {
      value = 0.0;
    } else if (i >= n + 2) {
      value = 1.0;
    } else {
      // The textbook clamped-uniform denominator; n + 2 - 2*degree would
      // overshoot 1.
      value = static_cast<double>(i - degree) / static_cast<double>(n + 2 - degree);
    }
    knots[static_cast<std::size_t>(i)] = value;
  }
  return knots;
}

std::vector<double> basis_functions(double u, const std::vector<double>& knots, int degree) {
  const int spans = static_cast<int>(knots.size()) - 1;
  const int count = spans - degree;
  if (count < 1) throw Error(ErrorKind::kInvalidArgument, "knot vector too short");

  std::vector<double> n(static_cast<std::size_t>(spans), 0.0);
  if (u >= knots.back()) {
    for (int i = spans - 1; i >= 0; --i) {
      if (knots[static_cast<std::size_t>(i)] < knots[static_cast<std::size_t>(i) + 1]) {
        n[static_cast<std::size_t>(i)] = 1.0;
        break;
      }
    }
  } else {
    for (int i = 0; i < spans; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (knots[k] <= u && u < knots[k + 1]) n[k] = 1.0;
    }
  }

  for (int p = 1; p <= degree; ++p) {
    for (int i = 0; i < spans - p; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const auto pp = static_cast<std::size_t>(p);
      const double left_den = knots[k + pp] - knots[k];
      const double right_den = knots[k + pp + 1] - knots[k + 1];
      const double left = left_den > 0.0 ? (u - knots[k]) / left_den * n[k] : 0.0;
      const double right = right_den > 0.0 ? (knots[k + pp + 1] - u) / right_den * n[k + 1] : 0.0;
      n[k] = left + right;
    }
  }
  n.resize(static_cast<std::size_t>(count));
  return n;
}

int patch_degree(int n) { return std::min(kSplineDegree, n + 1); }

void assign_control_positions(SplinePatch& patch, const BoundaryGrid& grid) {
  patch.ctrl_x.resize(static_cast<std::size_t>(grid.nx) + 2);
  patch.ctrl_y.resize(static_cast<std::size_t>(grid.ny) + 2);
  for (int a = 0; a < grid.nx + 2; ++a) {
    patch.ctrl_x[static_cast<std::size_t>(a)] = grid.origin.x() + (a - 0.5) * grid.cell_size;
  }
  for (int b = 0; b < grid.ny + 2; ++b) {
    patch.ctrl_y[static_cast<std::size_t>(b)] = grid.origin.y() + (b - 0.5) * grid.cell_size;
  }
}

SplinePatch init_control_points(const BoundaryGrid& grid) {
  if (grid.nx <= 0 || grid.ny <= 0) throw Error(ErrorKind::kInvalidArgument, "empty surface support");
  if (grid.cell_means.size() != grid.cell_count()) {
    throw Error(ErrorKind::kInvalidArgument, "boundary grid lacks cell means");
  }
  SplinePatch patch;
  patch.degree_x = patch_degree(grid.nx);
  patch.degree_y = patch_degree(grid.ny);
  patch.knots_x = build_knots(grid.nx, patch.degree_x);
  patch.knots_y = build_knots(grid.ny, patch.degree_y);
  assign_control_positions(patch, grid);
  patch.ctrl_z = Eigen::MatrixXd::Zero(grid.nx + 2, grid.ny + 2);
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      if (grid.is_occupied(i, j)) patch.ctrl_z(i + 1, j + 1) = grid.cell_means[grid.index(i, j)].z();
    }
  }
  return patch;
}

Eigen::MatrixXd basis_weights(double u, double v, const SplinePatch& patch) {
  require_unit_interval(u);
  require_unit_interval(v);
  const std::vector<double> bu = basis_functions(u, patch.knots_x, patch.degree_x);
  const std::vector<double> bv = basis_functions(v, patch.knots_y, patch.degree_y);
  const Eigen::Map<const Eigen::VectorXd> nu(bu.data(), static_cast<Eigen::Index>(bu.size()));
  const Eigen::Map<const Eigen::VectorXd> nv(bv.data(), static_cast<Eigen::Index>(bv.size()));
  return nu * nv.transpose();
}

Eigen::Vector2d surface_parameters(const BoundaryGrid& grid, double x, double y) {
  const double u = (x - grid.origin.x()) / ((grid.nx + 1) * grid.cell_size);
  const double v = (y - grid.origin.y()) / ((grid.ny + 1) * grid.cell_size);
  return {std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)};
}

Point eval_surface(const SplinePatch& patch, double u, double v) {
  const Eigen::MatrixXd w = basis_weights(u, v, patch);
  const Eigen::Map<const Eigen::VectorXd> cx(patch.ctrl_x.data(), patch.rows());
  const Eigen::Map<const Eigen::VectorXd> cy(patch.ctrl_y.data(), patch.cols());
  return {cx.dot(w.rowwise().sum()), cy.dot(w.colwise().sum().transpose()),
          w.cwiseProduct(patch.ctrl_z).sum()};
}

double eval_height(const SplinePatch& patch, double u, double v) {
  require_unit_interval(u);
  require_unit_interval(v);
  const SparseBasis bu = sparse_basis(u, patch.knots_x, patch.degree_x);
  const SparseBasis bv = sparse_basis(v, patch.knots_y, patch.degree_y);
  double z = 0.0;
  for (std::size_t a = 0; a < bu.values.size(); ++a) {
    for (std::size_t b = 0; b < bv.values.size(); ++b) {
      z += bu.values[a] * bv.values[b] *
           patch.ctrl_z(bu.first + static_cast<int>(a), bv.first + static_cast<int>(b));
    }
  }
  return z;
}

double height_objective(const SplinePatch& patch, const BoundaryGrid& grid) {
  double total = 0.0;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      if (!grid.is_occupied(i, j)) continue;
      const Eigen::Vector3d& mean = grid.cell_means[grid.index(i, j)];
      const Eigen::Vector2d uv = surface_parameters(grid, mean.x(), mean.y());
      const double r = mean.z() - eval_height(patch, uv.x(), uv.y());
      total += r * r;
    }
  }
  return total;
}

SplinePatch fit_heights(SplinePatch patch, const BoundaryGrid& grid, const HeightFitOptions& options) {
  if (grid.cell_means.size() != grid.cell_count()) {
    throw Error(ErrorKind::kInvalidArgument, "boundary grid lacks cell means");
  }
  if (std::none_of(grid.occupied.begin(), grid.occupied.end(), [](auto e) { return e != 0; })) {
    throw Error(ErrorKind::kInvalidArgument, "empty surface support");
  }
  if (!(options.regularization >= 0.0) || !std::isfinite(options.regularization)) {
    throw Error(ErrorKind::kInvalidArgument, "regularization must be finite and non-negative");
  }
  const HeightSystem system = assemble(patch, grid);
  const Eigen::VectorXd initial = flatten(patch.ctrl_z);
  const Eigen::Index unknowns = initial.size();

  // Solve for the correction from the initial heights.
  const Eigen::VectorXd residual = system.targets - system.design * initial;
  Eigen::VectorXd correction;
  if (options.regularization > 0.0) {
    Eigen::SparseMatrix<double> identity(unknowns, unknowns);
    identity.setIdentity();
    const Eigen::SparseMatrix<double> normal =
        Eigen::SparseMatrix<double>(system.design.transpose() * system.design) +
        options.regularization * identity;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::kNumerical, "height system factorization failed");
    correction = solver.solve(system.design.transpose() * residual);
  } else {
    // Started from zero, the iterates stay in the row space, so this
    // converges to the minimum-norm correction.
    Eigen::LeastSquaresConjugateGradient<Eigen::SparseMatrix<double>> solver(system.design);
    solver.setTolerance(1e-14);
    solver.setMaxIterations(std::max<Eigen::Index>(1000, 20 * unknowns));
    correction = solver.solve(residual);
  }
  const Eigen::VectorXd heights = initial + correction;
  if (!heights.allFinite()) throw Error(ErrorKind::kNumerical, "non-finite control heights");

  const int cols = patch.cols();
  for (int a = 0; a < patch.rows(); ++a) {
    for (int b = 0; b < cols; ++b) patch.ctrl_z(a, b) = heights[a * cols + b];
  }
  return patch;
}

}  // namespace pcmm
