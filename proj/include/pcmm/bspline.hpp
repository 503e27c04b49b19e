#pragma once

#include <vector>

#include <Eigen/Core>

#include "pcmm/boundary.hpp"

namespace pcmm {

inline constexpr int kSplineDegree = 3;

/// Clamped knot vector of length n + degree + 3 for n + 2 control points:
/// 0 for i <= degree, 1 for i >= n + 2, (i - degree) / (n + 2 - degree) in
/// between.
std::vector<double> build_knots(int n, int degree = kSplineDegree);

/// Values of all basis functions of the given degree at u (Cox-de Boor,
/// 0/0 := 0). u = last knot is evaluated on the last non-empty span.
std::vector<double> basis_functions(double u, const std::vector<double>& knots, int degree);

/// Tensor-product height field over a BoundaryGrid. Control point (a, b) sits
/// at (ctrl_x[a], ctrl_y[b], ctrl_z(a, b)) in the primitive's local frame.
struct SplinePatch {
  int degree_x = kSplineDegree;
  int degree_y = kSplineDegree;
  std::vector<double> knots_x;
  std::vector<double> knots_y;
  std::vector<double> ctrl_x;  // nx + 2 entries
  std::vector<double> ctrl_y;  // ny + 2 entries
  Eigen::MatrixXd ctrl_z;      // (nx + 2) x (ny + 2)

  int rows() const { return static_cast<int>(ctrl_x.size()); }
  int cols() const { return static_cast<int>(ctrl_y.size()); }

  bool operator==(const SplinePatch& other) const {
    return degree_x == other.degree_x && degree_y == other.degree_y &&
           knots_x == other.knots_x && knots_y == other.knots_y && ctrl_x == other.ctrl_x &&
           ctrl_y == other.ctrl_y && ctrl_z.rows() == other.ctrl_z.rows() &&
           ctrl_z.cols() == other.ctrl_z.cols() && ctrl_z == other.ctrl_z;
  }
};

/// Degree used along an axis with n cells: 3, lowered to n + 1 when fewer than
/// four control points exist.
int patch_degree(int n);

/// Control net on the extended (nx + 2) x (ny + 2) grid of cell centers.
/// Interior heights start at the in-cell mean height (0 for empty cells), the
/// surrounding ring at 0.
SplinePatch init_control_points(const BoundaryGrid& grid);

/// Control x/y coordinates reconstructed from the grid.
void assign_control_positions(SplinePatch& patch, const BoundaryGrid& grid);

/// Tensor-product weights W(a, b) = N_a(u) N_b(v); throws for u, v outside
/// [0, 1].
Eigen::MatrixXd basis_weights(double u, double v, const SplinePatch& patch);

/// Spline parameters of a local (x, y): u = (x - x_min00) / ((nx + 1) a),
/// v likewise, clamped to [0, 1].
Eigen::Vector2d surface_parameters(const BoundaryGrid& grid, double x, double y);

/// Full weighted sum of the control points.
Point eval_surface(const SplinePatch& patch, double u, double v);

/// Weighted sum of the control heights only.
double eval_height(const SplinePatch& patch, double u, double v);

/// Sum over occupied cells of (mean height - spline height at the cell mean)^2.
double height_objective(const SplinePatch& patch, const BoundaryGrid& grid);

struct HeightFitOptions {
  /// Pull of every control height toward its initial value; pins the null
  /// space of the under-determined system. Its bias on the residual grows
  /// linearly with this weight. Zero selects the minimum-norm correction.
  double regularization = 1e-12;
};

/// Least-squares fit of the control heights to the in-cell mean heights,
/// solved on the regularized normal equations by sparse LDLT.
SplinePatch fit_heights(SplinePatch patch, const BoundaryGrid& grid,
                        const HeightFitOptions& options = {});

}  // namespace pcmm
