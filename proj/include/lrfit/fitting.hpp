#pragma once

#include "lrfit/surface.hpp"

#include <Eigen/SparseCore>

#include <optional>
#include <vector>

namespace lrfit
{

struct FitConfig
{
  /// Smoothing weight alpha1. Unset: smoothing_ratio * alpha2 * domain area.
  std::optional<double> alpha_smooth;
  /// Data weight alpha2. Unset: 1 / number of points.
  std::optional<double> alpha_ls;
  double smoothing_ratio = 1e-3;
  /// Loop iterations below this index use least squares, later ones MBA.
  int lsq_iterations = 2;
  /// Relative normal-equation residual accepted from the iterative solve.
  double solver_tol = 1e-10;
  int solver_max_iter = 20000;
};

struct FitWeights
{
  double smooth = 0.0;
  double ls = 0.0;
};

/// Resolve defaulted weights for a cloud of n points over `domain`.
FitWeights resolve_weights(const FitConfig& cfg, std::size_t n_points,
                           const Domain& domain);

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Smoothing matrix M with w^T M w = integral of F_uu^2 + F_vv^2 for F
/// with coefficients w. Bilinear functions span its null space; for
/// degree (1, 1) it is zero.
SparseMatrix smoothing_matrix(const SplineSpace& space);

struct LsqResult
{
  std::vector<double> coefficients;
  int iterations = 0;
  double residual = 0.0; // relative normal-equation residual
};

/// Penalized least squares: solve (a1 M + a2 A^T A) P = a2 A^T z by
/// Jacobi-preconditioned conjugate gradients, starting from the current
/// coefficients. Throws FitError when the system is singular by
/// construction or the solve does not reach cfg.solver_tol.
LsqResult lsq_fit(const LRSurface& surface, const PointCloud& cloud,
                  const PointAssignment& assignment, const FitConfig& cfg);

/// One multilevel B-spline approximation pass on the residuals of the
/// current surface. Returns the updated coefficient vector.
std::vector<double> mba_update(const LRSurface& surface,
                               const PointCloud& cloud,
                               const PointAssignment& assignment);

enum class FitMethod
{
  Lsq,
  Mba
};

FitMethod fit_method(const FitConfig& cfg, int iteration);

/// Refit the surface coefficients for loop iteration `iteration`.
FitMethod fit_step(LRSurface& surface, const PointCloud& cloud,
                   const PointAssignment& assignment, const FitConfig& cfg,
                   int iteration);

} // namespace lrfit
