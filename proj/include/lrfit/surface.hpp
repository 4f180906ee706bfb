#pragma once

#include "lrfit/spline_space.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lrfit
{

struct Point3
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Projectable point cloud, parameterized by (u, v) = (x, y).
struct PointCloud
{
  std::vector<Point3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct Domain
{
  double u_min = 0.0;
  double u_max = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;

  double area() const { return (u_max - u_min) * (v_max - v_min); }
  bool contains(double u, double v) const
  {
    return u >= u_min && u <= u_max && v >= v_min && v <= v_max;
  }
};

/// LR B-spline height function F(u, v) = sum_i P_i s_i R_i(u, v).
class LRSurface
{
public:
  LRSurface() = default;
  explicit LRSurface(SplineSpace space) : space_(std::move(space)) {}

  const SplineSpace& space() const { return space_; }
  SplineSpace& space() { return space_; }

  int degree(Param p) const { return space_.degree(p); }
  std::size_t num_coefficients() const { return space_.size(); }
  Domain domain() const;

  /// Height at (u, v); throws InputError outside the domain.
  double evaluate(double u, double v) const;

  /// Height at (u, v), which must lie in element e.
  double evaluate_in(int e, double u, double v) const;

private:
  SplineSpace space_;
};

/// Points per element, aligned with mesh().elements().
struct PointAssignment
{
  std::vector<std::vector<std::uint32_t>> per_element;
};

/// Assign every point to the element that contains it (half-open boxes,
/// closed on the upper domain boundary). Throws InputError for points
/// outside the domain.
PointAssignment assign_points(const LRSurface& surface,
                              const PointCloud& cloud);

struct ElementStats
{
  std::size_t n_points = 0;
  std::size_t n_out = 0;
  double max_dist = 0.0;
  double sum_dist = 0.0;
  double sum_out_dist = 0.0;
};

struct GlobalStats
{
  double max_dist = 0.0;
  double avg_dist = 0.0;
  double avg_out_dist = 0.0;
  std::size_t n_out = 0;
  std::size_t n_points = 0;

  std::size_t n_resolved() const { return n_points - n_out; }
};

struct AccuracyLedger
{
  double tolerance = 0.0;
  std::vector<ElementStats> per_element;
  GlobalStats global;
};

/// Fold per-element statistics into global aggregates.
GlobalStats aggregate(const std::vector<ElementStats>& per_element);

/// Vertical residual statistics |F(x_k, y_k) - z_k| per element. A point
/// whose distance equals the tolerance counts as resolved.
AccuracyLedger compute_accuracy(const LRSurface& surface,
                                const PointCloud& cloud,
                                const PointAssignment& assignment,
                                double tolerance);

/// Resolved points per surface coefficient.
double approximation_efficiency(std::size_t n_resolved, std::size_t n_coeff);

} // namespace lrfit
