#include "lrfit/surface.hpp"

#include "lrfit/error.hpp"
#include "lrfit/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace lrfit
{

Domain LRSurface::domain() const
{
  const KnotTable& t = space_.knots();
  return {t.min(Param::U), t.max(Param::U), t.min(Param::V), t.max(Param::V)};
}

double LRSurface::evaluate(double u, double v) const
{
  const int e = space_.mesh().locate(u, v);
  if (e < 0)
    throw InputError("evaluation point outside the surface domain");
  return evaluate_in(e, u, v);
}

double LRSurface::evaluate_in(int e, double u, double v) const
{
  double z = 0.0;
  for (int i : space_.element_support(e))
    z += space_.bspline(i).coeff * space_.weighted_basis(i, u, v);
  return z;
}

//-----------------------------------------------------------------------------
PointAssignment assign_points(const LRSurface& surface, const PointCloud& cloud)
{
  const LRMesh& mesh = surface.space().mesh();
  std::vector<int> owner(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t k) {
    owner[k] = mesh.locate(cloud.points[k].x, cloud.points[k].y);
  });
  PointAssignment out;
  out.per_element.resize(mesh.elements().size());
  for (std::size_t k = 0; k < cloud.size(); ++k)
  {
    if (owner[k] < 0)
      throw InputError("point " + std::to_string(k)
                       + " lies outside the surface domain");
    out.per_element[owner[k]].push_back(static_cast<std::uint32_t>(k));
  }
  return out;
}

GlobalStats aggregate(const std::vector<ElementStats>& per_element)
{
  GlobalStats g;
  double sum = 0.0;
  double sum_out = 0.0;
  for (const ElementStats& s : per_element)
  {
    g.n_points += s.n_points;
    g.n_out += s.n_out;
    g.max_dist = std::max(g.max_dist, s.max_dist);
    sum += s.sum_dist;
    sum_out += s.sum_out_dist;
  }
  g.avg_dist = g.n_points ? sum / static_cast<double>(g.n_points) : 0.0;
  g.avg_out_dist = g.n_out ? sum_out / static_cast<double>(g.n_out) : 0.0;
  return g;
}

AccuracyLedger compute_accuracy(const LRSurface& surface,
                                const PointCloud& cloud,
                                const PointAssignment& assignment,
                                double tolerance)
{
  AccuracyLedger ledger;
  ledger.tolerance = tolerance;
  ledger.per_element.resize(assignment.per_element.size());
  parallel_for(
      assignment.per_element.size(),
      [&](std::size_t e) {
        ElementStats& s = ledger.per_element[e];
        for (std::uint32_t k : assignment.per_element[e])
        {
          const Point3& p = cloud.points[k];
          const double d = std::abs(
              surface.evaluate_in(static_cast<int>(e), p.x, p.y) - p.z);
          ++s.n_points;
          s.sum_dist += d;
          s.max_dist = std::max(s.max_dist, d);
          if (d > tolerance)
          {
            ++s.n_out;
            s.sum_out_dist += d;
          }
        }
      },
      16);
  ledger.global = aggregate(ledger.per_element);
  return ledger;
}

double approximation_efficiency(std::size_t n_resolved, std::size_t n_coeff)
{
  if (n_coeff == 0)
    throw InputError("approximation efficiency needs at least one coefficient");
  return static_cast<double>(n_resolved) / static_cast<double>(n_coeff);
}

} // namespace lrfit
