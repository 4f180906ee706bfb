#pragma once

// Shared helpers for the test suites: random spaces, random legal
// refinements, and random sampling.

#include "lrfit/spline_space.hpp"
#include "lrfit/surface.hpp"

#include <random>
#include <vector>

namespace testing_support
{

/// Uniform open knot vector on [a, b] with n interior intervals.
inline std::vector<double> open_uniform(int p, int n, double a = 0.0,
                                        double b = 1.0)
{
  std::vector<double> t(p, a);
  for (int i = 0; i <= n; ++i)
    t.push_back(a + (b - a) * i / n);
  t.insert(t.end(), p, b);
  return t;
}

inline lrfit::SplineSpace tensor_space(int p, int q, int nu, int nv)
{
  const auto tu = open_uniform(p, nu);
  const auto tv = open_uniform(q, nv);
  return lrfit::SplineSpace::tensor(tu, tv, p, q);
}

/// A legal segment splitting B-spline `b` at the midpoint of one of its
/// nonempty local knot intervals, spanning its full orthogonal support.
inline lrfit::KnotSegment bisect_bspline(const lrfit::SplineSpace& space, int b,
                                         lrfit::Param dir, int interval)
{
  using lrfit::Param;
  const auto& bs = space.bspline(b);
  const auto& t = space.knots();
  const auto k = bs.knots(dir);
  const double lo = t.value(dir, k[interval]);
  const double hi = t.value(dir, k[interval + 1]);
  const Param o = lrfit::other(dir);
  return {dir, 0.5 * (lo + hi), t.value(o, bs.first(o)),
          t.value(o, bs.last(o))};
}

/// Random legal refinement segment for the current space.
inline lrfit::KnotSegment random_segment(const lrfit::SplineSpace& space,
                                         std::mt19937_64& rng)
{
  using lrfit::Param;
  for (;;)
  {
    std::uniform_int_distribution<int> pick_b(
        0, static_cast<int>(space.size()) - 1);
    const int b = pick_b(rng);
    const Param dir = (rng() & 1) ? Param::U : Param::V;
    const auto k = space.bspline(b).knots(dir);
    std::vector<int> nonempty;
    for (std::size_t i = 0; i + 1 < k.size(); ++i)
      if (k[i] < k[i + 1])
        nonempty.push_back(static_cast<int>(i));
    std::uniform_int_distribution<std::size_t> pick_i(0, nonempty.size() - 1);
    const auto seg = bisect_bspline(space, b, dir, nonempty[pick_i(rng)]);
    if (space.check(seg) == lrfit::SegmentCheck::Ok)
      return seg;
  }
}

inline void randomize_coefficients(lrfit::SplineSpace& space,
                                   std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  std::vector<double> coeff(space.size());
  for (double& x : coeff)
    x = c(rng);
  space.set_coefficients(coeff);
}

inline std::vector<std::pair<double, double>>
random_params(const lrfit::Domain& d, int n, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(d.u_min, d.u_max);
  std::uniform_real_distribution<double> v(d.v_min, d.v_max);
  std::vector<std::pair<double, double>> out(n);
  for (auto& x : out)
    x = {u(rng), v(rng)};
  return out;
}

/// Sum of s_i R_i over all B-splines by brute force (no element lookup).
inline double unity_sum(const lrfit::SplineSpace& space, double u, double v)
{
  double s = 0.0;
  for (int i = 0; i < static_cast<int>(space.size()); ++i)
    s += space.weighted_basis(i, u, v);
  return s;
}

} // namespace testing_support

namespace testing_support
{

/// Greville abscissa of B-spline i in direction p.
inline double greville(const lrfit::SplineSpace& space, int i, lrfit::Param p)
{
  const auto k = space.bspline(i).knots(p);
  const int deg = space.bspline(i).degree(p);
  double s = 0.0;
  for (int j = 1; j <= deg; ++j)
    s += space.knots().value(p, k[j]);
  return s / deg;
}

/// Randomly refined space with `n` insertions.
inline lrfit::SplineSpace random_space(int p, int q, int nu, int nv, int n,
                                       std::mt19937_64& rng)
{
  auto s = tensor_space(p, q, nu, nv);
  for (int k = 0; k < n; ++k)
    s.insert_segment(random_segment(s, rng));
  return s;
}

/// `per_element` uniform samples of the surface inside every element.
inline lrfit::PointCloud sample_surface(const lrfit::LRSurface& f,
                                        int per_element, std::mt19937_64& rng)
{
  lrfit::PointCloud cloud;
  const auto& t = f.space().knots();
  for (const auto& e : f.space().mesh().elements())
  {
    std::uniform_real_distribution<double> u(t.u[e.u0], t.u[e.u1]);
    std::uniform_real_distribution<double> v(t.v[e.v0], t.v[e.v1]);
    for (int k = 0; k < per_element; ++k)
    {
      const double x = u(rng), y = v(rng);
      cloud.points.push_back({x, y, f.evaluate(x, y)});
    }
  }
  return cloud;
}

} // namespace testing_support
