#include "lrfit/fitting.hpp"

#include "lrfit/error.hpp"
#include "lrfit/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace lrfit
{

namespace
{

struct GaussRule
{
  std::array<double, 4> x{};
  std::array<double, 4> w{};
  int n = 0;
};

// Gauss-Legendre nodes and weights on [-1, 1].
GaussRule gauss_legendre(int n)
{
  switch (n)
  {
  case 1:
    return {{0.0}, {2.0}, 1};
  case 2:
  {
    const double a = 1.0 / std::sqrt(3.0);
    return {{-a, a}, {1.0, 1.0}, 2};
  }
  case 3:
  {
    const double a = std::sqrt(0.6);
    return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}, 3};
  }
  default:
  {
    const double r = 2.0 * std::sqrt(1.2);
    const double a = std::sqrt(3.0 / 7.0 - r / 7.0);
    const double b = std::sqrt(3.0 / 7.0 + r / 7.0);
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    return {{-b, -a, a, b}, {wb, wa, wa, wb}, 4};
  }
  }
}

// Element-local normal equations, rows/columns aligned with
// element_support(e).
struct LocalSystem
{
  std::vector<double> matrix; // row-major n x n
  std::vector<double> rhs;
  int n = 0;
};

void add_smoothing(const SplineSpace& space, int e, double weight,
                   LocalSystem& out)
{
  if (weight == 0.0)
    return;
  const Element& el = space.mesh().elements()[e];
  const KnotTable& t = space.knots();
  const double u0 = t.u[el.u0], u1 = t.u[el.u1];
  const double v0 = t.v[el.v0], v1 = t.v[el.v1];
  const GaussRule gu = gauss_legendre(space.degree(Param::U) + 1);
  const GaussRule gv = gauss_legendre(space.degree(Param::V) + 1);
  const auto ids = space.element_support(e);
  const int n = out.n;
  std::vector<BasisHessian> h(n);
  for (int a = 0; a < gu.n; ++a)
  {
    const double u = 0.5 * (u0 + u1) + 0.5 * (u1 - u0) * gu.x[a];
    for (int b = 0; b < gv.n; ++b)
    {
      const double v = 0.5 * (v0 + v1) + 0.5 * (v1 - v0) * gv.x[b];
      const double w =
          weight * gu.w[a] * gv.w[b] * 0.25 * (u1 - u0) * (v1 - v0);
      for (int i = 0; i < n; ++i)
        h[i] = space.weighted_basis_hessian(ids[i], u, v);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out.matrix[i * n + j] +=
              w * (h[i].uu * h[j].uu + h[i].vv * h[j].vv);
    }
  }
}

void add_data(const SplineSpace& space, int e, const PointCloud& cloud,
              const std::vector<std::uint32_t>& points, double weight,
              LocalSystem& out)
{
  const int n = out.n;
  std::vector<double> r;
  for (std::uint32_t k : points)
  {
    const Point3& p = cloud.points[k];
    space.basis_in_element(e, p.x, p.y, r);
    for (int i = 0; i < n; ++i)
    {
      if (r[i] == 0.0)
        continue;
      out.rhs[i] += weight * r[i] * p.z;
      for (int j = 0; j < n; ++j)
        out.matrix[i * n + j] += weight * r[i] * r[j];
    }
  }
}

// Assemble the global system from element contributions, folded in
// element order so the result does not depend on the thread count.
SparseMatrix assemble(const SplineSpace& space, const PointCloud* cloud,
                      const PointAssignment* assignment, double a_smooth,
                      double a_ls, Eigen::VectorXd* rhs)
{
  const std::size_t n_el = space.mesh().elements().size();
  std::vector<LocalSystem> local(n_el);
  parallel_for(
      n_el,
      [&](std::size_t e) {
        LocalSystem& ls = local[e];
        ls.n = static_cast<int>(space.element_support(e).size());
        ls.matrix.assign(static_cast<std::size_t>(ls.n) * ls.n, 0.0);
        ls.rhs.assign(ls.n, 0.0);
        add_smoothing(space, static_cast<int>(e), a_smooth, ls);
        if (cloud)
          add_data(space, static_cast<int>(e), *cloud,
                   assignment->per_element[e], a_ls, ls);
      },
      8);

  std::vector<Eigen::Triplet<double>> triplets;
  std::size_t count = 0;
  for (const auto& ls : local)
    count += ls.matrix.size();
  triplets.reserve(count);
  const int dim = static_cast<int>(space.size());
  if (rhs)
    rhs->setZero(dim);
  for (std::size_t e = 0; e < n_el; ++e)
  {
    const auto ids = space.element_support(e);
    const LocalSystem& ls = local[e];
    for (int i = 0; i < ls.n; ++i)
    {
      if (rhs)
        (*rhs)[ids[i]] += ls.rhs[i];
      for (int j = 0; j < ls.n; ++j)
        if (ls.matrix[i * ls.n + j] != 0.0)
          triplets.emplace_back(ids[i], ids[j], ls.matrix[i * ls.n + j]);
    }
  }
  SparseMatrix m(dim, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

std::vector<char> has_data(const SplineSpace& space,
                           const PointAssignment& assignment)
{
  std::vector<char> out(space.size(), 0);
  for (std::size_t e = 0; e < assignment.per_element.size(); ++e)
    if (!assignment.per_element[e].empty())
      for (int i : space.element_support(e))
        out[i] = 1;
  return out;
}

} // namespace

FitWeights resolve_weights(const FitConfig& cfg, std::size_t n_points,
                           const Domain& domain)
{
  FitWeights w;
  w.ls = cfg.alpha_ls ? *cfg.alpha_ls
                      : 1.0 / static_cast<double>(std::max<std::size_t>(
                                  n_points, 1));
  w.smooth = cfg.alpha_smooth ? *cfg.alpha_smooth
                              : cfg.smoothing_ratio * w.ls * domain.area();
  if (!(w.ls > 0.0) || !(w.smooth >= 0.0))
    throw InputError("fit weights must satisfy alpha_ls > 0, alpha_smooth >= 0");
  return w;
}

SparseMatrix smoothing_matrix(const SplineSpace& space)
{
  return assemble(space, nullptr, nullptr, 1.0, 0.0, nullptr);
}

LsqResult lsq_fit(const LRSurface& surface, const PointCloud& cloud,
                  const PointAssignment& assignment, const FitConfig& cfg)
{
  const SplineSpace& space = surface.space();
  const FitWeights w = resolve_weights(cfg, cloud.size(), surface.domain());

  const auto data = has_data(space, assignment);
  // Bilinear spaces have zero second derivatives in u and v.
  const bool smoothing_inert = space.degree(Param::U) == 1
                               && space.degree(Param::V) == 1;
  if (w.smooth == 0.0 || smoothing_inert)
  {
    const auto it = std::find(data.begin(), data.end(), 0);
    if (it != data.end())
      throw FitError("B-spline " + std::to_string(it - data.begin())
                     + " has no data in its support and no smoothing term;"
                       " use a positive smoothing weight");
  }

  Eigen::VectorXd b;
  const SparseMatrix a = assemble(space, &cloud, &assignment, w.smooth, w.ls, &b);
  const auto c0 = space.coefficients();
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
      c0.data(), static_cast<Eigen::Index>(c0.size()));

  LsqResult result;
  const double b_norm = b.norm();
  if (b_norm == 0.0)
  {
    // Homogeneous system with an SPD matrix.
    result.coefficients.assign(space.size(), 0.0);
    return result;
  }

  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(cfg.solver_tol);
  cg.compute(a);
  if (cg.info() != Eigen::Success)
    throw FitError("preconditioner setup failed");

  // The recurrence residual can drift from the true one; restart from the
  // current iterate until the true residual meets the tolerance.
  double residual = (a * x - b).norm() / b_norm;
  while (residual > cfg.solver_tol && result.iterations < cfg.solver_max_iter)
  {
    cg.setMaxIterations(cfg.solver_max_iter - result.iterations);
    x = cg.solveWithGuess(b, x);
    result.iterations += std::max<int>(1, static_cast<int>(cg.iterations()));
    residual = (a * x - b).norm() / b_norm;
  }
  if (residual > cfg.solver_tol || !x.allFinite())
    throw FitError("conjugate gradient did not converge: relative residual "
                   + std::to_string(residual) + " after "
                   + std::to_string(result.iterations) + " iterations");
  result.residual = residual;
  result.coefficients.assign(x.data(), x.data() + x.size());
  return result;
}

std::vector<double> mba_update(const LRSurface& surface,
                               const PointCloud& cloud,
                               const PointAssignment& assignment)
{
  const SplineSpace& space = surface.space();
  const std::size_t n_el = assignment.per_element.size();
  // Per element, per supported B-spline: (sum w^2 phi, sum w^2).
  std::vector<std::vector<std::pair<double, double>>> local(n_el);
  parallel_for(
      n_el,
      [&](std::size_t e) {
        const auto ids = space.element_support(e);
        auto& acc = local[e];
        acc.assign(ids.size(), {0.0, 0.0});
        std::vector<double> w;
        for (std::uint32_t k : assignment.per_element[e])
        {
          const Point3& p = cloud.points[k];
          space.basis_in_element(static_cast<int>(e), p.x, p.y, w);
          double f = 0.0;
          double sum_w2 = 0.0;
          for (std::size_t i = 0; i < ids.size(); ++i)
          {
            f += space.bspline(ids[i]).coeff * w[i];
            sum_w2 += w[i] * w[i];
          }
          if (sum_w2 == 0.0)
            continue;
          const double r = p.z - f;
          for (std::size_t i = 0; i < ids.size(); ++i)
          {
            const double w2 = w[i] * w[i];
            const double phi = w[i] * r / sum_w2;
            acc[i].first += w2 * phi;
            acc[i].second += w2;
          }
        }
      },
      8);

  std::vector<double> num(space.size(), 0.0), den(space.size(), 0.0);
  for (std::size_t e = 0; e < n_el; ++e)
  {
    const auto ids = space.element_support(e);
    for (std::size_t i = 0; i < ids.size(); ++i)
    {
      num[ids[i]] += local[e][i].first;
      den[ids[i]] += local[e][i].second;
    }
  }
  std::vector<double> c = space.coefficients();
  for (std::size_t i = 0; i < c.size(); ++i)
    if (den[i] > 0.0)
      c[i] += num[i] / den[i];
  return c;
}

FitMethod fit_method(const FitConfig& cfg, int iteration)
{
  return iteration < cfg.lsq_iterations ? FitMethod::Lsq : FitMethod::Mba;
}

FitMethod fit_step(LRSurface& surface, const PointCloud& cloud,
                   const PointAssignment& assignment, const FitConfig& cfg,
                   int iteration)
{
  const FitMethod m = fit_method(cfg, iteration);
  if (m == FitMethod::Lsq)
    surface.space().set_coefficients(
        lsq_fit(surface, cloud, assignment, cfg).coefficients);
  else
    surface.space().set_coefficients(mba_update(surface, cloud, assignment));
  return m;
}

} // namespace lrfit
