#include "doctest.h"

#include "lrfit/error.hpp"
#include "lrfit/fitting.hpp"

#include "support.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace lrfit;
namespace ts = testing_support;

namespace
{

double rms_residual(const LRSurface& f, const PointCloud& c)
{
  double s = 0.0;
  for (const auto& p : c.points)
  {
    const double r = f.evaluate(p.x, p.y) - p.z;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(c.size()));
}

double max_residual(const LRSurface& f, const PointCloud& c)
{
  double m = 0.0;
  for (const auto& p : c.points)
    m = std::max(m, std::abs(f.evaluate(p.x, p.y) - p.z));
  return m;
}

PointCloud smooth_cloud(int n, std::mt19937_64& rng, double a, double b)
{
  std::uniform_real_distribution<double> x(0.0, 1.0);
  PointCloud c;
  for (int k = 0; k < n; ++k)
  {
    const double u = x(rng), v = x(rng);
    c.points.push_back(
        {u, v, std::sin(a * u + 0.3) * std::cos(b * v) + 0.5 * u * v});
  }
  return c;
}

} // namespace

TEST_CASE("smoothing matrix vanishes for bilinear spaces")
{
  std::mt19937_64 rng(1);
  const SplineSpace s = ts::random_space(1, 1, 3, 3, 10, rng);
  const SparseMatrix m = smoothing_matrix(s);
  CHECK(m.rows() == static_cast<Eigen::Index>(s.size()));
  CHECK(m.norm() == 0.0);
}

TEST_CASE("bilinear functions lie in the smoothing null space")
{
  std::mt19937_64 rng(2);
  for (int p = 2; p <= 3; ++p)
  {
    // Greville coefficients reproduce u + v and u * v on a tensor space;
    // refinement carries the exact representation along.
    for (bool twist : {false, true})
    {
      SplineSpace s = ts::tensor_space(p, p, 3, 3);
      std::vector<double> c(s.size());
      for (int i = 0; i < static_cast<int>(s.size()); ++i)
      {
        const double gu = ts::greville(s, i, Param::U);
        const double gv = ts::greville(s, i, Param::V);
        c[i] = twist ? gu * gv : gu + gv;
      }
      s.set_coefficients(c);
      for (int k = 0; k < 20; ++k)
        s.insert_segment(ts::random_segment(s, rng));
      const LRSurface f(s);
      for (auto [u, v] : ts::random_params(f.domain(), 20, rng))
        CHECK(std::abs(f.evaluate(u, v) - (twist ? u * v : u + v)) <= 1e-12);
      const auto cw = s.coefficients();
      const Eigen::VectorXd w =
          Eigen::Map<const Eigen::VectorXd>(cw.data(), cw.size());
      const SparseMatrix m = smoothing_matrix(s);
      CHECK(std::abs(w.dot(m * w)) <= 1e-10);
    }
  }
}

TEST_CASE("smoothing matrix is symmetric positive semidefinite")
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 6; ++trial)
  {
    const int p = 1 + trial % 3, q = 1 + (trial + 1) % 3;
    const SplineSpace s = ts::random_space(p, q, 4, 4, 25, rng);
    REQUIRE(s.size() <= 400);
    const Eigen::MatrixXd m = Eigen::MatrixXd(smoothing_matrix(s));
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    std::normal_distribution<double> g;
    Eigen::VectorXd w(m.rows());
    for (auto& x : w)
      x = g(rng);
    CHECK(w.dot(m * w) >= -1e-10);
  }
}

TEST_CASE("least squares recovers in-space surfaces without smoothing")
{
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 6; ++trial)
  {
    const int p = 1 + trial % 3;
    SplineSpace s = ts::random_space(p, p, 3, 3, 15, rng);
    ts::randomize_coefficients(s, rng);
    const LRSurface truth(s);
    const PointCloud cloud = ts::sample_surface(truth, 12, rng);

    SplineSpace blank = s;
    blank.set_coefficients(std::vector<double>(s.size(), 0.0));
    const LRSurface start(blank);
    FitConfig cfg;
    cfg.alpha_smooth = 0.0;
    cfg.solver_tol = 1e-13;
    const auto a = assign_points(start, cloud);
    const LsqResult r = lsq_fit(start, cloud, a, cfg);
    CHECK(r.residual <= cfg.solver_tol);
    blank.set_coefficients(r.coefficients);
    CHECK(max_residual(LRSurface(blank), cloud) <= 1e-9);
  }
}

TEST_CASE("least squares of constant data is constant")
{
  std::mt19937_64 rng(5);
  const SplineSpace s = ts::random_space(2, 2, 4, 4, 12, rng);
  const LRSurface f(s);
  PointCloud c = smooth_cloud(2000, rng, 1, 1);
  for (auto& p : c.points)
    p.z = 7.5;
  for (double a1 : {0.0, 1e-4, 1.0})
  {
    FitConfig cfg;
    cfg.alpha_smooth = a1;
    const auto r = lsq_fit(f, c, assign_points(f, c), cfg);
    for (double x : r.coefficients)
      CHECK(x == doctest::Approx(7.5).epsilon(1e-8));
  }
}

TEST_CASE("least squares refuses data-free B-splines without smoothing")
{
  const SplineSpace s = ts::tensor_space(2, 2, 4, 4);
  const LRSurface f(s);
  PointCloud c;
  for (int k = 0; k < 50; ++k)
    c.points.push_back({0.01 * k / 50.0, 0.01, 1.0});
  FitConfig cfg;
  cfg.alpha_smooth = 0.0;
  CHECK_THROWS_AS(lsq_fit(f, c, assign_points(f, c), cfg), FitError);
  cfg.alpha_smooth = 1e-3;
  CHECK_NOTHROW(lsq_fit(f, c, assign_points(f, c), cfg));

  const LRSurface lin(ts::tensor_space(1, 1, 4, 4));
  CHECK_THROWS_AS(lsq_fit(lin, c, assign_points(lin, c), cfg), FitError);
}

TEST_CASE("fitting is equivariant under vertical shift")
{
  std::mt19937_64 rng(6);
  const SplineSpace s = ts::random_space(2, 2, 4, 4, 10, rng);
  const LRSurface f(s);
  const PointCloud c = smooth_cloud(3000, rng, 4, 3);
  PointCloud shifted = c;
  for (auto& p : shifted.points)
    p.z += 3.25;
  const auto a = assign_points(f, c);
  FitConfig cfg;
  cfg.solver_tol = 1e-13;
  const auto r0 = lsq_fit(f, c, a, cfg).coefficients;
  const auto r1 = lsq_fit(f, shifted, a, cfg).coefficients;
  for (std::size_t i = 0; i < r0.size(); ++i)
    CHECK(std::abs(r1[i] - r0[i] - 3.25) <= 1e-10);

  SplineSpace g0 = s, g1 = s;
  g0.set_coefficients(r0);
  auto c1 = r0;
  for (double& x : c1)
    x += 3.25;
  g1.set_coefficients(c1);
  const auto m0 = mba_update(LRSurface(g0), c, a);
  const auto m1 = mba_update(LRSurface(g1), shifted, a);
  for (std::size_t i = 0; i < m0.size(); ++i)
    CHECK(std::abs(m1[i] - m0[i] - 3.25) <= 1e-10);
}

TEST_CASE("MBA interpolates a single point exactly")
{
  std::mt19937_64 rng(7);
  for (int p = 1; p <= 3; ++p)
    for (int trial = 0; trial < 5; ++trial)
    {
      SplineSpace s = ts::random_space(p, p, 3, 3, 10, rng);
      ts::randomize_coefficients(s, rng);
      const LRSurface f(s);
      const auto uv = ts::random_params(f.domain(), 1, rng)[0];
      PointCloud c;
      c.points.push_back({uv.first, uv.second, 2.0});
      s.set_coefficients(mba_update(f, c, assign_points(f, c)));
      CHECK(std::abs(LRSurface(s).evaluate(uv.first, uv.second) - 2.0) <=
            1e-13);
    }

  // Domain corner: only one B-spline is nonzero, with weight 1.
  SplineSpace s = ts::tensor_space(2, 2, 3, 3);
  const LRSurface f(s);
  PointCloud c;
  c.points.push_back({1.0, 1.0, -0.75});
  const auto upd = mba_update(f, c, assign_points(f, c));
  int changed = 0;
  for (double x : upd)
    changed += x != 0.0;
  CHECK(changed == 1);
  CHECK(upd.back() == -0.75);
}

TEST_CASE("MBA leaves a perfect fit unchanged")
{
  std::mt19937_64 rng(8);
  SplineSpace s = ts::random_space(2, 3, 3, 3, 10, rng);
  ts::randomize_coefficients(s, rng);
  const LRSurface f(s);
  const PointCloud c = ts::sample_surface(f, 5, rng);
  const auto upd = mba_update(f, c, assign_points(f, c));
  const auto old = s.coefficients();
  for (std::size_t i = 0; i < old.size(); ++i)
    CHECK(std::abs(upd[i] - old[i]) <= 1e-14);
}

TEST_CASE("MBA does not increase the RMS residual on smooth data")
{
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial)
  {
    SplineSpace s = ts::random_space(2, 2, 6, 6, 20, rng);
    const PointCloud c =
        smooth_cloud(6000, rng, 1.0 + trial * 0.2, 2.0 + trial * 0.1);
    LRSurface f(s);
    const auto a = assign_points(f, c);
    double prev = rms_residual(f, c);
    for (int step = 0; step < 4; ++step)
    {
      f.space().set_coefficients(mba_update(f, c, a));
      const double now = rms_residual(f, c);
      CHECK(now <= prev);
      prev = now;
    }
  }
}

TEST_CASE("fit schedule")
{
  FitConfig cfg;
  cfg.lsq_iterations = 0;
  CHECK(fit_method(cfg, 0) == FitMethod::Mba);
  CHECK(fit_method(cfg, 5) == FitMethod::Mba);
  cfg.lsq_iterations = 1000;
  CHECK(fit_method(cfg, 999) == FitMethod::Lsq);
  cfg.lsq_iterations = 2;
  CHECK(fit_method(cfg, 1) == FitMethod::Lsq);
  CHECK(fit_method(cfg, 2) == FitMethod::Mba);
}

TEST_CASE("default weights scale with the data")
{
  FitConfig cfg;
  const FitWeights w = resolve_weights(cfg, 400, {0, 2, 0, 5});
  CHECK(w.ls == doctest::Approx(1.0 / 400));
  CHECK(w.smooth == doctest::Approx(1e-3 * w.ls * 10.0));
  cfg.alpha_ls = 0.0;
  CHECK_THROWS_AS(resolve_weights(cfg, 10, {0, 1, 0, 1}), InputError);
}
