#include "lrfit/cli.hpp"

#include "lrfit/error.hpp"
#include "lrfit/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace lrfit
{

namespace
{

std::array<int, 2> parse_pair(const std::string& text, char sep,
                              const std::string& what)
{
  std::array<int, 2> out{};
  const auto pos = text.find(sep);
  try
  {
    std::size_t used = 0;
    if (pos == std::string::npos)
    {
      out[0] = out[1] = std::stoi(text, &used);
      if (used != text.size())
        throw std::invalid_argument(text);
    }
    else
    {
      const std::string a = text.substr(0, pos), b = text.substr(pos + 1);
      out[0] = std::stoi(a, &used);
      if (used != a.size())
        throw std::invalid_argument(text);
      out[1] = std::stoi(b, &used);
      if (used != b.size())
        throw std::invalid_argument(text);
    }
  }
  catch (const std::exception&)
  {
    throw InputError("bad " + what + " '" + text + "'");
  }
  return out;
}

struct FitArgs
{
  std::string points;
  std::string strategy = "eFB";
  double tolerance = 0.0;
  std::string degree = "2";
  int max_iter = 40;
  std::string out;
  std::string report;
  double min_interval = 0.0;
  std::string initial_grid;
  std::string intermediate;
  int lsq_iterations = 2;
  double smoothing_ratio = 1e-3;
  bool quiet = false;
};

int do_fit(const FitArgs& a)
{
  RunConfig cfg;
  cfg.strategy = parse_label(a.strategy);
  if (!(a.tolerance > 0.0))
    throw InputError("--tolerance must be positive");
  if (a.max_iter < 0)
    throw InputError("--max-iter must be non-negative");
  if (a.min_interval < 0.0)
    throw InputError("--min-interval must be non-negative");
  if (a.lsq_iterations < 0)
    throw InputError("--lsq-iterations must be non-negative");
  if (!(a.smoothing_ratio >= 0.0))
    throw InputError("--smoothing must be non-negative");
  const auto deg = parse_pair(a.degree, ',', "degree");
  if (deg[0] < 1 || deg[0] > 3 || deg[1] < 1 || deg[1] > 3)
    throw InputError("--degree must be 1, 2 or 3 (or p,q)");
  cfg.degree_u = deg[0];
  cfg.degree_v = deg[1];
  cfg.tolerance = a.tolerance;
  cfg.max_iterations = a.max_iter;
  cfg.min_interval = a.min_interval;
  cfg.fit.lsq_iterations = a.lsq_iterations;
  cfg.fit.smoothing_ratio = a.smoothing_ratio;
  if (!a.initial_grid.empty())
  {
    cfg.initial_elements = parse_pair(a.initial_grid, 'x', "initial grid");
    if ((*cfg.initial_elements)[0] < 1 || (*cfg.initial_elements)[1] < 1)
      throw InputError("--initial-grid needs positive element counts");
  }
  if (!a.intermediate.empty())
    cfg.intermediate = parse_predicate(a.intermediate);

  const PointCloud cloud = read_points(a.points);
  auto progress = [&](const LedgerRow& r) {
    if (!a.quiet)
      std::fprintf(stderr,
                   "iter %3d  out %9zu  coeff %8zu  max %-12.6g avg %-12.6g "
                   "segments %6zu  %s\n",
                   r.iter, r.n_out, r.n_coeff, r.max_dist, r.avg_dist,
                   r.segments, r.strategy.c_str());
  };
  const RunResult res = run(cloud, cfg, progress);
  const RunLedger& led = res.ledger;

  if (!a.report.empty())
  {
    std::ofstream out(a.report);
    if (!out)
      throw Error("cannot open '" + a.report + "' for writing");
    write_report(out, led.rows);
  }
  if (!a.out.empty())
  {
    Provenance prov;
    prov["strategy"] = label(cfg.strategy);
    prov["final_strategy"] = led.rows.back().strategy;
    prov["iterations"] = std::to_string(led.rows.back().iter);
    char tol[32];
    std::snprintf(tol, sizeof tol, "%.17g", cfg.tolerance);
    prov["tolerance"] = tol;
    prov["degree"] = std::to_string(cfg.degree_u) + "," + std::to_string(cfg.degree_v);
    prov["max_iterations"] = std::to_string(cfg.max_iterations);
    prov["stop"] = to_string(led.stop);
    prov["points"] = std::to_string(cloud.size());
    write_surface_file(a.out, res.surface, prov);
  }

  const LedgerRow& last = led.rows.back();
  std::printf("stop: %s\n", to_string(led.stop).c_str());
  std::printf("iterations: %d\n", last.iter);
  std::printf("coefficients: %zu\n", last.n_coeff);
  std::printf("points out of tolerance: %zu of %zu\n", last.n_out, last.n_points);
  std::printf("max distance: %.6g\n", last.max_dist);
  std::printf("average distance: %.6g\n", last.avg_dist);
  std::printf("efficiency: %.6g\n", last.efficiency);
  if (cfg.intermediate)
  {
    if (led.intermediate_iter)
      std::printf("intermediate stage: iteration %d, tail %d\n",
                  *led.intermediate_iter, *led.tail_length);
    else
      std::printf("intermediate stage: not reached\n");
  }
  std::printf("oscillation: %s\n", to_string(oscillation_grade(led.rows)).c_str());
  if (led.stop == StopReason::FitFailure)
    std::fprintf(stderr, "fit failed: %s\n", led.failure.c_str());
  return exit_code(led.stop);
}

struct SynthArgs
{
  std::string kind = "dunes";
  std::uint64_t seed = 1;
  std::size_t n = 100000;
  double noise = 0.0;
  double outliers = 0.0;
  std::string out;
};

int do_synth(const SynthArgs& a)
{
  SyntheticOptions opt;
  opt.kind = parse_synthetic_kind(a.kind);
  opt.seed = a.seed;
  opt.n_points = a.n;
  opt.noise = a.noise;
  opt.outlier_fraction = a.outliers;
  const SyntheticCloud s = gen_synthetic(opt);
  std::ofstream pts(a.out);
  if (!pts)
    throw Error("cannot open '" + a.out + "' for writing");
  write_points(pts, s.cloud);
  std::ofstream truth(a.out + ".truth");
  if (!truth)
    throw Error("cannot open '" + a.out + ".truth' for writing");
  write_truth(truth, s);
  std::size_t n_out = 0;
  for (char c : s.is_outlier)
    n_out += c != 0;
  std::printf("wrote %zu points (%zu outliers) to %s\n", s.cloud.size(), n_out,
              a.out.c_str());
  return 0;
}

struct ReportArgs
{
  std::string surface;
  std::string points;
  double tolerance = 0.0;
  std::string run;
  std::string intermediate;
};

int do_report(const ReportArgs& a)
{
  if (a.run.empty() && a.surface.empty())
    throw InputError("report needs --run, or --surface with --points");
  if (!a.surface.empty())
  {
    if (a.points.empty())
      throw InputError("--surface needs --points");
    const SurfaceDocument doc = read_surface_file(a.surface);
    double tol = a.tolerance;
    if (tol <= 0.0)
    {
      const auto it = doc.provenance.find("tolerance");
      if (it == doc.provenance.end())
        throw InputError("no --tolerance given and none recorded in the surface");
      tol = std::stod(it->second);
    }
    const PointCloud cloud = read_points(a.points);
    const AccuracyLedger acc =
        compute_accuracy(doc.surface, cloud, assign_points(doc.surface, cloud), tol);
    LedgerRow r;
    const auto it = doc.provenance.find("iterations");
    r.iter = it == doc.provenance.end() ? 0 : std::stoi(it->second);
    r.n_out = acc.global.n_out;
    r.n_points = acc.global.n_points;
    r.n_coeff = doc.surface.num_coefficients();
    r.max_dist = acc.global.max_dist;
    r.avg_dist = acc.global.avg_dist;
    r.avg_out_dist = acc.global.avg_out_dist;
    r.efficiency = approximation_efficiency(acc.global.n_resolved(), r.n_coeff);
    const auto st = doc.provenance.find("final_strategy");
    r.strategy = st == doc.provenance.end() ? "" : st->second;
    write_report(std::cout, {r});
  }
  if (!a.run.empty())
  {
    std::ifstream in(a.run);
    if (!in)
      throw InputError("cannot open '" + a.run + "' for reading");
    const auto rows = read_report(in);
    if (rows.empty())
      throw InputError("report '" + a.run + "' has no rows");
    const LedgerRow& last = rows.back();
    std::printf("iterations: %d\n", last.iter);
    std::printf("final: out %zu, coefficients %zu, max %.6g, avg %.6g, "
                "efficiency %.6g\n",
                last.n_out, last.n_coeff, last.max_dist, last.avg_dist,
                last.efficiency);
    if (!a.intermediate.empty())
    {
      const auto at = detect_intermediate(rows, parse_predicate(a.intermediate));
      if (at)
        std::printf("intermediate stage: iteration %d, tail %d\n", *at,
                    last.iter - *at);
      else
        std::printf("intermediate stage: not reached\n");
    }
    std::printf("oscillation: %s\n", to_string(oscillation_grade(rows)).c_str());
  }
  return 0;
}

int do_roundtrip(const std::string& path, int samples, std::uint64_t seed)
{
  const SurfaceDocument a = read_surface_file(path);
  std::ostringstream first;
  write_surface(first, a.surface, a.provenance);
  std::istringstream again(first.str());
  const SurfaceDocument b = read_surface(again);
  std::ostringstream second;
  write_surface(second, b.surface, b.provenance);

  const Domain d = a.surface.domain();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(d.u_min, d.u_max), v(d.v_min, d.v_max);
  double worst = 0.0;
  for (int k = 0; k < samples; ++k)
  {
    const double x = u(rng), y = v(rng);
    const double za = a.surface.evaluate(x, y), zb = b.surface.evaluate(x, y);
    const double scale = std::max(1.0, std::abs(za));
    worst = std::max(worst, std::abs(za - zb) / scale);
  }
  const bool same_text = first.str() == second.str();
  std::printf("samples: %d, max relative difference: %.3g, text stable: %s\n",
              samples, worst, same_text ? "yes" : "no");
  return worst <= 1e-15 && same_text ? 0 : 1;
}

} // namespace

int cli_main(int argc, char** argv)
{
  CLI::App app{"Adaptive LR B-spline approximation of scattered point clouds"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit an LR B-spline surface to a point cloud");
  f->add_option("--points", fit.points, "x y z point file")->required();
  f->add_option("--strategy", fit.strategy, "Refinement strategy label")
      ->capture_default_str();
  f->add_option("--tolerance", fit.tolerance, "Accepted vertical distance")
      ->required();
  f->add_option("--degree", fit.degree, "Polynomial degree p or p,q")
      ->capture_default_str();
  f->add_option("--max-iter", fit.max_iter, "Maximum refinement iterations")
      ->capture_default_str();
  f->add_option("--out", fit.out, "Surface document to write");
  f->add_option("--report", fit.report, "Per-iteration CSV report to write");
  f->add_option("--min-interval", fit.min_interval,
                "Never split knot intervals this narrow or narrower");
  f->add_option("--initial-grid", fit.initial_grid, "Initial elements NxM");
  f->add_option("--intermediate", fit.intermediate,
                "Intermediate stage predicate, e.g. \"out<=0.1%,max<=2\"");
  f->add_option("--lsq-iterations", fit.lsq_iterations,
                "Iterations fitted by least squares before switching to MBA")
      ->capture_default_str();
  f->add_option("--smoothing", fit.smoothing_ratio,
                "Smoothing weight relative to the data weight and domain area")
      ->capture_default_str();
  f->add_flag("--quiet", fit.quiet, "No per-iteration progress on stderr");
  f->footer(label_grammar());

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "Generate a synthetic point cloud");
  s->add_option("--kind", syn.kind, "dunes, peaks, scanlines or steps")
      ->capture_default_str();
  s->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  s->add_option("--n", syn.n, "Number of points")->capture_default_str();
  s->add_option("--noise", syn.noise, "Gaussian noise sigma")->capture_default_str();
  s->add_option("--outliers", syn.outliers, "Outlier fraction")
      ->capture_default_str();
  s->add_option("--out", syn.out, "Point file; truth goes to <out>.truth")
      ->required();

  std::string raster_surface, raster_out;
  int nx = 0, ny = 0;
  auto* r = app.add_subcommand("raster", "Sample a surface on a regular grid");
  r->add_option("--surface", raster_surface, "Surface document")->required();
  r->add_option("--nx", nx, "Columns")->required();
  r->add_option("--ny", ny, "Rows")->required();
  r->add_option("--out", raster_out, "ESRI ASCII grid to write")->required();

  ReportArgs rep;
  auto* p = app.add_subcommand("report", "Recompute or summarize accuracy reports");
  auto* rs = p->add_option("--surface", rep.surface, "Surface document");
  auto* rp = p->add_option("--points", rep.points, "Point file for --surface");
  auto* rt = p->add_option("--tolerance", rep.tolerance,
                           "Tolerance; defaults to the one stored with the surface");
  auto* rr = p->add_option("--run", rep.run, "CSV report from fit --report");
  p->add_option("--intermediate", rep.intermediate, "Intermediate stage predicate")
      ->needs(rr);
  rr->excludes(rs)->excludes(rp)->excludes(rt);
  rs->needs(rp);
  rt->needs(rs);

  std::string rt_surface;
  int rt_samples = 500;
  std::uint64_t rt_seed = 1;
  auto* t = app.add_subcommand("roundtrip-check",
                               "Check that a surface document survives a rewrite");
  t->add_option("--surface", rt_surface, "Surface document")->required();
  t->add_option("--samples", rt_samples, "Evaluation points")->capture_default_str();
  t->add_option("--seed", rt_seed, "Sampling seed")->capture_default_str();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e)
  {
    app.exit(e);
    return kExitInputError;
  }

  try
  {
    if (f->parsed())
      return do_fit(fit);
    if (s->parsed())
      return do_synth(syn);
    if (r->parsed())
    {
      sample_raster(read_surface_file(raster_surface).surface, nx, ny, raster_out);
      return 0;
    }
    if (p->parsed())
      return do_report(rep);
    if (t->parsed())
      return do_roundtrip(rt_surface, rt_samples, rt_seed);
  }
  catch (const InputError& e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
  catch (const FitError& e)
  {
    std::fprintf(stderr, "fit failed: %s\n", e.what());
    return exit_code(StopReason::FitFailure);
  }
  catch (const std::exception& e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

} // namespace lrfit
