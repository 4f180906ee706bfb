#include "lrfit/synthetic.hpp"

#include "lrfit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace lrfit
{

namespace
{

constexpr double kSide = 1000.0;

// Uniform and normal variates computed from raw engine output, so the
// stream is identical across standard library implementations.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal()
  {
    if (has_spare_)
    {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0)
      u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t index(std::uint64_t n) { return engine_() % n; }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

double franke(double x, double y)
{
  const double a = 9.0 * x, b = 9.0 * y;
  return 0.75 * std::exp(-((a - 2) * (a - 2) + (b - 2) * (b - 2)) / 4.0)
         + 0.75 * std::exp(-(a + 1) * (a + 1) / 49.0 - (b + 1) / 10.0)
         + 0.5 * std::exp(-((a - 7) * (a - 7) + (b - 3) * (b - 3)) / 4.0)
         - 0.2 * std::exp(-(a - 4) * (a - 4) - (b - 7) * (b - 7));
}

} // namespace

SyntheticKind parse_synthetic_kind(std::string_view name)
{
  if (name == "dunes")
    return SyntheticKind::Dunes;
  if (name == "peaks")
    return SyntheticKind::Peaks;
  if (name == "scanlines")
    return SyntheticKind::Scanlines;
  if (name == "steps")
    return SyntheticKind::Steps;
  throw InputError("unknown synthetic kind '" + std::string(name)
                   + "' (dunes, peaks, scanlines, steps)");
}

std::string to_string(SyntheticKind kind)
{
  switch (kind)
  {
  case SyntheticKind::Dunes:
    return "dunes";
  case SyntheticKind::Peaks:
    return "peaks";
  case SyntheticKind::Scanlines:
    return "scanlines";
  case SyntheticKind::Steps:
    return "steps";
  }
  return "dunes";
}

double synthetic_height(SyntheticKind kind, double x, double y)
{
  const double s = x / kSide, t = y / kSide;
  switch (kind)
  {
  case SyntheticKind::Dunes:
  {
    // Franke base with a field of asymmetric dune ridges under a
    // Gaussian envelope.
    const double env = std::exp(-((s - 0.6) * (s - 0.6) + (t - 0.45) * (t - 0.45))
                                / 0.06);
    const double phase = 2.0 * std::numbers::pi
                         * (7.0 * (0.8 * s + 0.6 * t)
                            + 0.4 * std::sin(2.0 * std::numbers::pi * 1.5 * t));
    const double ridge = std::sin(phase) + 0.25 * std::sin(2.0 * phase);
    return 10.0 * franke(s, t) + 1.5 * env * ridge;
  }
  case SyntheticKind::Peaks:
  {
    auto peak = [&](double cx, double cy, double h, double w) {
      const double r2 = (s - cx) * (s - cx) + (t - cy) * (t - cy);
      return h * std::exp(-r2 / (w * w));
    };
    const double ridge = 250.0 * std::exp(-std::pow((s + 0.6 * t - 0.9) / 0.04, 2));
    return 1000.0 + peak(0.35, 0.6, 800.0, 0.12) + peak(0.7, 0.3, 500.0, 0.05)
           + peak(0.55, 0.75, 300.0, 0.03) + ridge * (t > 0.2 ? 1.0 : 0.0);
  }
  case SyntheticKind::Scanlines:
    return -40.0 + 6.0 * std::sin(3.0 * s) * std::cos(2.0 * t)
           + 3.0 * std::tanh((s - 0.5) / 0.05) + 2.0 * t;
  case SyntheticKind::Steps:
    return 5.0 * std::floor(4.0 * s) + 3.0 * std::floor(3.0 * t);
  }
  return 0.0;
}

SyntheticCloud gen_synthetic(const SyntheticOptions& opt)
{
  if (opt.n_points < 100)
    throw InputError("synthetic clouds need at least 100 points");
  if (!(opt.outlier_fraction >= 0.0 && opt.outlier_fraction <= 1.0))
    throw InputError("outlier fraction must lie in [0, 1]");
  if (!(opt.noise >= 0.0))
    throw InputError("noise must be non-negative");

  Rng rng(opt.seed);
  SyntheticCloud out;
  const std::size_t n = opt.n_points;
  out.cloud.points.resize(n);
  out.z_true.resize(n);
  out.is_outlier.assign(n, 0);

  // Scan line positions: spacing varies between 4 and 16 m.
  std::vector<double> lines;
  if (opt.kind == SyntheticKind::Scanlines)
  {
    for (double y = 0.0; y <= kSide;)
    {
      lines.push_back(y);
      y += 4.0 + 12.0 * (0.5 + 0.5 * std::sin(y / 90.0));
    }
    lines.back() = kSide;
  }

  for (std::size_t k = 0; k < n; ++k)
  {
    double x, y;
    if (opt.kind == SyntheticKind::Scanlines)
    {
      x = rng.uniform(0.0, kSide);
      y = lines[rng.index(lines.size())];
    }
    else
    {
      x = rng.uniform(0.0, kSide);
      y = rng.uniform(0.0, kSide);
    }
    out.z_true[k] = synthetic_height(opt.kind, x, y);
    out.cloud.points[k] = {x, y, out.z_true[k] + opt.noise * rng.normal()};
  }

  // Outliers: distinct points chosen by a partial shuffle.
  const auto n_out = static_cast<std::size_t>(
      std::floor(opt.outlier_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k)
    order[k] = k;
  for (std::size_t k = 0; k < n_out; ++k)
  {
    const std::size_t j = k + rng.index(n - k);
    std::swap(order[k], order[j]);
    const std::size_t idx = order[k];
    Point3& p = out.cloud.points[idx];
    if (opt.kind == SyntheticKind::Scanlines && lines.size() > 1)
    {
      // Move the point between two scan lines.
      const std::size_t l = rng.index(lines.size() - 1);
      p.y = lines[l] + rng.uniform(0.25, 0.75) * (lines[l + 1] - lines[l]);
    }
    out.z_true[idx] = synthetic_height(opt.kind, p.x, p.y);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    p.z = out.z_true[idx] + sign * rng.uniform(5.0, 15.0);
    out.is_outlier[idx] = 1;
  }
  return out;
}

} // namespace lrfit
