#include "lrfit/driver.hpp"

#include "lrfit/error.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>

namespace lrfit
{

bool StagePredicate::operator()(const LedgerRow& row) const
{
  std::vector<bool> terms;
  if (max_out_fraction)
  {
    const double frac = row.n_points
                            ? static_cast<double>(row.n_out)
                                  / static_cast<double>(row.n_points)
                            : 0.0;
    terms.push_back(frac <= *max_out_fraction);
  }
  if (max_dist_cap)
    terms.push_back(row.max_dist <= *max_dist_cap);
  if (avg_out_cap)
    terms.push_back(row.avg_out_dist <= *avg_out_cap);
  if (terms.empty())
    return false;
  if (combinator == Combinator::And)
    return std::all_of(terms.begin(), terms.end(), [](bool b) { return b; });
  return std::any_of(terms.begin(), terms.end(), [](bool b) { return b; });
}

StagePredicate parse_predicate(std::string_view text)
{
  auto fail = [&](const std::string& why) -> StagePredicate {
    throw InputError("invalid stage predicate '" + std::string(text) + "': "
                     + why + " (expected e.g. \"out<=0.1%,max<=2\")");
  };
  StagePredicate p;
  const bool has_and = text.find(',') != std::string_view::npos;
  const bool has_or = text.find('|') != std::string_view::npos;
  if (has_and && has_or)
    return fail("mixes ',' and '|'");
  p.combinator = has_or ? StagePredicate::Combinator::Or
                        : StagePredicate::Combinator::And;
  const char sep = has_or ? '|' : ',';

  std::size_t pos = 0;
  while (pos <= text.size())
  {
    const std::size_t end = std::min(text.find(sep, pos), text.size());
    std::string term;
    for (char c : text.substr(pos, end - pos))
      if (c != ' ' && c != '\t')
        term += c;
    pos = end + 1;

    const std::size_t op = term.find("<=");
    if (op == std::string::npos)
      return fail("term '" + term + "' lacks '<='");
    const std::string key = term.substr(0, op);
    std::string value = term.substr(op + 2);
    bool percent = false;
    if (!value.empty() && value.back() == '%')
    {
      percent = true;
      value.pop_back();
    }
    double x = 0.0;
    const auto [ptr, ec] =
        std::from_chars(value.data(), value.data() + value.size(), x);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()
        || !std::isfinite(x) || x < 0.0)
      return fail("bad number in '" + term + "'");
    if (percent && key != "out")
      return fail("'%' applies to out only");
    std::optional<double>* slot = key == "out"       ? &p.max_out_fraction
                                  : key == "max"     ? &p.max_dist_cap
                                  : key == "avg_out" ? &p.avg_out_cap
                                                     : nullptr;
    if (!slot)
      return fail("unknown key '" + key + "'");
    if (slot->has_value())
      return fail("key '" + key + "' repeated");
    *slot = percent ? x / 100.0 : x;
    if (end == text.size())
      break;
  }
  return p;
}

int exit_code(StopReason r)
{
  switch (r)
  {
  case StopReason::Converged:
    return 0;
  case StopReason::IterationCap:
    return 2;
  case StopReason::Stagnation:
    return 3;
  case StopReason::FitFailure:
    return 1;
  }
  return 1;
}

std::string to_string(StopReason r)
{
  switch (r)
  {
  case StopReason::Converged:
    return "converged";
  case StopReason::IterationCap:
    return "iteration cap";
  case StopReason::Stagnation:
    return "stagnation";
  case StopReason::FitFailure:
    return "fit failure";
  }
  return "unknown";
}

//-----------------------------------------------------------------------------

Domain bounding_box(const PointCloud& cloud)
{
  if (cloud.empty())
    throw InputError("empty point cloud");
  Domain d{cloud.points[0].x, cloud.points[0].x, cloud.points[0].y,
           cloud.points[0].y};
  for (const Point3& p : cloud.points)
  {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw InputError("point cloud contains non-finite coordinates");
    d.u_min = std::min(d.u_min, p.x);
    d.u_max = std::max(d.u_max, p.x);
    d.v_min = std::min(d.v_min, p.y);
    d.v_max = std::max(d.v_max, p.y);
  }
  if (!(d.u_max > d.u_min) || !(d.v_max > d.v_min))
    throw InputError("degenerate point cloud: the xy bounding box has zero area");
  return d;
}

std::array<int, 2> initial_grid(const RunConfig& cfg, const Domain& d)
{
  if (cfg.initial_elements)
  {
    const auto g = *cfg.initial_elements;
    if (g[0] < 1 || g[1] < 1)
      throw InputError("initial grid needs at least one element per direction");
    return g;
  }
  constexpr int kShort = 8;
  const double wu = d.u_max - d.u_min;
  const double wv = d.v_max - d.v_min;
  if (wu >= wv)
    return {std::max(kShort, static_cast<int>(std::lround(kShort * wu / wv))),
            kShort};
  return {kShort,
          std::max(kShort, static_cast<int>(std::lround(kShort * wv / wu)))};
}

namespace
{

std::vector<double> uniform_open(int p, int n, double a, double b)
{
  std::vector<double> t(p + 1, a);
  for (int i = 1; i < n; ++i)
    t.push_back(a + (b - a) * i / n);
  t.insert(t.end(), p + 1, b);
  return t;
}

LedgerRow make_row(int iter, const AccuracyLedger& acc, std::size_t n_coeff,
                   std::size_t segments, double wall_ms, std::string strategy)
{
  LedgerRow r;
  r.iter = iter;
  r.n_out = acc.global.n_out;
  r.n_points = acc.global.n_points;
  r.n_coeff = n_coeff;
  r.max_dist = acc.global.max_dist;
  r.avg_dist = acc.global.avg_dist;
  r.avg_out_dist = acc.global.avg_out_dist;
  r.efficiency = approximation_efficiency(acc.global.n_resolved(), n_coeff);
  r.segments = segments;
  r.wall_ms = wall_ms;
  r.strategy = std::move(strategy);
  return r;
}

double elapsed_ms(std::chrono::steady_clock::time_point since)
{
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - since)
      .count();
}

} // namespace

LRSurface make_initial_surface(const PointCloud& cloud, const RunConfig& cfg)
{
  const Domain d = bounding_box(cloud);
  const auto grid = initial_grid(cfg, d);
  LRSurface surface(SplineSpace::tensor(
      uniform_open(cfg.degree_u, grid[0], d.u_min, d.u_max),
      uniform_open(cfg.degree_v, grid[1], d.v_min, d.v_max), cfg.degree_u,
      cfg.degree_v));
  fit_step(surface, cloud, assign_points(surface, cloud), cfg.fit, 0);
  return surface;
}

RunResult run(const PointCloud& cloud, const RunConfig& cfg,
              const std::function<void(const LedgerRow&)>& on_row)
{
  if (!(cfg.tolerance > 0.0))
    throw InputError("tolerance must be positive");
  if (cfg.max_iterations < 0)
    throw InputError("max_iterations must be non-negative");

  auto t0 = std::chrono::steady_clock::now();
  RunResult out{make_initial_surface(cloud, cfg), {}};
  LRSurface& surface = out.surface;
  RunLedger& ledger = out.ledger;

  auto emit = [&](LedgerRow row) {
    if (on_row)
      on_row(row);
    ledger.rows.push_back(std::move(row));
  };

  PointAssignment assignment = assign_points(surface, cloud);
  AccuracyLedger acc = compute_accuracy(surface, cloud, assignment, cfg.tolerance);
  auto active = std::make_shared<const StrategySpec>(cfg.strategy);
  emit(make_row(0, acc, surface.num_coefficients(), 0, elapsed_ms(t0),
                label(*active)));

  ThresholdState state = cfg.thresholds;
  state.iteration = 1;
  PlanOptions opt;
  opt.min_interval = cfg.min_interval;
  int empty_streak = 0;

  ledger.stop = StopReason::IterationCap;
  for (int it = 1;; ++it)
  {
    if (acc.global.n_out == 0)
    {
      ledger.stop = StopReason::Converged;
      break;
    }
    if (it > cfg.max_iterations)
      break;

    t0 = std::chrono::steady_clock::now();
    const std::string planner = label(*active);
    const RefinementPlan plan =
        make_plan(*active, surface.space(), acc, state, it, opt);
    const ApplyResult applied = surface.space().apply(plan.segments());
    empty_streak = applied.inserted == 0 ? empty_streak + 1 : 0;
    if (empty_streak >= 2 && cfg.stop_on_stagnation)
    {
      ledger.stop = StopReason::Stagnation;
      ledger.stopped_no_segments = true;
      break;
    }

    assignment = assign_points(surface, cloud);
    try
    {
      fit_step(surface, cloud, assignment, cfg.fit, it);
    }
    catch (const FitError& e)
    {
      ledger.stop = StopReason::FitFailure;
      ledger.failure = e.what();
      break;
    }
    const GlobalStats before = acc.global;
    const std::size_t coeff_before = ledger.rows.back().n_coeff;
    acc = compute_accuracy(surface, cloud, assignment, cfg.tolerance);
    emit(make_row(it, acc, surface.num_coefficients(), applied.inserted,
                  elapsed_ms(t0), planner));

    const long long resolved_delta =
        static_cast<long long>(acc.global.n_resolved())
        - static_cast<long long>(before.n_resolved());
    const long long coeff_delta =
        static_cast<long long>(surface.num_coefficients())
        - static_cast<long long>(coeff_before);
    if (active->switch_to
        && should_switch(resolved_delta, coeff_delta, acc.global.n_out))
    {
      active = active->switch_to;
      state.iteration = 1;
      empty_streak = 0;
    }
    else
    {
      ++state.iteration;
    }
  }

  ledger.converged = ledger.stop == StopReason::Converged;
  if (cfg.intermediate)
  {
    ledger.intermediate_iter = detect_intermediate(ledger.rows, *cfg.intermediate);
    if (ledger.intermediate_iter)
      ledger.tail_length = ledger.rows.back().iter - *ledger.intermediate_iter;
  }
  return out;
}

std::optional<int> detect_intermediate(const std::vector<LedgerRow>& rows,
                                       const StagePredicate& predicate)
{
  for (const LedgerRow& r : rows)
    if (predicate(r))
      return r.iter;
  return std::nullopt;
}

std::string to_string(OscillationGrade g)
{
  switch (g)
  {
  case OscillationGrade::None:
    return "none";
  case OscillationGrade::Low:
    return "low";
  case OscillationGrade::Medium:
    return "medium";
  case OscillationGrade::High:
    return "high";
  }
  return "none";
}

namespace
{

template <typename Get>
int sign_changes(const std::vector<LedgerRow>& rows, Get get)
{
  int changes = 0;
  int last = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
  {
    const double d = get(rows[k]) - get(rows[k - 1]);
    const int s = (d > 0.0) - (d < 0.0);
    if (s == 0)
      continue;
    if (last != 0 && s != last)
      ++changes;
    last = s;
  }
  return changes;
}

} // namespace

OscillationGrade oscillation_grade(const std::vector<LedgerRow>& rows)
{
  if (rows.size() < 3)
    return OscillationGrade::None;
  const int n = std::max(
      sign_changes(rows, [](const LedgerRow& r) { return r.max_dist; }),
      sign_changes(rows, [](const LedgerRow& r) {
        return static_cast<double>(r.n_out);
      }));
  if (n == 0)
    return OscillationGrade::None;
  if (n <= 2)
    return OscillationGrade::Low;
  if (n <= 5)
    return OscillationGrade::Medium;
  return OscillationGrade::High;
}

} // namespace lrfit
