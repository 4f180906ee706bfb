#include "lrfit/strategy.hpp"

#include "lrfit/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace lrfit
{

bool operator==(const StrategySpec& a, const StrategySpec& b)
{
  if (a.trigger != b.trigger || a.kind != b.kind
      || a.element_extension != b.element_extension
      || a.direction != b.direction || !(a.thresholds == b.thresholds))
    return false;
  if (a.kind == StrategyKind::MinSpan && a.criterion != b.criterion)
    return false;
  if (!a.switch_to || !b.switch_to)
    return !a.switch_to && !b.switch_to;
  return *a.switch_to == *b.switch_to;
}

//-----------------------------------------------------------------------------
// Labels

std::string label_grammar()
{
  return "strategy label: <trigger><type>[<sub>][<second>]<dir> [<thresholds>]\n"
         "  trigger     e (element) | b (B-spline)\n"
         "  type        F full span | M minimum span (element);"
         " S structured | R restricted (B-spline)\n"
         "  sub         l | u | c, minimum span only\n"
         "  second      /F after M, /eF or +eL after R\n"
         "  dir         A alternating | B both\n"
         "  thresholds  td | tn | tk, combined with + (same stage) or /"
         " (before and after a switch); tn on element strategies,"
         " tk on restricted mesh only\n"
         "  examples    eFA tn, eMlB, eMc/FA tn, bSB td, bRA td+k,"
         " bR/eFB tk/n, bR+eLA tk";
}

namespace
{

[[noreturn]] void bad_label(std::string_view text, const std::string& why)
{
  throw InputError("invalid strategy label '" + std::string(text) + "': " + why
                   + "\n" + label_grammar());
}

bool threshold_allowed(const StrategySpec& s, char t)
{
  switch (t)
  {
  case 'd':
    return true;
  case 'n':
    return s.trigger == Trigger::Element;
  case 'k':
    return s.kind == StrategyKind::Restricted;
  default:
    return false;
  }
}

void set_threshold(ThresholdSet& set, char t)
{
  (t == 'd' ? set.distance : t == 'n' ? set.element : set.interval) = true;
}

std::string threshold_letters(const ThresholdSet& t)
{
  std::string out;
  if (t.distance)
    out += 'd';
  if (t.element)
    out += 'n';
  if (t.interval)
    out += 'k';
  return out;
}

std::string join_plus(const std::string& letters)
{
  std::string out;
  for (char c : letters)
  {
    if (!out.empty())
      out += '+';
    out += c;
  }
  return out;
}

} // namespace

StrategySpec parse_label(std::string_view text)
{
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1])))
    --e;
  const std::string_view trimmed = text.substr(b, e - b);
  const std::size_t gap = trimmed.find_first_of(" \t");
  const std::string_view main = trimmed.substr(0, gap);
  std::string_view tail;
  if (gap != std::string_view::npos)
  {
    tail = trimmed.substr(gap);
    while (!tail.empty() && std::isspace(static_cast<unsigned char>(tail[0])))
      tail.remove_prefix(1);
  }
  if (main.empty())
    bad_label(text, "empty label");

  StrategySpec s;
  std::size_t i = 0;
  auto peek = [&]() -> char { return i < main.size() ? main[i] : '\0'; };

  switch (peek())
  {
  case 'e':
    s.trigger = Trigger::Element;
    break;
  case 'b':
    s.trigger = Trigger::Bspline;
    break;
  default:
    bad_label(text, "trigger must be 'e' or 'b'");
  }
  ++i;

  const char type = peek();
  ++i;
  if (s.trigger == Trigger::Element && type == 'F')
    s.kind = StrategyKind::FullSpan;
  else if (s.trigger == Trigger::Element && type == 'M')
    s.kind = StrategyKind::MinSpan;
  else if (s.trigger == Trigger::Bspline && type == 'S')
    s.kind = StrategyKind::Structured;
  else if (s.trigger == Trigger::Bspline && type == 'R')
    s.kind = StrategyKind::Restricted;
  else
    bad_label(text, std::string("unknown strategy type '")
                        + (type ? std::string(1, type) : std::string())
                        + "' for this trigger");

  if (const char c = peek(); c == 'l' || c == 'u' || c == 'c')
  {
    if (s.kind != StrategyKind::MinSpan)
      bad_label(text, "a selection criterion applies to minimum span only");
    s.criterion = c == 'l'   ? MinSpanCriterion::Largest
                  : c == 'u' ? MinSpanCriterion::Unresolved
                             : MinSpanCriterion::Combined;
    ++i;
  }
  else if (s.kind == StrategyKind::MinSpan)
  {
    bad_label(text, "minimum span needs a criterion l, u or c");
  }

  bool switches = false;
  if (peek() == '+')
  {
    ++i;
    if (peek() == 'e')
      ++i;
    if (peek() != 'L')
      bad_label(text, "'+' must be followed by the element extension eL");
    if (s.kind != StrategyKind::Restricted)
      bad_label(text, "element extension applies to the restricted mesh only");
    s.element_extension = true;
    ++i;
  }
  else if (peek() == '/')
  {
    ++i;
    if (peek() == 'e')
      ++i;
    if (peek() != 'F')
      bad_label(text, "'/' must be followed by the full span strategy F");
    if (s.kind != StrategyKind::MinSpan && s.kind != StrategyKind::Restricted)
      bad_label(text, "only minimum span and restricted mesh can switch");
    switches = true;
    ++i;
  }

  const char dir = peek();
  if (dir == 'A')
    s.direction = DirectionPolicy::Alternating;
  else if (dir == 'B')
    s.direction = DirectionPolicy::Both;
  else
    bad_label(text, "direction must be 'A' or 'B'");
  ++i;
  if (i != main.size())
    bad_label(text, "unexpected trailing characters");

  StrategySpec next;
  if (switches)
  {
    next.trigger = Trigger::Element;
    next.kind = StrategyKind::FullSpan;
    next.direction = s.direction;
  }

  if (!tail.empty())
  {
    if (tail.size() < 2 || tail[0] != 't')
      bad_label(text, "thresholds start with 't'");
    bool slash = false;
    bool expect_letter = true;
    for (std::size_t k = 1; k < tail.size(); ++k)
    {
      const char c = tail[k];
      if (expect_letter)
      {
        if (c != 'd' && c != 'n' && c != 'k')
          bad_label(text, std::string("unknown threshold '") + c + "'");
        const bool here = threshold_allowed(s, c);
        const bool there = switches && threshold_allowed(next, c);
        if (!here && !there)
          bad_label(text, c == 'k' ? "tk applies to the restricted mesh only"
                                   : "tn applies to element strategies only");
        if (here)
          set_threshold(s.thresholds, c);
        if (there)
          set_threshold(next.thresholds, c);
        expect_letter = false;
      }
      else if (c == '+' || c == '/')
      {
        if (c == '/')
        {
          if (!switches || slash)
            bad_label(text, "'/' between thresholds needs a strategy switch");
          slash = true;
        }
        expect_letter = true;
      }
      else
      {
        bad_label(text, "thresholds are joined by '+' or '/'");
      }
    }
    if (expect_letter)
      bad_label(text, "dangling threshold separator");
  }

  if (switches)
    s.switch_to = std::make_shared<const StrategySpec>(next);
  return s;
}

std::string label(const StrategySpec& s)
{
  std::string out(1, s.trigger == Trigger::Element ? 'e' : 'b');
  switch (s.kind)
  {
  case StrategyKind::FullSpan:
    out += 'F';
    break;
  case StrategyKind::MinSpan:
    out += 'M';
    out += s.criterion == MinSpanCriterion::Largest      ? 'l'
           : s.criterion == MinSpanCriterion::Unresolved ? 'u'
                                                          : 'c';
    break;
  case StrategyKind::Structured:
    out += 'S';
    break;
  case StrategyKind::Restricted:
    out += 'R';
    break;
  }
  if (s.element_extension)
    out += "+eL";
  if (s.switch_to)
    out += s.trigger == Trigger::Element ? "/F" : "/eF";
  out += s.direction == DirectionPolicy::Alternating ? 'A' : 'B';

  const std::string first = threshold_letters(s.thresholds);
  std::string second;
  if (s.switch_to)
    for (char c : threshold_letters(s.switch_to->thresholds))
      if (first.find(c) == std::string::npos)
        second += c;
  if (!first.empty() || !second.empty())
  {
    out += " t";
    if (first.empty())
      out += join_plus(second);
    else if (second.empty())
      out += join_plus(first);
    else
      out += join_plus(first) + "/" + join_plus(second);
  }
  return out;
}

std::vector<Param> directions_for(DirectionPolicy policy, int iteration)
{
  if (policy == DirectionPolicy::Both)
    return {Param::U, Param::V};
  return {iteration % 2 == 1 ? Param::U : Param::V};
}

//-----------------------------------------------------------------------------
// Thresholds and flags

double ThresholdState::factor() const
{
  return std::pow(decay, std::max(iteration, 1));
}

std::vector<ElementStats> support_stats(const SplineSpace& space,
                                        const AccuracyLedger& ledger)
{
  std::vector<ElementStats> out(space.size());
  for (std::size_t i = 0; i < space.size(); ++i)
  {
    ElementStats& s = out[i];
    for (int e : space.support_elements(static_cast<int>(i)))
    {
      const ElementStats& el = ledger.per_element[e];
      s.n_points += el.n_points;
      s.n_out += el.n_out;
      s.max_dist = std::max(s.max_dist, el.max_dist);
      s.sum_dist += el.sum_dist;
      s.sum_out_dist += el.sum_out_dist;
    }
  }
  return out;
}

double element_score(const ElementStats& s, double tolerance)
{
  return static_cast<double>(s.n_out) * (1.0 + s.max_dist / tolerance);
}

Cutoffs compute_thresholds(const AccuracyLedger& ledger,
                           const std::vector<ElementStats>& supports,
                           const ThresholdState& state)
{
  const double f = state.factor();
  const GlobalStats& g = ledger.global;
  Cutoffs c;
  c.td = f
         * (state.td_weights[0] * g.max_dist
            + state.td_weights[1] * g.avg_out_dist
            + state.td_weights[2] * ledger.tolerance);

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const ElementStats& s : ledger.per_element)
  {
    const double score = element_score(s, ledger.tolerance);
    lo = std::min(lo, score);
    hi = std::max(hi, score);
  }
  if (ledger.per_element.empty())
    lo = 0.0;
  c.tn = f * (state.tn_weights[0] * lo + state.tn_weights[1] * hi);

  double mean_out = 0.0;
  double mean_pts = 0.0;
  for (const ElementStats& s : supports)
  {
    mean_out += static_cast<double>(s.n_out);
    mean_pts += static_cast<double>(s.n_points);
  }
  if (!supports.empty())
  {
    mean_out /= static_cast<double>(supports.size());
    mean_pts /= static_cast<double>(supports.size());
  }
  const double base = mean_pts > state.tk_population_ratio * mean_out
                          ? state.tk_population_fraction * mean_pts
                          : mean_out;
  c.tk = f * base;
  return c;
}

std::vector<int> flag_elements(const AccuracyLedger& ledger,
                               const ThresholdSet& active, const Cutoffs& cut)
{
  std::vector<int> out;
  for (std::size_t e = 0; e < ledger.per_element.size(); ++e)
  {
    const ElementStats& s = ledger.per_element[e];
    if (s.n_out == 0)
      continue;
    if (active.distance && !(s.max_dist > cut.td))
      continue;
    if (active.element && !(element_score(s, ledger.tolerance) > cut.tn))
      continue;
    out.push_back(static_cast<int>(e));
  }
  return out;
}

std::vector<int> flag_bsplines(const std::vector<ElementStats>& supports,
                               const ThresholdSet& active, const Cutoffs& cut)
{
  std::vector<int> out;
  for (std::size_t i = 0; i < supports.size(); ++i)
  {
    const ElementStats& s = supports[i];
    if (s.n_out == 0)
      continue;
    if (active.distance && !(s.max_dist > cut.td))
      continue;
    out.push_back(static_cast<int>(i));
  }
  return out;
}

//-----------------------------------------------------------------------------
// Planners

bool RefinementPlan::add(const KnotSegment& s)
{
  if (!seen_.insert(s).second)
    return false;
  segments_.push_back(s);
  return true;
}

namespace
{

// Midpoint of [a, b] if the interval may be split.
bool split_point(double a, double b, const PlanOptions& opt, double& mid)
{
  if (!(b - a > opt.min_interval))
    return false;
  mid = 0.5 * (a + b);
  return a < mid && mid < b;
}

struct Box
{
  double lo[2];
  double hi[2];
};

Box element_box(const SplineSpace& space, int e)
{
  const Element& el = space.mesh().elements()[e];
  const KnotTable& t = space.knots();
  return {{t.u[el.u0], t.v[el.v0]}, {t.u[el.u1], t.v[el.v1]}};
}

Box support_box_of(const SplineSpace& space, int i)
{
  const auto b = space.support_box(i);
  return {{b[0], b[2]}, {b[1], b[3]}};
}

void add_full_span(RefinementPlan& plan, const SplineSpace& space, int e,
                   Param d, const PlanOptions& opt)
{
  const Box box = element_box(space, e);
  double mid;
  if (!split_point(box.lo[axis(d)], box.hi[axis(d)], opt, mid))
    return;
  const int o = axis(other(d));
  double from = box.lo[o], to = box.hi[o];
  for (int i : space.element_support(e))
  {
    const Box s = support_box_of(space, i);
    from = std::min(from, s.lo[o]);
    to = std::max(to, s.hi[o]);
  }
  plan.add({d, mid, from, to});
}

} // namespace

RefinementPlan plan_full_span(const std::vector<int>& elements,
                              const SplineSpace& space,
                              const std::vector<Param>& dirs,
                              const PlanOptions& opt)
{
  RefinementPlan plan;
  for (int e : elements)
    for (Param d : dirs)
      add_full_span(plan, space, e, d, opt);
  return plan;
}

RefinementPlan plan_min_span(const std::vector<int>& elements,
                             const SplineSpace& space,
                             const std::vector<ElementStats>& supports,
                             const std::vector<Param>& dirs,
                             MinSpanCriterion criterion,
                             const PlanOptions& opt)
{
  RefinementPlan plan;
  std::vector<double> area, share, score;
  for (int e : elements)
  {
    const auto cands = space.element_support(e);
    const std::size_t n = cands.size();
    area.resize(n);
    share.resize(n);
    for (std::size_t k = 0; k < n; ++k)
    {
      const Box s = support_box_of(space, cands[k]);
      area[k] = (s.hi[0] - s.lo[0]) * (s.hi[1] - s.lo[1]);
      const ElementStats& st = supports[cands[k]];
      share[k] = st.n_points ? static_cast<double>(st.n_out)
                                   / static_cast<double>(st.n_points)
                             : 0.0;
    }
    auto normalized = [](const std::vector<double>& x, std::size_t k) {
      const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
      return *hi > *lo ? (x[k] - *lo) / (*hi - *lo) : 0.0;
    };
    score.resize(n);
    for (std::size_t k = 0; k < n; ++k)
    {
      switch (criterion)
      {
      case MinSpanCriterion::Largest:
        score[k] = area[k];
        break;
      case MinSpanCriterion::Unresolved:
        score[k] = share[k];
        break;
      case MinSpanCriterion::Combined:
        score[k] = 0.5 * (normalized(area, k) + normalized(share, k));
        break;
      }
    }

    const Box el = element_box(space, e);
    const double cu = 0.5 * (el.lo[0] + el.hi[0]);
    const double cv = 0.5 * (el.lo[1] + el.hi[1]);
    auto offcenter = [&](std::size_t k) {
      const Box s = support_box_of(space, cands[k]);
      const double du = 0.5 * (s.lo[0] + s.hi[0]) - cu;
      const double dv = 0.5 * (s.lo[1] + s.hi[1]) - cv;
      return du * du + dv * dv;
    };
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
    {
      if (score[k] > score[best]
          || (score[k] == score[best] && offcenter(k) < offcenter(best)))
        best = k;
    }

    const Box chosen = support_box_of(space, cands[best]);
    for (Param d : dirs)
    {
      double mid;
      if (!split_point(el.lo[axis(d)], el.hi[axis(d)], opt, mid))
        continue;
      const int o = axis(other(d));
      plan.add({d, mid, chosen.lo[o], chosen.hi[o]});
    }
  }
  return plan;
}

RefinementPlan plan_structured(const std::vector<int>& bsplines,
                               const SplineSpace& space,
                               const std::vector<Param>& dirs,
                               const PlanOptions& opt)
{
  RefinementPlan plan;
  const KnotTable& t = space.knots();
  for (int i : bsplines)
  {
    const TPBspline& b = space.bspline(i);
    for (Param d : dirs)
    {
      const Param o = other(d);
      const auto k = b.knots(d);
      for (std::size_t j = 0; j + 1 < k.size(); ++j)
      {
        double mid;
        if (k[j] == k[j + 1]
            || !split_point(t.value(d, k[j]), t.value(d, k[j + 1]), opt, mid))
          continue;
        plan.add({d, mid, t.value(o, b.first(o)), t.value(o, b.last(o))});
      }
    }
  }
  return plan;
}

RefinementPlan plan_restricted(const std::vector<int>& bsplines,
                               const SplineSpace& space,
                               const AccuracyLedger& ledger,
                               const std::vector<Param>& dirs,
                               const ThresholdSet& active, const Cutoffs& cut,
                               const PlanOptions& opt)
{
  RefinementPlan plan;
  const KnotTable& t = space.knots();
  const auto& elements = space.mesh().elements();
  std::vector<std::size_t> strip_out;
  std::vector<double> strip_max;
  for (int i : bsplines)
  {
    const TPBspline& b = space.bspline(i);
    for (Param d : dirs)
    {
      const Param o = other(d);
      const auto k = b.knots(d);
      const std::size_t n_int = k.size() - 1;
      strip_out.assign(n_int, 0);
      strip_max.assign(n_int, 0.0);
      for (int e : space.support_elements(i))
      {
        // Local knot interval holding the element in direction d.
        const int lo = elements[e].lo(d);
        std::size_t j = 0;
        while (j + 1 < n_int && k[j + 1] <= lo)
          ++j;
        strip_out[j] += ledger.per_element[e].n_out;
        strip_max[j] = std::max(strip_max[j], ledger.per_element[e].max_dist);
      }
      for (std::size_t j = 0; j < n_int; ++j)
      {
        if (k[j] == k[j + 1] || strip_out[j] == 0)
          continue;
        if (active.interval && !(static_cast<double>(strip_out[j]) > cut.tk))
          continue;
        if (active.distance && !(strip_max[j] > cut.td))
          continue;
        double mid;
        if (!split_point(t.value(d, k[j]), t.value(d, k[j + 1]), opt, mid))
          continue;
        plan.add({d, mid, t.value(o, b.first(o)), t.value(o, b.last(o))});
      }
    }
  }
  return plan;
}

RefinementPlan plan_element_extension(RefinementPlan plan,
                                      const AccuracyLedger& ledger,
                                      const SplineSpace& space,
                                      const std::vector<Param>& dirs,
                                      const Cutoffs& cut,
                                      const PlanOptions& opt)
{
  ThresholdSet tn;
  tn.element = true;
  const std::vector<int> significant = flag_elements(ledger, tn, cut);
  const std::vector<KnotSegment> base = plan.segments();
  for (int e : significant)
  {
    const Box box = element_box(space, e);
    for (Param d : dirs)
    {
      const int a = axis(d), o = axis(other(d));
      const bool split = std::any_of(
          base.begin(), base.end(), [&](const KnotSegment& s) {
            return s.dir == d && box.lo[a] < s.at && s.at < box.hi[a]
                   && s.from < box.hi[o] && s.to > box.lo[o];
          });
      if (!split)
        add_full_span(plan, space, e, d, opt);
    }
  }
  return plan;
}

bool should_switch(long long resolved_delta, long long coeff_delta,
                   std::size_t n_unresolved)
{
  if (coeff_delta > 0)
    return static_cast<double>(resolved_delta)
               / static_cast<double>(coeff_delta)
           < 0.1;
  return coeff_delta == 0 && n_unresolved > 0;
}

RefinementPlan make_plan(const StrategySpec& spec, const SplineSpace& space,
                         const AccuracyLedger& ledger,
                         const ThresholdState& state, int iteration,
                         const PlanOptions& opt)
{
  const std::vector<Param> dirs = directions_for(spec.direction, iteration);
  const std::vector<ElementStats> supports = support_stats(space, ledger);
  const Cutoffs cut = compute_thresholds(ledger, supports, state);

  RefinementPlan plan;
  switch (spec.kind)
  {
  case StrategyKind::FullSpan:
    plan = plan_full_span(flag_elements(ledger, spec.thresholds, cut), space,
                          dirs, opt);
    break;
  case StrategyKind::MinSpan:
    plan = plan_min_span(flag_elements(ledger, spec.thresholds, cut), space,
                         supports, dirs, spec.criterion, opt);
    break;
  case StrategyKind::Structured:
    plan = plan_structured(flag_bsplines(supports, spec.thresholds, cut), space,
                           dirs, opt);
    break;
  case StrategyKind::Restricted:
    plan = plan_restricted(flag_bsplines(supports, spec.thresholds, cut), space,
                           ledger, dirs, spec.thresholds, cut, opt);
    break;
  }
  if (spec.element_extension)
    plan = plan_element_extension(std::move(plan), ledger, space, dirs, cut,
                                  opt);
  return plan;
}

} // namespace lrfit
