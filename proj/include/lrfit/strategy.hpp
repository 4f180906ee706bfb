#pragma once

#include "lrfit/surface.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lrfit
{

enum class Trigger
{
  Element,
  Bspline
};

enum class StrategyKind
{
  FullSpan,
  MinSpan,
  Structured,
  Restricted
};

/// Minimum span selection: largest support (l), highest unresolved share
/// (u), or both with equal weight (c).
enum class MinSpanCriterion
{
  Largest,
  Unresolved,
  Combined
};

enum class DirectionPolicy
{
  Alternating,
  Both
};

struct ThresholdSet
{
  bool distance = false; // td
  bool element = false;  // tn
  bool interval = false; // tk

  bool any() const { return distance || element || interval; }
  friend bool operator==(const ThresholdSet&, const ThresholdSet&) = default;
};

/// Parsed strategy label.
///
/// Grammar: trigger (e|b), type (F|M<l|u|c> for elements, S|R for
/// B-splines), optional second component ("+eL" element extension on a
/// restricted mesh, "/eF" or "/F" switch to full span), direction (A|B),
/// then an optional threshold group such as "td", "tn", "tk", "td+k" or
/// "tk/n".
struct StrategySpec
{
  Trigger trigger = Trigger::Element;
  StrategyKind kind = StrategyKind::FullSpan;
  MinSpanCriterion criterion = MinSpanCriterion::Combined;
  bool element_extension = false;
  DirectionPolicy direction = DirectionPolicy::Both;
  ThresholdSet thresholds;
  /// Full span strategy taken over when progress stalls.
  std::shared_ptr<const StrategySpec> switch_to;

  friend bool operator==(const StrategySpec& a, const StrategySpec& b);
};

/// Parse a label such as "eFA tn", "bR+eLA tk" or "eMc/FA tn". Throws
/// InputError with the grammar on malformed or contradictory labels.
StrategySpec parse_label(std::string_view text);

/// Canonical label text; parse_label(label(s)) == s.
std::string label(const StrategySpec& spec);

/// Grammar summary for error messages and --help.
std::string label_grammar();

/// Refinement directions at loop iteration `iteration` (1-based). Param::U
/// means lines of constant u, refining the first parameter direction.
std::vector<Param> directions_for(DirectionPolicy policy, int iteration);

/// Threshold configuration and the per-strategy iteration counter that
/// drives the decay.
struct ThresholdState
{
  int iteration = 1; // iterations since the active strategy started
  double decay = 0.9;
  std::array<double, 3> td_weights{0.3, 0.4, 0.3}; // max, avg_out, tol
  std::array<double, 2> tn_weights{0.5, 0.5};      // min, max
  double tk_population_ratio = 100.0;
  double tk_population_fraction = 0.01;

  double factor() const;
};

struct Cutoffs
{
  double td = 0.0;
  double tn = 0.0;
  double tk = 0.0;
};

/// Statistics of all points in the support of each B-spline.
std::vector<ElementStats> support_stats(const SplineSpace& space,
                                        const AccuracyLedger& ledger);

/// Element significance score n_out * (1 + max_dist / tolerance).
double element_score(const ElementStats& s, double tolerance);

Cutoffs compute_thresholds(const AccuracyLedger& ledger,
                           const std::vector<ElementStats>& supports,
                           const ThresholdState& state);

/// Elements with out-of-tolerance points that pass the active thresholds.
std::vector<int> flag_elements(const AccuracyLedger& ledger,
                               const ThresholdSet& active, const Cutoffs& cut);

/// B-splines with out-of-tolerance points in their support that pass the
/// distance threshold when active.
std::vector<int> flag_bsplines(const std::vector<ElementStats>& supports,
                               const ThresholdSet& active, const Cutoffs& cut);

/// Deduplicated, ordered list of knotline segments in value form.
class RefinementPlan
{
public:
  /// Append unless an identical segment is already present.
  bool add(const KnotSegment& s);

  const std::vector<KnotSegment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }

private:
  std::vector<KnotSegment> segments_;
  std::set<KnotSegment> seen_;
};

/// Options shared by all planners.
struct PlanOptions
{
  /// Intervals no wider than this are never split.
  double min_interval = 0.0;
};

RefinementPlan plan_full_span(const std::vector<int>& elements,
                              const SplineSpace& space,
                              const std::vector<Param>& dirs,
                              const PlanOptions& opt = {});

RefinementPlan plan_min_span(const std::vector<int>& elements,
                             const SplineSpace& space,
                             const std::vector<ElementStats>& supports,
                             const std::vector<Param>& dirs,
                             MinSpanCriterion criterion,
                             const PlanOptions& opt = {});

RefinementPlan plan_structured(const std::vector<int>& bsplines,
                               const SplineSpace& space,
                               const std::vector<Param>& dirs,
                               const PlanOptions& opt = {});

/// Structured refinement limited to knot intervals whose element strip
/// holds out-of-tolerance points beyond the active tk/td cutoffs.
RefinementPlan plan_restricted(const std::vector<int>& bsplines,
                               const SplineSpace& space,
                               const AccuracyLedger& ledger,
                               const std::vector<Param>& dirs,
                               const ThresholdSet& active, const Cutoffs& cut,
                               const PlanOptions& opt = {});

/// Add full-span segments for tn-significant elements that no segment of
/// `plan` splits in a given direction.
RefinementPlan plan_element_extension(RefinementPlan plan,
                                      const AccuracyLedger& ledger,
                                      const SplineSpace& space,
                                      const std::vector<Param>& dirs,
                                      const Cutoffs& cut,
                                      const PlanOptions& opt = {});

/// Switch criterion: newly resolved points per new coefficient below 0.1,
/// or no new coefficients while points remain unresolved.
bool should_switch(long long resolved_delta, long long coeff_delta,
                   std::size_t n_unresolved);

/// Complete plan for one loop iteration under `spec`.
RefinementPlan make_plan(const StrategySpec& spec, const SplineSpace& space,
                         const AccuracyLedger& ledger,
                         const ThresholdState& state, int iteration,
                         const PlanOptions& opt = {});

} // namespace lrfit
