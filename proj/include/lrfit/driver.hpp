#pragma once

#include "lrfit/fitting.hpp"
#include "lrfit/strategy.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lrfit
{

/// One row of the per-iteration run report.
struct LedgerRow
{
  int iter = 0;
  std::size_t n_out = 0;
  std::size_t n_points = 0;
  std::size_t n_coeff = 0;
  double max_dist = 0.0;
  double avg_dist = 0.0;
  double avg_out_dist = 0.0;
  double efficiency = 0.0;
  std::size_t segments = 0; // segments inserted this iteration
  double wall_ms = 0.0;
  std::string strategy; // label of the strategy that planned this iteration
};

/// Accuracy predicate marking an intermediate stage, e.g.
/// "out<=0.1%,max<=2" (both) or "out<=0.1%|max<=2" (either).
struct StagePredicate
{
  enum class Combinator
  {
    And,
    Or
  };

  std::optional<double> max_out_fraction;
  std::optional<double> max_dist_cap;
  std::optional<double> avg_out_cap;
  Combinator combinator = Combinator::And;

  bool operator()(const LedgerRow& row) const;
};

/// Parse "key<=value" terms joined by ',' (and) or '|' (or). Keys: out
/// (fraction, or percent with a '%' suffix), max, avg_out.
StagePredicate parse_predicate(std::string_view text);

enum class StopReason
{
  Converged,
  IterationCap,
  Stagnation,
  FitFailure
};

/// Process exit code for a stop reason: 0 converged, 2 iteration cap,
/// 3 stagnation, 1 fit failure.
int exit_code(StopReason r);
std::string to_string(StopReason r);

/// Exit code for malformed input.
inline constexpr int kExitInputError = 4;

struct RunLedger
{
  std::vector<LedgerRow> rows;
  StopReason stop = StopReason::IterationCap;
  bool converged = false;
  bool stopped_no_segments = false;
  std::optional<int> intermediate_iter;
  std::optional<int> tail_length;
  std::string failure; // message when stop == FitFailure
};

struct RunConfig
{
  double tolerance = 0.0;
  int max_iterations = 40;
  int degree_u = 2;
  int degree_v = 2;
  /// Initial tensor grid in elements; unset: 8 on the shorter side of the
  /// domain, proportionally more on the longer one.
  std::optional<std::array<int, 2>> initial_elements;
  StrategySpec strategy = parse_label("eFB");
  FitConfig fit;
  double min_interval = 0.0;
  std::optional<StagePredicate> intermediate;
  ThresholdState thresholds;
  /// Stop after two consecutive iterations without an inserted segment.
  bool stop_on_stagnation = true;
};

struct RunResult
{
  LRSurface surface;
  RunLedger ledger;
};

/// Grid of the initial tensor space for a domain.
std::array<int, 2> initial_grid(const RunConfig& cfg, const Domain& domain);

/// Bounding box of the cloud in x and y. Throws InputError for an empty
/// cloud or a degenerate box.
Domain bounding_box(const PointCloud& cloud);

/// Uniform tensor space over the cloud's bounding box with zero
/// coefficients, fitted by the method scheduled for iteration 0.
LRSurface make_initial_surface(const PointCloud& cloud, const RunConfig& cfg);

/// The adaptive loop: refine, fit, measure, until no point is out of
/// tolerance, the iteration cap is hit, or refinement stagnates.
RunResult run(const PointCloud& cloud, const RunConfig& cfg,
              const std::function<void(const LedgerRow&)>& on_row = {});

/// First iteration whose row satisfies the predicate.
std::optional<int> detect_intermediate(const std::vector<LedgerRow>& rows,
                                       const StagePredicate& predicate);

enum class OscillationGrade
{
  None,
  Low,
  Medium,
  High
};

std::string to_string(OscillationGrade g);

/// Grade by the larger number of sign changes in the iteration-to-iteration
/// changes of max distance and out-of-tolerance count: 0 none, 1-2 low,
/// 3-5 medium, more high.
OscillationGrade oscillation_grade(const std::vector<LedgerRow>& rows);

} // namespace lrfit
