#pragma once

#include "lrfit/bspline_basis.hpp"
#include "lrfit/lr_mesh.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace lrfit
{

/// Tensor-product B-spline with local knot vectors given as indices into
/// the mesh knot tables. Open-end multiplicity shows up as repeated
/// boundary indices.
struct TPBspline
{
  std::array<int, kMaxDegree + 2> knots_u{};
  std::array<int, kMaxDegree + 2> knots_v{};
  int degree_u = 0;
  int degree_v = 0;
  double coeff = 0.0; // height coefficient P_i
  double scale = 1.0; // partition-of-unity weight s_i

  int degree(Param p) const { return p == Param::U ? degree_u : degree_v; }
  std::span<const int> knots(Param p) const
  {
    return p == Param::U
               ? std::span<const int>(knots_u.data(), degree_u + 2)
               : std::span<const int>(knots_v.data(), degree_v + 2);
  }
  int first(Param p) const { return knots(p).front(); }
  int last(Param p) const { return knots(p).back(); }
  bool has_knot(Param p, int index) const;

  /// Same local knot vectors (coefficient and scale ignored).
  bool same_knots(const TPBspline& other) const;
};

/// Result of splitting one B-spline by a single knot.
struct BsplineSplit
{
  TPBspline first;
  double alpha_first = 1.0;
  TPBspline second;
  double alpha_second = 1.0;
};

/// Split b by inserting the table knot `index` in direction dir, so that
/// B = alpha_first * B_first + alpha_second * B_second. Children carry the
/// parent's coefficient and scale unchanged. Throws RefinementError if the
/// knot is not strictly inside the support or is already a local knot.
BsplineSplit split_bspline(const TPBspline& b, const KnotTable& knots,
                           Param dir, int index);

/// True iff no meshline traverses the full support of b at an interior
/// parameter value that is missing from b's local knot vectors.
bool has_minimal_support(const TPBspline& b, const LRMesh& mesh);

/// Knotline segment in value form: a line at parameter `dir` = at,
/// running over [from, to] in the other parameter. `from` and `to` must be
/// existing knot values; `at` may be new.
struct KnotSegment
{
  Param dir = Param::U;
  double at = 0.0;
  double from = 0.0;
  double to = 0.0;

  friend bool operator==(const KnotSegment&, const KnotSegment&) = default;
  friend auto operator<=>(const KnotSegment&, const KnotSegment&) = default;
};

enum class SegmentCheck
{
  Ok,
  OutsideDomain,    // `at` not strictly inside the domain
  BadSpan,          // from/to not knot values, or from >= to
  EndsInsideElement, // an endpoint does not lie on a meshline
  SplitsNothing,    // no B-spline gets a new legal interior knotline
};

std::string to_string(SegmentCheck c);

/// Weighted basis value with second derivatives, s_i times the tensor
/// product and its partials.
struct BasisHessian
{
  double value = 0.0;
  double uu = 0.0;
  double uv = 0.0;
  double vv = 0.0;
};

struct ApplyResult
{
  std::size_t inserted = 0;
  std::size_t dropped = 0;
};

/// LR B-spline space: an LR mesh plus the tensor-product B-splines living
/// on it, with element <-> B-spline adjacency.
///
/// Every public mutation leaves the space canonical: all B-splines have
/// minimal support, B-splines are sorted by (knots_v, knots_u), elements
/// by (v0, u0), and the scaled B-splines form a partition of unity.
class SplineSpace
{
public:
  SplineSpace() = default;

  /// Full tensor-product space over open knot vectors (end multiplicity
  /// p+1, interior multiplicity 1). Scales 1, coefficients 0.
  static SplineSpace tensor(std::span<const double> knots_u,
                            std::span<const double> knots_v, int degree_u,
                            int degree_v);

  /// Rebuild a space from stored segments and B-splines (file loading).
  /// Validates indices and minimal support.
  static SplineSpace from_parts(KnotTable knots,
                                std::span<const MeshSegment> segments,
                                std::vector<TPBspline> bsplines, int degree_u,
                                int degree_v);

  const LRMesh& mesh() const { return mesh_; }
  const KnotTable& knots() const { return mesh_.knots(); }
  int degree(Param p) const { return degree_[axis(p)]; }
  std::size_t size() const { return bsplines_.size(); }

  std::span<const TPBspline> bsplines() const { return bsplines_; }
  const TPBspline& bspline(int i) const { return bsplines_[i]; }

  /// Elements in the support of B-spline i, ascending.
  std::span<const int> support_elements(int i) const
  {
    return bspline_elements_[i];
  }
  /// B-splines whose support contains element e, ascending.
  std::span<const int> element_support(int e) const
  {
    return element_bsplines_[e];
  }

  std::vector<double> coefficients() const;
  void set_coefficients(std::span<const double> c);

  /// Weighted basis values s_i R_i(u, v) for the B-splines of
  /// element_support(e), in the same order.
  void basis_in_element(int e, double u, double v,
                        std::vector<double>& out) const;

  /// s_i R_i(u, v) for one B-spline (0 outside its support).
  double weighted_basis(int i, double u, double v) const;

  /// s_i R_i and its second partials at (u, v).
  BasisHessian weighted_basis_hessian(int i, double u, double v) const;

  /// Support box of B-spline i in parameter values.
  std::array<double, 4> support_box(int i) const;

  /// Read-only legality check for a segment.
  SegmentCheck check(const KnotSegment& s) const;

  /// Insert one knotline segment; splits B-splines, restores minimal
  /// support and preserves the represented surface. Throws
  /// RefinementError if the segment is illegal or splits nothing.
  void insert_segment(const KnotSegment& s);

  /// Insert segments one at a time, dropping those that are illegal when
  /// their turn comes.
  ApplyResult apply(std::span<const KnotSegment> segments);

  /// True if every B-spline has minimal support (test hook).
  bool all_minimal_support() const;

private:
  struct Key
  {
    std::array<int, 2 * (kMaxDegree + 2)> k{};
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash
  {
    std::size_t operator()(const Key& key) const noexcept;
  };

  Key key_of(const TPBspline& b) const;
  bool splits(const TPBspline& b, Param dir, int fixed, Span extent) const;
  void insert_indexed(Param dir, int fixed, int from, int to);
  bool find_traversing_line(const TPBspline& b, Param& dir, int& fixed) const;
  void split_into(int id, Param dir, int fixed, std::vector<int>& worklist);
  int add_bspline(const TPBspline& b, std::vector<int> elements);
  void kill_bspline(int id);
  void remap_knots(const std::array<std::vector<int>, 2>& maps);
  void canonicalize();
  void rebuild_index();

  LRMesh mesh_;
  std::array<int, 2> degree_{0, 0};
  std::vector<TPBspline> bsplines_;
  std::vector<std::vector<int>> bspline_elements_;
  std::vector<std::vector<int>> element_bsplines_;
  std::vector<char> alive_;
  std::unordered_map<Key, int, KeyHash> index_;
};

} // namespace lrfit
