#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace lrfit
{

/// Parameter direction. For mesh lines it names the parameter that is held
/// constant: a Param::U line sits at a fixed u value and runs along v.
enum class Param : std::uint8_t
{
  U = 0,
  V = 1
};

constexpr Param other(Param p) { return p == Param::U ? Param::V : Param::U; }
constexpr int axis(Param p) { return static_cast<int>(p); }

/// Sorted, distinct knot values per parameter direction. Everything else
/// in the mesh refers to knots by index into these tables.
struct KnotTable
{
  std::vector<double> u;
  std::vector<double> v;

  const std::vector<double>& values(Param p) const
  {
    return p == Param::U ? u : v;
  }
  std::vector<double>& values(Param p) { return p == Param::U ? u : v; }
  double value(Param p, int index) const { return values(p)[index]; }

  /// Index of an exact value, if present.
  std::optional<int> find(Param p, double x) const;

  /// Index i of the knot interval [t_i, t_{i+1}) containing x; the last
  /// interval is closed on the right. Returns -1 outside the table range.
  int interval_of(Param p, double x) const;

  double min(Param p) const { return values(p).front(); }
  double max(Param p) const { return values(p).back(); }
};

/// Axis-parallel meshline segment in index form. `fixed` indexes the
/// table of `dir`; [start, end] indexes the table of the other direction.
struct MeshSegment
{
  Param dir = Param::U;
  int fixed = 0;
  int start = 0;
  int end = 0;

  friend bool operator==(const MeshSegment&, const MeshSegment&) = default;
};

/// Minimal rectangle of the box partition, by knot index.
struct Element
{
  int u0 = 0;
  int u1 = 0;
  int v0 = 0;
  int v1 = 0;

  int lo(Param p) const { return p == Param::U ? u0 : v0; }
  int hi(Param p) const { return p == Param::U ? u1 : v1; }

  friend bool operator==(const Element&, const Element&) = default;
};

/// Index interval [start, end] of a coalesced meshline.
struct Span
{
  int start = 0;
  int end = 0;
};

/// Box partition of the parameter rectangle defined by axis-parallel
/// meshline segments.
///
/// Segments with equal direction and fixed value are kept coalesced.
/// Elements are maintained incrementally as segments are added; their
/// order is canonical, (v0, u0) lexicographic, after sort_elements().
class LRMesh
{
public:
  LRMesh() = default;

  /// Tensor grid over the given distinct, strictly increasing values.
  static LRMesh tensor(std::vector<double> u, std::vector<double> v);

  /// Mesh from a knot table and a segment list in index form. Throws
  /// InputError on bad indices, a missing boundary line, or segments that
  /// do not form a box partition.
  static LRMesh from_segments(KnotTable knots,
                              std::span<const MeshSegment> segments);

  const KnotTable& knots() const { return knots_; }
  const std::vector<Element>& elements() const { return elements_; }

  /// All segments, sorted by (dir, fixed, start).
  std::vector<MeshSegment> segments() const;

  /// Coalesced spans of the lines at a fixed index.
  std::span<const Span> lines(Param dir, int fixed) const;

  /// True if one segment at `fixed` covers the whole index range [lo, hi].
  bool covers(Param dir, int fixed, int lo, int hi) const;

  /// Extent of the coalesced line that results from adding [lo, hi] at
  /// `fixed` (the union with every existing span it touches or overlaps).
  Span merged_extent(Param dir, int fixed, int lo, int hi) const;

  /// Element containing (u, v) under the half-open convention (right/top
  /// closed on the domain boundary). Returns -1 outside the domain.
  int locate(double u, double v) const;

  /// Elements lying inside the index box [u0, u1] x [v0, v1], ascending.
  std::vector<int> elements_in_box(int u0, int u1, int v0, int v1) const;

  // -- Mutation. Used by SplineSpace, which keeps B-spline adjacency in
  // step through the callbacks and index maps returned here.

  /// Called as (parent, child) when an element is cut in two; the parent
  /// keeps the lower half.
  using SplitCallback = std::function<void(int, int)>;

  /// Add a segment: coalesce it with collinear spans and cut every element
  /// whose interior it crosses. Returns the coalesced extent. The caller
  /// must have checked that the segment ends on existing meshlines.
  Span add_segment(const MeshSegment& seg, const SplitCallback& on_split);

  /// Insert new values into the knot tables, remapping segments and
  /// elements. Returns old->new index maps for u and v.
  std::array<std::vector<int>, 2> insert_values(std::span<const double> u,
                                                std::span<const double> v);

  /// Drop table values that no segment or element refers to. Returns
  /// old->new index maps (-1 for removed values).
  std::array<std::vector<int>, 2> compact_values();

  /// Sort elements canonically and rebuild the point locator. Returns the
  /// old->new element index map.
  std::vector<int> sort_elements();

private:
  void add_line_only(const MeshSegment& seg);
  void rebuild_elements();
  void remap(const std::array<std::vector<int>, 2>& maps);
  void build_locator();

  KnotTable knots_;
  // lines_[axis][fixed] -> sorted, disjoint, non-touching spans.
  std::array<std::vector<std::vector<Span>>, 2> lines_;
  std::vector<Element> elements_;
  // columns_[i] -> elements covering u-interval i, sorted by v0.
  std::vector<std::vector<int>> columns_;
};

} // namespace lrfit
