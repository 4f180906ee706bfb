#include "lrfit/spline_space.hpp"

#include "lrfit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lrfit
{

namespace
{

// Local knot values of b in direction p.
std::array<double, kMaxDegree + 2> knot_values(const TPBspline& b,
                                               const KnotTable& t, Param p)
{
  std::array<double, kMaxDegree + 2> out{};
  const auto idx = b.knots(p);
  for (std::size_t k = 0; k < idx.size(); ++k)
    out[k] = t.value(p, idx[k]);
  return out;
}

bool lex_less(const TPBspline& a, const TPBspline& b)
{
  const auto av = a.knots(Param::V);
  const auto bv = b.knots(Param::V);
  if (!std::equal(av.begin(), av.end(), bv.begin(), bv.end()))
    return std::lexicographical_compare(av.begin(), av.end(), bv.begin(),
                                        bv.end());
  const auto au = a.knots(Param::U);
  const auto bu = b.knots(Param::U);
  return std::lexicographical_compare(au.begin(), au.end(), bu.begin(),
                                      bu.end());
}

// Knot vector of an open tensor direction, checked and mapped to indices.
struct OpenKnots
{
  std::vector<double> distinct;
  std::vector<int> index; // per entry of the full vector
};

OpenKnots parse_open_knots(std::span<const double> t, int p, char name)
{
  const std::string dir(1, name);
  if (p < 1 || p > kMaxDegree)
    throw InputError("degree must be 1, 2 or 3");
  const int n = static_cast<int>(t.size());
  if (n < 2 * (p + 1))
    throw InputError("knot vector " + dir + " is too short for degree "
                     + std::to_string(p));
  for (int i = 1; i < n; ++i)
    if (t[i] < t[i - 1])
      throw InputError("knot vector " + dir + " is not non-decreasing");
  for (int i = 1; i <= p; ++i)
    if (t[i] != t[0] || t[n - 1 - i] != t[n - 1])
      throw InputError("knot vector " + dir
                       + " needs end multiplicity degree+1");
  for (int i = p; i < n - p - 1; ++i)
    if (!(t[i] < t[i + 1]))
      throw RefinementError("knot vector " + dir
                            + " has an interior knot of multiplicity > 1");
  OpenKnots out;
  out.distinct.assign(t.begin() + p, t.end() - p);
  out.index.resize(n);
  for (int i = 0; i < n; ++i)
    out.index[i] = std::clamp(i - p, 0, n - 2 * p - 1);
  return out;
}

} // namespace

//-----------------------------------------------------------------------------
bool TPBspline::has_knot(Param p, int index) const
{
  const auto k = knots(p);
  return std::find(k.begin(), k.end(), index) != k.end();
}

bool TPBspline::same_knots(const TPBspline& o) const
{
  const auto eq = [](std::span<const int> a, std::span<const int> b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
  };
  return eq(knots(Param::U), o.knots(Param::U))
         && eq(knots(Param::V), o.knots(Param::V));
}

BsplineSplit split_bspline(const TPBspline& b, const KnotTable& knots,
                           Param dir, int index)
{
  const auto idx = b.knots(dir);
  const int p = b.degree(dir);
  if (!(idx.front() < index && index < idx.back()))
    throw RefinementError("split knot is not strictly inside the support");
  if (b.has_knot(dir, index))
    throw RefinementError(
        "split knot is already a local knot (multiplicity increase is not "
        "supported)");

  std::array<int, kMaxDegree + 3> merged{};
  int m = 0;
  bool placed = false;
  for (int k : idx)
  {
    if (!placed && index < k)
    {
      merged[m++] = index;
      placed = true;
    }
    merged[m++] = k;
  }

  const auto values = knot_values(b, knots, dir);
  const auto [a1, a2] = knot_insertion_weights(
      std::span<const double>(values.data(), p + 2), knots.value(dir, index));

  BsplineSplit out{b, a1, b, a2};
  auto& first = dir == Param::U ? out.first.knots_u : out.first.knots_v;
  auto& second = dir == Param::U ? out.second.knots_u : out.second.knots_v;
  for (int k = 0; k < p + 2; ++k)
  {
    first[k] = merged[k];
    second[k] = merged[k + 1];
  }
  return out;
}

bool has_minimal_support(const TPBspline& b, const LRMesh& mesh)
{
  for (Param d : {Param::U, Param::V})
  {
    const Param o = other(d);
    for (int f = b.first(d) + 1; f < b.last(d); ++f)
      if (!b.has_knot(d, f) && mesh.covers(d, f, b.first(o), b.last(o)))
        return false;
  }
  return true;
}

std::string to_string(SegmentCheck c)
{
  switch (c)
  {
  case SegmentCheck::Ok:
    return "ok";
  case SegmentCheck::OutsideDomain:
    return "segment position is not strictly inside the domain";
  case SegmentCheck::BadSpan:
    return "segment extent is not a pair of increasing knot values";
  case SegmentCheck::EndsInsideElement:
    return "segment ends inside an element";
  case SegmentCheck::SplitsNothing:
    return "segment must split at least one B-spline";
  }
  return "unknown";
}

//-----------------------------------------------------------------------------
std::size_t SplineSpace::KeyHash::operator()(const Key& key) const noexcept
{
  std::size_t h = 1469598103934665603ull;
  for (int v : key.k)
  {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6)
         + (h >> 2);
  }
  return h;
}

SplineSpace::Key SplineSpace::key_of(const TPBspline& b) const
{
  Key key;
  key.k.fill(-1);
  int m = 0;
  for (int k : b.knots(Param::U))
    key.k[m++] = k;
  for (int k : b.knots(Param::V))
    key.k[m++] = k;
  return key;
}

SplineSpace SplineSpace::tensor(std::span<const double> knots_u,
                                std::span<const double> knots_v, int degree_u,
                                int degree_v)
{
  const OpenKnots ku = parse_open_knots(knots_u, degree_u, 'u');
  const OpenKnots kv = parse_open_knots(knots_v, degree_v, 'v');

  SplineSpace space;
  space.degree_ = {degree_u, degree_v};
  space.mesh_ = LRMesh::tensor(ku.distinct, kv.distinct);
  space.element_bsplines_.assign(space.mesh_.elements().size(), {});

  const int nbu = static_cast<int>(knots_u.size()) - degree_u - 1;
  const int nbv = static_cast<int>(knots_v.size()) - degree_v - 1;
  for (int j = 0; j < nbv; ++j)
  {
    for (int i = 0; i < nbu; ++i)
    {
      TPBspline b;
      b.degree_u = degree_u;
      b.degree_v = degree_v;
      for (int k = 0; k < degree_u + 2; ++k)
        b.knots_u[k] = ku.index[i + k];
      for (int k = 0; k < degree_v + 2; ++k)
        b.knots_v[k] = kv.index[j + k];
      space.add_bspline(b, space.mesh_.elements_in_box(
                               b.first(Param::U), b.last(Param::U),
                               b.first(Param::V), b.last(Param::V)));
    }
  }
  space.canonicalize();
  return space;
}

SplineSpace SplineSpace::from_parts(KnotTable knots,
                                    std::span<const MeshSegment> segments,
                                    std::vector<TPBspline> bsplines,
                                    int degree_u, int degree_v)
{
  if (degree_u < 1 || degree_u > kMaxDegree || degree_v < 1
      || degree_v > kMaxDegree)
    throw InputError("degree must be 1, 2 or 3");
  if (bsplines.empty())
    throw InputError("a spline space needs at least one B-spline");

  SplineSpace space;
  space.degree_ = {degree_u, degree_v};
  space.mesh_ = LRMesh::from_segments(std::move(knots), segments);
  space.element_bsplines_.assign(space.mesh_.elements().size(), {});
  const KnotTable& t = space.mesh_.knots();

  for (TPBspline& b : bsplines)
  {
    if (b.degree_u != degree_u || b.degree_v != degree_v)
      throw InputError("B-spline degree does not match the space");
    if (!(b.scale > 0.0))
      throw InputError("B-spline scale must be positive");
    for (Param p : {Param::U, Param::V})
    {
      const int last = static_cast<int>(t.values(p).size()) - 1;
      const auto k = b.knots(p);
      for (std::size_t i = 0; i < k.size(); ++i)
      {
        if (k[i] < 0 || k[i] > last)
          throw InputError("B-spline knot index out of range");
        if (i > 0 && k[i] < k[i - 1])
          throw InputError("B-spline knot indices must be non-decreasing");
        if (i > 0 && k[i] == k[i - 1] && k[i] != 0 && k[i] != last)
          throw InputError("repeated interior knot in B-spline");
      }
      if (k.front() == k.back())
        throw InputError("B-spline has an empty support");
    }
    if (space.index_.count(space.key_of(b)))
      throw InputError("duplicate B-spline");
    if (!has_minimal_support(b, space.mesh_))
      throw InputError("B-spline does not have minimal support");
    space.add_bspline(b, space.mesh_.elements_in_box(
                             b.first(Param::U), b.last(Param::U),
                             b.first(Param::V), b.last(Param::V)));
  }
  space.canonicalize();

  // A missing or mis-scaled B-spline breaks the partition of unity.
  std::vector<double> values;
  const auto& els = space.mesh_.elements();
  for (int e = 0; e < static_cast<int>(els.size()); ++e)
  {
    const double u = 0.5 * (t.u[els[e].u0] + t.u[els[e].u1]);
    const double v = 0.5 * (t.v[els[e].v0] + t.v[els[e].v1]);
    space.basis_in_element(e, u, v, values);
    double sum = 0.0;
    for (double x : values)
      sum += x;
    if (std::abs(sum - 1.0) > 1e-10)
      throw InputError("B-splines do not form a partition of unity");
  }
  return space;
}

//-----------------------------------------------------------------------------
std::vector<double> SplineSpace::coefficients() const
{
  std::vector<double> c(bsplines_.size());
  for (std::size_t i = 0; i < bsplines_.size(); ++i)
    c[i] = bsplines_[i].coeff;
  return c;
}

void SplineSpace::set_coefficients(std::span<const double> c)
{
  if (c.size() != bsplines_.size())
    throw InputError("coefficient vector has the wrong length");
  for (std::size_t i = 0; i < c.size(); ++i)
    bsplines_[i].coeff = c[i];
}

double SplineSpace::weighted_basis(int i, double u, double v) const
{
  const TPBspline& b = bsplines_[i];
  const KnotTable& t = knots();
  const auto ku = knot_values(b, t, Param::U);
  const auto kv = knot_values(b, t, Param::V);
  const double bu = bspline_value(
      std::span<const double>(ku.data(), b.degree_u + 2), u,
      b.last(Param::U) == static_cast<int>(t.u.size()) - 1);
  if (bu == 0.0)
    return 0.0;
  const double bv = bspline_value(
      std::span<const double>(kv.data(), b.degree_v + 2), v,
      b.last(Param::V) == static_cast<int>(t.v.size()) - 1);
  return b.scale * bu * bv;
}

BasisHessian SplineSpace::weighted_basis_hessian(int i, double u,
                                                 double v) const
{
  const TPBspline& b = bsplines_[i];
  const KnotTable& t = knots();
  const auto ku = knot_values(b, t, Param::U);
  const auto kv = knot_values(b, t, Param::V);
  const BasisValue bu = bspline_basis(
      std::span<const double>(ku.data(), b.degree_u + 2), u,
      b.last(Param::U) == static_cast<int>(t.u.size()) - 1);
  const BasisValue bv = bspline_basis(
      std::span<const double>(kv.data(), b.degree_v + 2), v,
      b.last(Param::V) == static_cast<int>(t.v.size()) - 1);
  return {b.scale * bu.value * bv.value, b.scale * bu.d2 * bv.value,
          b.scale * bu.d1 * bv.d1, b.scale * bu.value * bv.d2};
}

void SplineSpace::basis_in_element(int e, double u, double v,
                                   std::vector<double>& out) const
{
  const auto ids = element_support(e);
  out.resize(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k)
    out[k] = weighted_basis(ids[k], u, v);
}

std::array<double, 4> SplineSpace::support_box(int i) const
{
  const TPBspline& b = bsplines_[i];
  const KnotTable& t = knots();
  return {t.value(Param::U, b.first(Param::U)),
          t.value(Param::U, b.last(Param::U)),
          t.value(Param::V, b.first(Param::V)),
          t.value(Param::V, b.last(Param::V))};
}

bool SplineSpace::all_minimal_support() const
{
  return std::all_of(bsplines_.begin(), bsplines_.end(),
                     [&](const TPBspline& b) {
                       return has_minimal_support(b, mesh_);
                     });
}

//-----------------------------------------------------------------------------
SegmentCheck SplineSpace::check(const KnotSegment& s) const
{
  const KnotTable& t = knots();
  const Param d = s.dir;
  const Param o = other(d);
  if (!(t.min(d) < s.at && s.at < t.max(d)))
    return SegmentCheck::OutsideDomain;
  const auto lo = t.find(o, s.from);
  const auto hi = t.find(o, s.to);
  if (!lo || !hi || *lo >= *hi)
    return SegmentCheck::BadSpan;
  const auto fixed = t.find(d, s.at);
  const Span extent = fixed ? mesh_.merged_extent(d, *fixed, *lo, *hi)
                            : Span{*lo, *hi};

  for (const Element& e : mesh_.elements())
  {
    if (t.value(d, e.lo(d)) < s.at && s.at < t.value(d, e.hi(d))
        && e.lo(o) < *hi && e.hi(o) > *lo
        && (e.lo(o) < *lo || e.hi(o) > *hi))
      return SegmentCheck::EndsInsideElement;
  }

  for (std::size_t i = 0; i < bsplines_.size(); ++i)
  {
    if (!alive_[i])
      continue;
    const TPBspline& b = bsplines_[i];
    if (!(t.value(d, b.first(d)) < s.at && s.at < t.value(d, b.last(d))))
      continue;
    if (fixed && b.has_knot(d, *fixed))
      continue;
    if (b.first(o) >= extent.start && b.last(o) <= extent.end)
      return SegmentCheck::Ok;
  }
  return SegmentCheck::SplitsNothing;
}

void SplineSpace::insert_segment(const KnotSegment& s)
{
  if (const SegmentCheck c = check(s); c != SegmentCheck::Ok)
    throw RefinementError(to_string(c));
  apply(std::span<const KnotSegment>(&s, 1));
}

ApplyResult SplineSpace::apply(std::span<const KnotSegment> segments)
{
  ApplyResult result;
  if (segments.empty())
    return result;

  // Register all new knot values up front so indices move only once.
  std::array<std::vector<double>, 2> fresh;
  for (const KnotSegment& s : segments)
  {
    const Param d = s.dir;
    if (knots().min(d) < s.at && s.at < knots().max(d)
        && !knots().find(d, s.at))
      fresh[axis(d)].push_back(s.at);
  }
  if (!fresh[0].empty() || !fresh[1].empty())
    remap_knots(mesh_.insert_values(fresh[0], fresh[1]));

  for (const KnotSegment& s : segments)
  {
    if (check(s) != SegmentCheck::Ok)
    {
      ++result.dropped;
      continue;
    }
    const Param d = s.dir;
    insert_indexed(d, *knots().find(d, s.at), *knots().find(other(d), s.from),
                   *knots().find(other(d), s.to));
    ++result.inserted;
  }
  canonicalize();
  return result;
}

bool SplineSpace::splits(const TPBspline& b, Param dir, int fixed,
                         Span extent) const
{
  const Param o = other(dir);
  return b.first(dir) < fixed && fixed < b.last(dir) && !b.has_knot(dir, fixed)
         && b.first(o) >= extent.start && b.last(o) <= extent.end;
}

void SplineSpace::insert_indexed(Param dir, int fixed, int from, int to)
{
  const Span extent = mesh_.add_segment(
      {dir, fixed, from, to}, [this](int parent, int child) {
        std::vector<int> support = element_bsplines_[parent];
        for (int b : support)
          bspline_elements_[b].push_back(child);
        element_bsplines_.push_back(std::move(support));
      });

  std::vector<int> worklist;
  for (std::size_t i = 0; i < bsplines_.size(); ++i)
    if (alive_[i] && splits(bsplines_[i], dir, fixed, extent))
      worklist.push_back(static_cast<int>(i));

  // Split until every B-spline has minimal support. Children may match
  // existing B-splines, which then absorb the contribution.
  for (std::size_t head = 0; head < worklist.size(); ++head)
  {
    const int id = worklist[head];
    if (!alive_[id])
      continue;
    Param d;
    int f;
    if (find_traversing_line(bsplines_[id], d, f))
      split_into(id, d, f, worklist);
  }
}

bool SplineSpace::find_traversing_line(const TPBspline& b, Param& dir,
                                       int& fixed) const
{
  for (Param d : {Param::U, Param::V})
  {
    const Param o = other(d);
    for (int f = b.first(d) + 1; f < b.last(d); ++f)
    {
      if (!b.has_knot(d, f) && mesh_.covers(d, f, b.first(o), b.last(o)))
      {
        dir = d;
        fixed = f;
        return true;
      }
    }
  }
  return false;
}

void SplineSpace::split_into(int id, Param dir, int fixed,
                             std::vector<int>& worklist)
{
  const TPBspline parent = bsplines_[id];
  const std::vector<int> parent_elements = bspline_elements_[id];
  const BsplineSplit split = split_bspline(parent, knots(), dir, fixed);
  kill_bspline(id);

  for (const auto& [child, alpha] :
       {std::pair{split.first, split.alpha_first},
        std::pair{split.second, split.alpha_second}})
  {
    const double added = alpha * parent.scale;
    if (auto it = index_.find(key_of(child)); it != index_.end())
    {
      TPBspline& existing = bsplines_[it->second];
      const double s = existing.scale + added;
      existing.coeff
          = (existing.scale * existing.coeff + added * parent.coeff) / s;
      existing.scale = s;
      worklist.push_back(it->second);
      continue;
    }
    TPBspline fresh = child;
    fresh.scale = added;
    fresh.coeff = parent.coeff;
    std::vector<int> elements;
    for (int e : parent_elements)
    {
      const Element& el = mesh_.elements()[e];
      if (el.u0 >= fresh.first(Param::U) && el.u1 <= fresh.last(Param::U)
          && el.v0 >= fresh.first(Param::V) && el.v1 <= fresh.last(Param::V))
        elements.push_back(e);
    }
    worklist.push_back(add_bspline(fresh, std::move(elements)));
  }
}

int SplineSpace::add_bspline(const TPBspline& b, std::vector<int> elements)
{
  const int id = static_cast<int>(bsplines_.size());
  for (int e : elements)
    element_bsplines_[e].push_back(id);
  bsplines_.push_back(b);
  bspline_elements_.push_back(std::move(elements));
  alive_.push_back(1);
  index_.emplace(key_of(b), id);
  return id;
}

void SplineSpace::kill_bspline(int id)
{
  alive_[id] = 0;
  index_.erase(key_of(bsplines_[id]));
  for (int e : bspline_elements_[id])
  {
    auto& list = element_bsplines_[e];
    list.erase(std::remove(list.begin(), list.end(), id), list.end());
  }
  bspline_elements_[id].clear();
}

void SplineSpace::remap_knots(const std::array<std::vector<int>, 2>& maps)
{
  for (std::size_t i = 0; i < bsplines_.size(); ++i)
  {
    if (!alive_[i])
      continue;
    TPBspline& b = bsplines_[i];
    for (int k = 0; k < b.degree_u + 2; ++k)
      b.knots_u[k] = maps[0][b.knots_u[k]];
    for (int k = 0; k < b.degree_v + 2; ++k)
      b.knots_v[k] = maps[1][b.knots_v[k]];
  }
  rebuild_index();
}

void SplineSpace::rebuild_index()
{
  index_.clear();
  index_.reserve(bsplines_.size());
  for (std::size_t i = 0; i < bsplines_.size(); ++i)
    if (alive_[i])
      index_.emplace(key_of(bsplines_[i]), static_cast<int>(i));
}

void SplineSpace::canonicalize()
{
  // Knot tables: drop values nothing refers to any more.
  remap_knots(mesh_.compact_values());

  // Elements: canonical (v0, u0) order.
  const std::vector<int> emap = mesh_.sort_elements();
  std::vector<std::vector<int>> eb(element_bsplines_.size());
  for (std::size_t e = 0; e < emap.size(); ++e)
    eb[emap[e]] = std::move(element_bsplines_[e]);
  element_bsplines_ = std::move(eb);
  for (auto& list : bspline_elements_)
    for (int& e : list)
      e = emap[e];

  // B-splines: drop dead entries, sort by (knots_v, knots_u).
  std::vector<int> order;
  for (std::size_t i = 0; i < bsplines_.size(); ++i)
    if (alive_[i])
      order.push_back(static_cast<int>(i));
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return lex_less(bsplines_[a], bsplines_[b]);
  });
  std::vector<int> bmap(bsplines_.size(), -1);
  std::vector<TPBspline> bs(order.size());
  std::vector<std::vector<int>> be(order.size());
  for (std::size_t k = 0; k < order.size(); ++k)
  {
    bmap[order[k]] = static_cast<int>(k);
    bs[k] = bsplines_[order[k]];
    be[k] = std::move(bspline_elements_[order[k]]);
    std::sort(be[k].begin(), be[k].end());
  }
  bsplines_ = std::move(bs);
  bspline_elements_ = std::move(be);
  alive_.assign(bsplines_.size(), 1);
  for (auto& list : element_bsplines_)
  {
    for (int& b : list)
      b = bmap[b];
    std::sort(list.begin(), list.end());
  }
  rebuild_index();
}

} // namespace lrfit
