#include "lrfit/lr_mesh.hpp"

#include "lrfit/error.hpp"

#include <algorithm>
#include <numeric>

namespace lrfit
{

std::optional<int> KnotTable::find(Param p, double x) const
{
  const auto& t = values(p);
  const auto it = std::lower_bound(t.begin(), t.end(), x);
  if (it == t.end() || *it != x)
    return std::nullopt;
  return static_cast<int>(it - t.begin());
}

int KnotTable::interval_of(Param p, double x) const
{
  const auto& t = values(p);
  if (t.size() < 2 || !(x >= t.front()) || !(x <= t.back()))
    return -1;
  const int i
      = static_cast<int>(std::upper_bound(t.begin(), t.end(), x) - t.begin())
        - 1;
  return std::min(i, static_cast<int>(t.size()) - 2);
}

//-----------------------------------------------------------------------------
LRMesh LRMesh::tensor(std::vector<double> u, std::vector<double> v)
{
  for (const auto* t : {&u, &v})
  {
    if (t->size() < 2)
      throw InputError("a knot table needs at least two distinct values");
    for (std::size_t i = 1; i < t->size(); ++i)
      if (!((*t)[i - 1] < (*t)[i]))
        throw InputError("knot values must be strictly increasing");
  }
  LRMesh mesh;
  mesh.knots_.u = std::move(u);
  mesh.knots_.v = std::move(v);
  const int nu = static_cast<int>(mesh.knots_.u.size());
  const int nv = static_cast<int>(mesh.knots_.v.size());
  mesh.lines_[0].assign(nu, {});
  mesh.lines_[1].assign(nv, {});
  for (int i = 0; i < nu; ++i)
    mesh.lines_[0][i].push_back({0, nv - 1});
  for (int j = 0; j < nv; ++j)
    mesh.lines_[1][j].push_back({0, nu - 1});
  for (int j = 0; j + 1 < nv; ++j)
    for (int i = 0; i + 1 < nu; ++i)
      mesh.elements_.push_back({i, i + 1, j, j + 1});
  mesh.build_locator();
  return mesh;
}

LRMesh LRMesh::from_segments(KnotTable knots,
                             std::span<const MeshSegment> segments)
{
  LRMesh mesh = tensor(knots.u, knots.v);
  const int nu = static_cast<int>(mesh.knots_.u.size());
  const int nv = static_cast<int>(mesh.knots_.v.size());
  for (auto& by_fixed : mesh.lines_)
    for (auto& spans : by_fixed)
      spans.clear();
  for (const MeshSegment& s : segments)
  {
    const int n_fixed = s.dir == Param::U ? nu : nv;
    const int n_span = s.dir == Param::U ? nv : nu;
    if (s.fixed < 0 || s.fixed >= n_fixed || s.start < 0 || s.end >= n_span
        || s.start >= s.end)
      throw InputError("segment index out of range");
    mesh.add_line_only(s);
  }
  if (!mesh.covers(Param::U, 0, 0, nv - 1)
      || !mesh.covers(Param::U, nu - 1, 0, nv - 1)
      || !mesh.covers(Param::V, 0, 0, nu - 1)
      || !mesh.covers(Param::V, nv - 1, 0, nu - 1))
    throw InputError("domain boundary lines must span the full domain");
  mesh.rebuild_elements();
  return mesh;
}

std::vector<MeshSegment> LRMesh::segments() const
{
  std::vector<MeshSegment> out;
  for (Param d : {Param::U, Param::V})
  {
    const auto& by_fixed = lines_[axis(d)];
    for (int f = 0; f < static_cast<int>(by_fixed.size()); ++f)
      for (const Span& s : by_fixed[f])
        out.push_back({d, f, s.start, s.end});
  }
  return out;
}

std::span<const Span> LRMesh::lines(Param dir, int fixed) const
{
  const auto& by_fixed = lines_[axis(dir)];
  if (fixed < 0 || fixed >= static_cast<int>(by_fixed.size()))
    return {};
  return by_fixed[fixed];
}

bool LRMesh::covers(Param dir, int fixed, int lo, int hi) const
{
  const auto spans = lines(dir, fixed);
  // Last span starting at or before lo.
  auto it = std::upper_bound(spans.begin(), spans.end(), lo,
                             [](int x, const Span& s) { return x < s.start; });
  if (it == spans.begin())
    return false;
  --it;
  return it->end >= hi;
}

Span LRMesh::merged_extent(Param dir, int fixed, int lo, int hi) const
{
  Span out{lo, hi};
  for (const Span& s : lines(dir, fixed))
  {
    if (s.end >= lo && s.start <= hi)
    {
      out.start = std::min(out.start, s.start);
      out.end = std::max(out.end, s.end);
    }
  }
  return out;
}

int LRMesh::locate(double u, double v) const
{
  const int i = knots_.interval_of(Param::U, u);
  const int j = knots_.interval_of(Param::V, v);
  if (i < 0 || j < 0 || i >= static_cast<int>(columns_.size()))
    return -1;
  const auto& col = columns_[i];
  auto it = std::upper_bound(col.begin(), col.end(), j, [&](int x, int e) {
    return x < elements_[e].v0;
  });
  if (it == col.begin())
    return -1;
  return *(it - 1);
}

std::vector<int> LRMesh::elements_in_box(int u0, int u1, int v0, int v1) const
{
  std::vector<int> out;
  for (int i = u0; i < u1 && i < static_cast<int>(columns_.size()); ++i)
  {
    // Each element is reported from its leftmost column only.
    for (int id : columns_[i])
    {
      const Element& e = elements_[id];
      if (e.u0 == i && e.u1 <= u1 && e.v0 >= v0 && e.v1 <= v1)
        out.push_back(id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

//-----------------------------------------------------------------------------
Span LRMesh::add_segment(const MeshSegment& seg, const SplitCallback& on_split)
{
  add_line_only(seg);
  const Param d = seg.dir;
  const Param o = other(d);
  const std::size_t n = elements_.size();
  for (std::size_t i = 0; i < n; ++i)
  {
    Element e = elements_[i];
    if (e.lo(d) < seg.fixed && seg.fixed < e.hi(d) && e.lo(o) < seg.end
        && e.hi(o) > seg.start)
    {
      Element upper = e;
      if (d == Param::U)
      {
        elements_[i].u1 = seg.fixed;
        upper.u0 = seg.fixed;
      }
      else
      {
        elements_[i].v1 = seg.fixed;
        upper.v0 = seg.fixed;
      }
      elements_.push_back(upper);
      if (on_split)
        on_split(static_cast<int>(i), static_cast<int>(elements_.size() - 1));
    }
  }
  return merged_extent(d, seg.fixed, seg.start, seg.end);
}

void LRMesh::add_line_only(const MeshSegment& seg)
{
  auto& spans = lines_[axis(seg.dir)][seg.fixed];
  Span merged{seg.start, seg.end};
  std::vector<Span> kept;
  kept.reserve(spans.size() + 1);
  for (const Span& s : spans)
  {
    if (s.end >= merged.start && s.start <= merged.end)
    {
      merged.start = std::min(merged.start, s.start);
      merged.end = std::max(merged.end, s.end);
    }
    else
      kept.push_back(s);
  }
  kept.push_back(merged);
  std::sort(kept.begin(), kept.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  spans = std::move(kept);
}

std::array<std::vector<int>, 2>
LRMesh::insert_values(std::span<const double> u, std::span<const double> v)
{
  std::array<std::vector<int>, 2> maps;
  for (Param p : {Param::U, Param::V})
  {
    auto& table = knots_.values(p);
    std::vector<double> merged = table;
    for (double x : (p == Param::U ? u : v))
      merged.push_back(x);
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    auto& map = maps[axis(p)];
    map.resize(table.size());
    for (std::size_t i = 0; i < table.size(); ++i)
      map[i] = static_cast<int>(
          std::lower_bound(merged.begin(), merged.end(), table[i])
          - merged.begin());
    table = std::move(merged);
  }
  remap(maps);
  return maps;
}

std::array<std::vector<int>, 2> LRMesh::compact_values()
{
  std::array<std::vector<char>, 2> used;
  for (Param p : {Param::U, Param::V})
  {
    auto& flags = used[axis(p)];
    const std::size_t n = knots_.values(p).size();
    flags.assign(n, 0);
    if (n == 0)
      continue;
    flags[0] = 1;
    flags[n - 1] = 1;
    const auto& by_fixed = lines_[axis(p)];
    for (std::size_t f = 0; f < by_fixed.size(); ++f)
      if (!by_fixed[f].empty())
        flags[f] = 1;
  }
  for (Param p : {Param::U, Param::V})
    for (const auto& spans : lines_[axis(p)])
      for (const Span& s : spans)
        used[axis(other(p))][s.start] = used[axis(other(p))][s.end] = 1;
  for (const Element& e : elements_)
  {
    used[0][e.u0] = used[0][e.u1] = 1;
    used[1][e.v0] = used[1][e.v1] = 1;
  }

  std::array<std::vector<int>, 2> maps;
  bool changed = false;
  for (Param p : {Param::U, Param::V})
  {
    auto& table = knots_.values(p);
    auto& map = maps[axis(p)];
    map.assign(table.size(), -1);
    std::vector<double> kept;
    for (std::size_t i = 0; i < table.size(); ++i)
    {
      if (used[axis(p)][i])
      {
        map[i] = static_cast<int>(kept.size());
        kept.push_back(table[i]);
      }
    }
    changed = changed || kept.size() != table.size();
    table = std::move(kept);
  }
  if (changed)
    remap(maps);
  return maps;
}

void LRMesh::remap(const std::array<std::vector<int>, 2>& maps)
{
  for (Param p : {Param::U, Param::V})
  {
    const auto& fixed_map = maps[axis(p)];
    const auto& span_map = maps[axis(other(p))];
    std::vector<std::vector<Span>> remapped(knots_.values(p).size());
    auto& by_fixed = lines_[axis(p)];
    for (std::size_t f = 0; f < by_fixed.size(); ++f)
    {
      if (by_fixed[f].empty())
        continue;
      auto& dst = remapped[fixed_map[f]];
      for (const Span& s : by_fixed[f])
        dst.push_back({span_map[s.start], span_map[s.end]});
    }
    by_fixed = std::move(remapped);
  }
  for (Element& e : elements_)
  {
    e.u0 = maps[0][e.u0];
    e.u1 = maps[0][e.u1];
    e.v0 = maps[1][e.v0];
    e.v1 = maps[1][e.v1];
  }
}

std::vector<int> LRMesh::sort_elements()
{
  std::vector<int> order(elements_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Element& ea = elements_[a];
    const Element& eb = elements_[b];
    return std::tie(ea.v0, ea.u0) < std::tie(eb.v0, eb.u0);
  });
  std::vector<int> map(elements_.size());
  std::vector<Element> sorted(elements_.size());
  for (std::size_t k = 0; k < order.size(); ++k)
  {
    map[order[k]] = static_cast<int>(k);
    sorted[k] = elements_[order[k]];
  }
  elements_ = std::move(sorted);
  build_locator();
  return map;
}

void LRMesh::build_locator()
{
  const int nu = static_cast<int>(knots_.u.size());
  columns_.assign(std::max(0, nu - 1), {});
  // Elements are visited in (v0, u0) order, so each column ends up sorted.
  std::vector<int> order(elements_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return elements_[a].v0 < elements_[b].v0;
  });
  for (int id : order)
  {
    const Element& e = elements_[id];
    for (int i = e.u0; i < e.u1; ++i)
      columns_[i].push_back(id);
  }
}

void LRMesh::rebuild_elements()
{
  const int nu = static_cast<int>(knots_.u.size());
  const int nv = static_cast<int>(knots_.v.size());
  elements_.clear();
  // Grow each element from its lower-left cell: right until a U-line
  // blocks the row, then up until a V-line blocks the element's width.
  std::vector<char> taken(static_cast<std::size_t>(nu - 1) * (nv - 1), 0);
  auto cell = [&](int i, int j) -> char& {
    return taken[static_cast<std::size_t>(j) * (nu - 1) + i];
  };
  for (int j = 0; j + 1 < nv; ++j)
  {
    for (int i = 0; i + 1 < nu; ++i)
    {
      if (cell(i, j))
        continue;
      int i1 = i + 1;
      while (i1 < nu - 1 && !covers(Param::U, i1, j, j + 1))
        ++i1;
      int j1 = j + 1;
      while (j1 < nv - 1 && !covers(Param::V, j1, i, i1))
        ++j1;
      for (int jj = j; jj < j1; ++jj)
        for (int ii = i; ii < i1; ++ii)
        {
          if (cell(ii, jj))
            throw InputError("meshlines do not form a box partition");
          cell(ii, jj) = 1;
        }
      elements_.push_back({i, i1, j, j1});
    }
  }
  sort_elements();
}

} // namespace lrfit
