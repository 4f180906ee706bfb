#include "lrfit/io.hpp"

#include "lrfit/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace lrfit
{

namespace
{

std::string fmt(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool parse_double(std::string_view s, double& x)
{
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(std::string_view s, long long& x)
{
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_fields(std::string_view line,
                                           std::string_view seps)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size())
  {
    while (i < line.size() && seps.find(line[i]) != std::string_view::npos)
      ++i;
    const std::size_t b = i;
    while (i < line.size() && seps.find(line[i]) == std::string_view::npos)
      ++i;
    if (i > b)
      out.push_back(line.substr(b, i - b));
  }
  return out;
}

std::ifstream open_in(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open '" + path + "' for writing");
  return out;
}

} // namespace

//-----------------------------------------------------------------------------
// Points

PointCloud parse_points(std::istream& in, std::string_view source)
{
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos)
      body = body.substr(0, hash);
    const auto fields = split_fields(body, " \t\r,");
    if (fields.empty())
      continue;
    Point3 p;
    if (fields.size() != 3 || !parse_double(fields[0], p.x)
        || !parse_double(fields[1], p.y) || !parse_double(fields[2], p.z)
        || !std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw InputError(std::string(source) + ":" + std::to_string(line_no)
                       + ": expected three numbers x y z");
    cloud.points.push_back(p);
  }
  return cloud;
}

PointCloud read_points(const std::string& path)
{
  auto in = open_in(path);
  PointCloud c = parse_points(in, path);
  if (c.size() < 3)
    throw InputError(path + ": at least 3 points are required, found "
                     + std::to_string(c.size()));
  return c;
}

void write_points(std::ostream& out, const PointCloud& cloud)
{
  for (const Point3& p : cloud.points)
    out << fmt(p.x) << ' ' << fmt(p.y) << ' ' << fmt(p.z) << '\n';
}

void write_truth(std::ostream& out, const SyntheticCloud& synth)
{
  out << "# x y z_true is_outlier\n";
  for (std::size_t k = 0; k < synth.cloud.size(); ++k)
  {
    const Point3& p = synth.cloud.points[k];
    out << fmt(p.x) << ' ' << fmt(p.y) << ' ' << fmt(synth.z_true[k]) << ' '
        << static_cast<int>(synth.is_outlier[k]) << '\n';
  }
}

//-----------------------------------------------------------------------------
// Surface document

void write_surface(std::ostream& out, const LRSurface& surface,
                   const Provenance& provenance)
{
  const SplineSpace& s = surface.space();
  const KnotTable& t = s.knots();
  const Domain d = surface.domain();
  out << "LRFIT-SURFACE " << kSurfaceSchemaVersion << '\n';
  out << "degrees " << s.degree(Param::U) << ' ' << s.degree(Param::V) << '\n';
  out << "domain " << fmt(d.u_min) << ' ' << fmt(d.u_max) << ' '
      << fmt(d.v_min) << ' ' << fmt(d.v_max) << '\n';
  for (Param p : {Param::U, Param::V})
  {
    out << "knots " << (p == Param::U ? 'u' : 'v') << ' '
        << t.values(p).size() << '\n';
    for (double x : t.values(p))
      out << fmt(x) << '\n';
  }
  const auto segs = s.mesh().segments();
  out << "segments " << segs.size() << '\n';
  for (const MeshSegment& m : segs)
    out << (m.dir == Param::U ? 'u' : 'v') << ' ' << m.fixed << ' ' << m.start
        << ' ' << m.end << '\n';
  out << "bsplines " << s.size() << '\n';
  for (const TPBspline& b : s.bsplines())
  {
    for (int k : b.knots(Param::U))
      out << k << ' ';
    for (int k : b.knots(Param::V))
      out << k << ' ';
    out << fmt(b.coeff) << ' ' << fmt(b.scale) << '\n';
  }
  out << "provenance " << provenance.size() << '\n';
  for (const auto& [key, value] : provenance)
  {
    std::string v = value;
    for (char& c : v)
      if (c == '\n' || c == '\r')
        c = ' ';
    out << key << ' ' << v << '\n';
  }
  out << "end\n";
}

namespace
{

class DocReader
{
public:
  explicit DocReader(std::istream& in) : in_(in) {}

  std::string line()
  {
    std::string s;
    if (!std::getline(in_, s))
      fail("unexpected end of document");
    ++line_no_;
    if (!s.empty() && s.back() == '\r')
      s.pop_back();
    return s;
  }

  std::vector<std::string_view> fields(const std::string& s)
  {
    return split_fields(s, " \t");
  }

  // "<keyword> <count>" header line; returns the count.
  long long counted(const std::string& keyword)
  {
    const std::string s = line();
    const auto f = fields(s);
    long long n = 0;
    if (f.size() != 2 || f[0] != keyword || !parse_int(f[1], n) || n < 0)
      fail("expected '" + keyword + " <count>'");
    return n;
  }

  double number(std::string_view s)
  {
    double x = 0.0;
    if (!parse_double(s, x) || !std::isfinite(x))
      fail("bad number '" + std::string(s) + "'");
    return x;
  }

  long long integer(std::string_view s)
  {
    long long x = 0;
    if (!parse_int(s, x))
      fail("bad integer '" + std::string(s) + "'");
    return x;
  }

  [[noreturn]] void fail(const std::string& why) const
  {
    throw InputError("surface document line " + std::to_string(line_no_) + ": "
                     + why);
  }

private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

} // namespace

SurfaceDocument read_surface(std::istream& in)
{
  DocReader r(in);
  {
    const std::string s = r.line();
    const auto f = r.fields(s);
    if (f.size() != 2 || f[0] != "LRFIT-SURFACE")
      r.fail("not a surface document (missing LRFIT-SURFACE header)");
    if (r.integer(f[1]) != kSurfaceSchemaVersion)
      r.fail("unsupported surface schema version " + std::string(f[1])
             + " (supported: " + std::to_string(kSurfaceSchemaVersion) + ")");
  }
  int deg[2];
  {
    const std::string s = r.line();
    const auto f = r.fields(s);
    if (f.size() != 3 || f[0] != "degrees")
      r.fail("expected 'degrees <p> <q>'");
    deg[0] = static_cast<int>(r.integer(f[1]));
    deg[1] = static_cast<int>(r.integer(f[2]));
    if (deg[0] < 1 || deg[0] > kMaxDegree || deg[1] < 1 || deg[1] > kMaxDegree)
      r.fail("degrees must lie in 1.." + std::to_string(kMaxDegree));
  }
  double dom[4];
  {
    const std::string s = r.line();
    const auto f = r.fields(s);
    if (f.size() != 5 || f[0] != "domain")
      r.fail("expected 'domain <umin> <umax> <vmin> <vmax>'");
    for (int k = 0; k < 4; ++k)
      dom[k] = r.number(f[k + 1]);
  }
  KnotTable knots;
  for (Param p : {Param::U, Param::V})
  {
    const std::string s = r.line();
    const auto f = r.fields(s);
    const char* name = p == Param::U ? "u" : "v";
    long long n = 0;
    if (f.size() != 3 || f[0] != "knots" || f[1] != name || !parse_int(f[2], n)
        || n < 2)
      r.fail(std::string("expected 'knots ") + name + " <count>' with count >= 2");
    auto& values = knots.values(p);
    for (long long k = 0; k < n; ++k)
    {
      const std::string v = r.line();
      const auto vf = r.fields(v);
      if (vf.size() != 1)
        r.fail("expected one knot value per line");
      values.push_back(r.number(vf[0]));
      if (values.size() > 1 && !(values.back() > values[values.size() - 2]))
        r.fail("knot values must be strictly increasing");
    }
  }
  if (knots.u.front() != dom[0] || knots.u.back() != dom[1]
      || knots.v.front() != dom[2] || knots.v.back() != dom[3])
    r.fail("domain does not match the knot table extremes");

  std::vector<MeshSegment> segments;
  const long long n_seg = r.counted("segments");
  for (long long k = 0; k < n_seg; ++k)
  {
    const std::string s = r.line();
    const auto f = r.fields(s);
    if (f.size() != 4 || (f[0] != "u" && f[0] != "v"))
      r.fail("expected '<u|v> <fixed> <start> <end>'");
    segments.push_back({f[0] == "u" ? Param::U : Param::V,
                        static_cast<int>(r.integer(f[1])),
                        static_cast<int>(r.integer(f[2])),
                        static_cast<int>(r.integer(f[3]))});
  }

  const long long n_b = r.counted("bsplines");
  if (n_b == 0)
    r.fail("a surface needs at least one B-spline");
  std::vector<TPBspline> bsplines;
  const std::size_t width = deg[0] + deg[1] + 4 + 2;
  for (long long k = 0; k < n_b; ++k)
  {
    const std::string s = r.line();
    const auto f = r.fields(s);
    if (f.size() != width)
      r.fail("B-spline line needs " + std::to_string(width) + " fields");
    TPBspline b;
    b.degree_u = deg[0];
    b.degree_v = deg[1];
    std::size_t i = 0;
    for (int j = 0; j < deg[0] + 2; ++j)
      b.knots_u[j] = static_cast<int>(r.integer(f[i++]));
    for (int j = 0; j < deg[1] + 2; ++j)
      b.knots_v[j] = static_cast<int>(r.integer(f[i++]));
    b.coeff = r.number(f[i++]);
    b.scale = r.number(f[i++]);
    bsplines.push_back(b);
  }

  Provenance prov;
  const long long n_prov = r.counted("provenance");
  for (long long k = 0; k < n_prov; ++k)
  {
    const std::string s = r.line();
    const auto sp = s.find(' ');
    if (sp == 0 || s.empty())
      r.fail("expected '<key> <value>'");
    if (sp == std::string::npos)
      prov[s] = "";
    else
      prov[s.substr(0, sp)] = s.substr(sp + 1);
  }
  if (r.line() != "end")
    r.fail("expected 'end'");

  try
  {
    return {LRSurface(SplineSpace::from_parts(std::move(knots), segments,
                                              std::move(bsplines), deg[0],
                                              deg[1])),
            std::move(prov)};
  }
  catch (const InputError&)
  {
    throw;
  }
  catch (const Error& e)
  {
    throw InputError(std::string("inconsistent surface document: ") + e.what());
  }
}

SurfaceDocument read_surface_file(const std::string& path)
{
  auto in = open_in(path);
  return read_surface(in);
}

void write_surface_file(const std::string& path, const LRSurface& surface,
                        const Provenance& provenance)
{
  auto out = open_out(path);
  write_surface(out, surface, provenance);
  if (!out)
    throw Error("failed writing '" + path + "'");
}

//-----------------------------------------------------------------------------
// Raster

void write_raster(std::ostream& out, const LRSurface& surface, int nx, int ny)
{
  if (nx < 2 || ny < 2)
    throw InputError("raster needs at least 2 x 2 samples");
  const Domain d = surface.domain();
  const double dx = (d.u_max - d.u_min) / (nx - 1);
  const double dy = (d.v_max - d.v_min) / (ny - 1);
  out << "ncols " << nx << '\n'
      << "nrows " << ny << '\n'
      << "xllcenter " << fmt(d.u_min) << '\n'
      << "yllcenter " << fmt(d.v_min) << '\n'
      << "dx " << fmt(dx) << '\n'
      << "dy " << fmt(dy) << '\n'
      << "NODATA_value -9999\n";
  for (int i = ny - 1; i >= 0; --i)
  {
    const double y = i == ny - 1 ? d.v_max : d.v_min + i * dy;
    for (int j = 0; j < nx; ++j)
    {
      const double x = j == nx - 1 ? d.u_max : d.u_min + j * dx;
      if (j)
        out << ' ';
      out << fmt(surface.evaluate(x, y));
    }
    out << '\n';
  }
}

void sample_raster(const LRSurface& surface, int nx, int ny,
                   const std::string& path)
{
  if (nx < 2 || ny < 2)
    throw InputError("raster needs at least 2 x 2 samples");
  auto out = open_out(path);
  write_raster(out, surface, nx, ny);
  if (!out)
    throw Error("failed writing '" + path + "'");
}

//-----------------------------------------------------------------------------
// Report

void write_report(std::ostream& out, const std::vector<LedgerRow>& rows)
{
  out << kReportHeader << '\n';
  char wall[32];
  for (const LedgerRow& r : rows)
  {
    std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
    out << r.iter << ',' << r.n_out << ',' << r.n_coeff << ','
        << fmt(r.max_dist) << ',' << fmt(r.avg_dist) << ','
        << fmt(r.avg_out_dist) << ',' << fmt(r.efficiency) << ','
        << r.segments << ',' << wall << ',' << r.strategy << '\n';
  }
}

std::vector<LedgerRow> read_report(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader)
    throw InputError("report does not start with the expected header: "
                     + std::string(kReportHeader));
  std::vector<LedgerRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty())
      continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      f.push_back(cell);
    LedgerRow r;
    long long iter = 0, n_out = 0, n_coeff = 0, segs = 0;
    if (f.size() != 10 || !parse_int(f[0], iter) || !parse_int(f[1], n_out)
        || !parse_int(f[2], n_coeff) || !parse_double(f[3], r.max_dist)
        || !parse_double(f[4], r.avg_dist) || !parse_double(f[5], r.avg_out_dist)
        || !parse_double(f[6], r.efficiency) || !parse_int(f[7], segs)
        || !parse_double(f[8], r.wall_ms))
      throw InputError("report line " + std::to_string(line_no) + " is malformed");
    r.iter = static_cast<int>(iter);
    r.n_out = static_cast<std::size_t>(n_out);
    r.n_coeff = static_cast<std::size_t>(n_coeff);
    r.segments = static_cast<std::size_t>(segs);
    r.strategy = f[9];
    // Resolved points are efficiency times coefficients.
    r.n_points = static_cast<std::size_t>(
                     std::llround(r.efficiency * static_cast<double>(r.n_coeff)))
                 + r.n_out;
    rows.push_back(std::move(r));
  }
  return rows;
}

} // namespace lrfit
