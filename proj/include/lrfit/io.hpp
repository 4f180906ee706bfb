#pragma once

#include "lrfit/driver.hpp"
#include "lrfit/synthetic.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace lrfit
{

/// Parse whitespace- or comma-separated x y z triples. '#' starts a
/// comment. Errors name the source and line.
PointCloud parse_points(std::istream& in, std::string_view source = "<input>");
PointCloud read_points(const std::string& path);

void write_points(std::ostream& out, const PointCloud& cloud);

/// Ground truth sidecar: "x y z_true is_outlier" per point.
void write_truth(std::ostream& out, const SyntheticCloud& synth);

/// Free-form provenance stored with a surface; keys are written sorted.
using Provenance = std::map<std::string, std::string>;

inline constexpr int kSurfaceSchemaVersion = 1;

/// Text surface document: header, degrees, domain, knot tables, meshline
/// segments in index form, B-splines, provenance. Doubles are written with
/// 17 significant digits.
void write_surface(std::ostream& out, const LRSurface& surface,
                   const Provenance& provenance = {});

struct SurfaceDocument
{
  LRSurface surface;
  Provenance provenance;
};

/// Throws InputError on schema or version mismatch and on inconsistent
/// content.
SurfaceDocument read_surface(std::istream& in);
SurfaceDocument read_surface_file(const std::string& path);
void write_surface_file(const std::string& path, const LRSurface& surface,
                        const Provenance& provenance = {});

/// ESRI ASCII grid of the surface sampled at nx x ny nodes spanning the
/// domain, north row first.
void write_raster(std::ostream& out, const LRSurface& surface, int nx, int ny);
void sample_raster(const LRSurface& surface, int nx, int ny,
                   const std::string& path);

inline constexpr std::string_view kReportHeader =
    "iter,n_out,n_coeff,max,avg,avg_out,efficiency,segments,wall_ms,strategy";

void write_report(std::ostream& out, const std::vector<LedgerRow>& rows);

/// Read a report written by write_report. n_points is recovered as
/// efficiency * n_coeff + n_out.
std::vector<LedgerRow> read_report(std::istream& in);

} // namespace lrfit
