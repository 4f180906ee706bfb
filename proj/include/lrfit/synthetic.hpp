#pragma once

#include "lrfit/surface.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lrfit
{

/// Synthetic terrain families:
///  - dunes: Franke-type hills with a dune ripple field, 1000 m square;
///  - peaks: mountain with sharp summits and a steep ridge;
///  - scanlines: smooth sea bed sampled on parallel lines with varying
///    spacing, outliers placed between the lines;
///  - steps: piecewise constant terraces.
enum class SyntheticKind
{
  Dunes,
  Peaks,
  Scanlines,
  Steps
};

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string to_string(SyntheticKind kind);

struct SyntheticOptions
{
  SyntheticKind kind = SyntheticKind::Dunes;
  std::uint64_t seed = 1;
  std::size_t n_points = 100000;
  double noise = 0.0;            // standard deviation in meters
  double outlier_fraction = 0.0; // share of points turned into outliers
};

struct SyntheticCloud
{
  PointCloud cloud;
  std::vector<double> z_true;
  std::vector<char> is_outlier;
};

/// Ground truth height of a synthetic family at (x, y).
double synthetic_height(SyntheticKind kind, double x, double y);

/// Deterministic for a given option set. Exactly floor(outlier_fraction *
/// n_points) points are outliers. Throws InputError for n_points < 100 or
/// a fraction outside [0, 1].
SyntheticCloud gen_synthetic(const SyntheticOptions& opt);

} // namespace lrfit
