#include "lrfit/bspline_basis.hpp"

#include <algorithm>
#include <cassert>

namespace lrfit
{

namespace
{
// 1 / (t[j+k] - t[j]) with 0 for empty intervals.
double inv_width(std::span<const double> t, int j, int k)
{
  const double w = t[j + k] - t[j];
  return w > 0.0 ? 1.0 / w : 0.0;
}
} // namespace

BasisValue bspline_basis(std::span<const double> t, double x,
                         bool closed_right)
{
  const int p = static_cast<int>(t.size()) - 2;
  assert(p >= 0 && p <= kMaxDegree);
  BasisValue out;
  if (x < t.front() || x > t.back() || (x == t.back() && !closed_right))
    return out;

  // n[k][j] = N_{j,k}(x) on the sub-knot vector t[j .. j+k+1].
  double n[kMaxDegree + 1][kMaxDegree + 1] = {};
  for (int j = 0; j <= p; ++j)
  {
    const bool inside = t[j] <= x && x < t[j + 1];
    const bool at_end = closed_right && x == t.back() && t[j + 1] == t.back()
                        && t[j] < t[j + 1];
    n[0][j] = (inside || at_end) ? 1.0 : 0.0;
  }
  for (int k = 1; k <= p; ++k)
  {
    for (int j = 0; j <= p - k; ++j)
    {
      double s = 0.0;
      if (const double w = t[j + k] - t[j]; w > 0.0)
        s += (x - t[j]) / w * n[k - 1][j];
      if (const double w = t[j + k + 1] - t[j + 1]; w > 0.0)
        s += (t[j + k + 1] - x) / w * n[k - 1][j + 1];
      n[k][j] = s;
    }
  }
  out.value = n[p][0];
  if (p >= 1)
  {
    out.d1 = p
             * (inv_width(t, 0, p) * n[p - 1][0]
                - inv_width(t, 1, p) * n[p - 1][1]);
  }
  if (p >= 2)
  {
    // Derivative of N_{j,k}.
    auto dn = [&](int j, int k) {
      return k
             * (inv_width(t, j, k) * n[k - 1][j]
                - inv_width(t, j + 1, k) * n[k - 1][j + 1]);
    };
    out.d2 = p
             * (inv_width(t, 0, p) * dn(0, p - 1)
                - inv_width(t, 1, p) * dn(1, p - 1));
  }
  return out;
}

double bspline_value(std::span<const double> t, double x, bool closed_right)
{
  const int p = static_cast<int>(t.size()) - 2;
  if (x < t.front() || x > t.back() || (x == t.back() && !closed_right))
    return 0.0;
  double n[kMaxDegree + 1];
  for (int j = 0; j <= p; ++j)
  {
    const bool inside = t[j] <= x && x < t[j + 1];
    const bool at_end = closed_right && x == t.back() && t[j + 1] == t.back()
                        && t[j] < t[j + 1];
    n[j] = (inside || at_end) ? 1.0 : 0.0;
  }
  for (int k = 1; k <= p; ++k)
  {
    for (int j = 0; j <= p - k; ++j)
    {
      double s = 0.0;
      if (const double w = t[j + k] - t[j]; w > 0.0)
        s += (x - t[j]) / w * n[j];
      if (const double w = t[j + k + 1] - t[j + 1]; w > 0.0)
        s += (t[j + k + 1] - x) / w * n[j + 1];
      n[j] = s;
    }
  }
  return n[0];
}

std::pair<double, double> knot_insertion_weights(std::span<const double> t,
                                                 double x)
{
  const int p = static_cast<int>(t.size()) - 2;
  const double w1 = t[p] - t[0];
  const double w2 = t[p + 1] - t[1];
  const double a1 = w1 > 0.0 ? std::min(1.0, (x - t[0]) / w1) : 1.0;
  const double a2 = w2 > 0.0 ? std::min(1.0, (t[p + 1] - x) / w2) : 1.0;
  return {a1, a2};
}

} // namespace lrfit
