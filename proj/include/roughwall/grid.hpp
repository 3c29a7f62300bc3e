#pragma once

#include <vector>

#include "roughwall/boundary.hpp"

namespace roughwall::grid {

/// Vertical node offsets above the wall: uniform spacing h up to uniform_height, then geometric growth
/// by `growth` per level capped at max_step, ending exactly at total.
std::vector<double> stretched_offsets(double h, double uniform_height, double growth, double max_step,
                                      double total);

/// Laterally periodic grid whose vertical lines are straight and whose node heights follow the wall.
/// Node (i, j): x = x0 + i*hx, y = Y(i, j); j = 0 is the wall, j = n2 the flat top.
struct MappedGrid {
  int n1 = 0;
  int n2 = 0;
  double x0 = 0;
  double hx = 0;
  std::vector<double> nodes;  // (n2 + 1) rows of n1

  double period() const { return n1 * hx; }
  double x(int i) const { return x0 + i * hx; }
  double y(int i, int j) const { return nodes[static_cast<std::size_t>(j) * n1 + wrap(i)]; }
  int wrap(int i) const { return ((i % n1) + n1) % n1; }
  double top() const { return y(0, n2); }

  /// Height of the u point (i, j) (vertical face centre) and of the w point (i+1/2, j) (slanted face midpoint).
  double yu(int i, int j) const { return 0.5 * (y(i, j) + y(i, j + 1)); }
  double yw(int i, int j) const { return 0.5 * (y(i, j) + y(i + 1, j)); }
  double yc(int i, int j) const { return 0.25 * (y(i, j) + y(i, j + 1) + y(i + 1, j) + y(i + 1, j + 1)); }

  /// Wall samples wall[i] at x(i); offsets from stretched_offsets; the wall influence on node heights
  /// blends out as (1 - s/blend)^3 over the first `blend` of height.
  static MappedGrid build(const std::vector<double>& wall, double x0, double hx,
                          const std::vector<double>& offsets, double top, double blend);
  /// Same offsets on the column-averaged (flat) wall.
  MappedGrid flattened() const;
};

}  // namespace roughwall::grid
