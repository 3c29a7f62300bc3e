#include "roughwall/grid.hpp"

#include <cmath>
#include <numeric>

namespace roughwall::grid {

std::vector<double> stretched_offsets(double h, double uniform_height, double growth, double max_step,
                                      double total) {
  if (!(h > 0) || !(total > 0) || growth < 1 || max_step < h) {
    throw ConfigError("invalid vertical stretching parameters");
  }
  std::vector<double> s{0.0};
  double step = h;
  while (s.back() < total - 1e-12) {
    if (s.back() >= uniform_height - 1e-12) step = std::min(step * growth, max_step);
    s.push_back(s.back() + step);
  }
  // Absorb the overshoot into the last two intervals.
  if (s.size() > 2 && s.back() - total > 0.5 * (s.back() - s[s.size() - 2])) s.pop_back();
  s.back() = total;
  return s;
}

MappedGrid MappedGrid::build(const std::vector<double>& wall, double x0, double hx,
                             const std::vector<double>& offsets, double top, double blend) {
  if (wall.size() < 4) throw ConfigError("grid needs at least 4 columns");
  if (offsets.size() < 3) throw ConfigError("grid needs at least 2 vertical cells");
  MappedGrid g;
  g.n1 = static_cast<int>(wall.size());
  g.n2 = static_cast<int>(offsets.size()) - 1;
  g.x0 = x0;
  g.hx = hx;
  const double b0 = std::accumulate(wall.begin(), wall.end(), 0.0) / static_cast<double>(wall.size());
  for (double w : wall) {
    if (!(w < top)) throw ConfigError("wall must lie below the top of the grid");
  }
  const double scale = (top - b0) / offsets.back();
  g.nodes.resize(static_cast<std::size_t>(g.n2 + 1) * g.n1);
  for (int j = 0; j <= g.n2; ++j) {
    const double s = offsets[static_cast<std::size_t>(j)] * scale;
    const double r = blend > 0 ? s / blend : 1.0;
    const double chi = r < 1 ? (1 - r) * (1 - r) * (1 - r) : 0.0;
    for (int i = 0; i < g.n1; ++i) {
      g.nodes[static_cast<std::size_t>(j) * g.n1 + i] =
          j == 0 ? wall[static_cast<std::size_t>(i)] : (j == g.n2 ? top : b0 + s + (wall[static_cast<std::size_t>(i)] - b0) * chi);
    }
  }
  for (int j = 0; j < g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) {
      if (!(g.y(i, j + 1) > g.y(i, j))) throw ConfigError("grid lines cross; refine near the wall");
    }
  }
  return g;
}

MappedGrid MappedGrid::flattened() const {
  MappedGrid g = *this;
  for (int j = 0; j <= n2; ++j) {
    double m = 0;
    for (int i = 0; i < n1; ++i) m += y(i, j);
    m /= n1;
    for (int i = 0; i < n1; ++i) g.nodes[static_cast<std::size_t>(j) * n1 + i] = m;
  }
  return g;
}

}  // namespace roughwall::grid
