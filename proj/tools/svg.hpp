#pragma once

#include <string>
#include <vector>

#include "roughwall/stats.hpp"

namespace roughwall::cli {

struct Series {
  std::string name;
  stats::DecayFit fit;  // points in the fitted coordinates
};

/// Self-contained plot of the fitted points and lines. Points are (log x, log y), or (x, log y) when
/// semilog is set. The comment (config dump) and the raw points are embedded as XML comments.
std::string render_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, bool semilog, const std::string& comment);

}  // namespace roughwall::cli
