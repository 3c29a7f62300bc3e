#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace roughwall::cli {

namespace {

constexpr double kW = 640, kH = 440, kL = 80, kR = 170, kT = 40, kB = 60;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string num(double v, const char* f = "%.6g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, bool semilog, const std::string& comment) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.fit.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (!(x1 >= x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double px = 0.05 * (x1 - x0), py = 0.08 * (y1 - y0);
  x0 -= px, x1 += px, y0 -= py, y1 += py;
  auto sx = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
  auto sy = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };

  std::string o = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<!--\n" + escape(comment) + "-->\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) + "</text>\n";
  o += "<rect x=\"" + num(kL) + "\" y=\"" + num(kT) + "\" width=\"" + num(kW - kL - kR) + "\" height=\"" + num(kH - kT - kB) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks at integer powers of ten (natural-log coordinates)
  const double ln10 = std::log(10.0);
  auto ticks = [&](double a, double b, bool vertical, bool logscale) {
    const double lo = logscale ? a / ln10 : a, hi = logscale ? b / ln10 : b;
    double step = 1;
    if (!logscale) step = std::pow(10.0, std::floor(std::log10(std::max(hi - lo, 1e-12))));
    else if (hi - lo < 1) step = 0.25;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12; t += step) {
      const double c = logscale ? t * ln10 : t;
      const std::string label = logscale ? (step < 1 ? num(std::pow(10.0, t), "%.3g") : "1e" + num(t, "%.0f")) : num(t, "%.4g");
      if (vertical) {
        const double X = sx(c);
        o += "<line x1=\"" + num(X) + "\" y1=\"" + num(kH - kB) + "\" x2=\"" + num(X) + "\" y2=\"" + num(kH - kB + 5) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + num(X) + "\" y=\"" + num(kH - kB + 18) + "\" text-anchor=\"middle\">" + label + "</text>\n";
      } else {
        const double Y = sy(c);
        o += "<line x1=\"" + num(kL - 5) + "\" y1=\"" + num(Y) + "\" x2=\"" + num(kL) + "\" y2=\"" + num(Y) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + num(kL - 8) + "\" y=\"" + num(Y + 4) + "\" text-anchor=\"end\">" + label + "</text>\n";
      }
    }
  };
  ticks(x0, x1, true, !semilog);
  ticks(y0, y1, false, true);
  o += "<text x=\"" + num((kL + kW - kR) / 2) + "\" y=\"" + num(kH - 15) + "\" text-anchor=\"middle\">" + escape(xlabel) + "</text>\n";
  o += "<text transform=\"translate(18," + num((kT + kH - kB) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string col = kColors[k % 5];
    o += "<!-- series " + escape(s.name) + " points:";
    for (const auto& [x, y] : s.fit.points) o += " (" + num(x, "%.17g") + "," + num(y, "%.17g") + ")";
    o += " -->\n";
    for (const auto& [x, y] : s.fit.points)
      if (std::isfinite(x) && std::isfinite(y))
        o += "<circle cx=\"" + num(sx(x)) + "\" cy=\"" + num(sy(y)) + "\" r=\"3.5\" fill=\"" + col + "\"/>\n";
    if (s.fit.points.size() >= 2) {
      double a = s.fit.points.front().first, b = a;
      for (const auto& p : s.fit.points) a = std::min(a, p.first), b = std::max(b, p.first);
      const double ya = s.fit.intercept + s.fit.exponent * a, yb = s.fit.intercept + s.fit.exponent * b;
      o += "<line x1=\"" + num(sx(a)) + "\" y1=\"" + num(sy(ya)) + "\" x2=\"" + num(sx(b)) + "\" y2=\"" + num(sy(yb)) +
           "\" stroke=\"" + col + "\" stroke-dasharray=\"5,3\"/>\n";
    }
    const double ly = kT + 16 + 36 * static_cast<double>(k);
    o += "<circle cx=\"" + num(kW - kR + 16) + "\" cy=\"" + num(ly - 4) + "\" r=\"4\" fill=\"" + col + "\"/>\n";
    o += "<text x=\"" + num(kW - kR + 26) + "\" y=\"" + num(ly) + "\">" + escape(s.name) + "</text>\n";
    o += "<text x=\"" + num(kW - kR + 26) + "\" y=\"" + num(ly + 15) + "\">slope " + num(s.fit.exponent, "%.3f") + ", r2 " +
         num(s.fit.r_squared, "%.3f") + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace roughwall::cli
