#ifndef UAL_SVG_HPP
#define UAL_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace ual {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> spread;  // optional +-band around y, same length as y
};

struct ChartOptions {
  std::string title;
  std::string x_label = "step";
  std::string y_label = "test MSE";
  bool log_y = true;
  int width = 720;
  int height = 440;
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1, 2 or 5 times a power of ten, giving roughly `target` intervals.
inline double nice_step(double span, int target = 5) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 8];
}

}  // namespace detail

/// Standalone SVG 1.1 line chart. Non-positive values are dropped on a log
/// axis; the band is y +- spread (clipped at the lowest positive value).
inline std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& opt) {
  const double ml = 70, mr = 150, mt = 36, mb = 50;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto usable = [&](double v) { return std::isfinite(v) && (!opt.log_y || v > 0.0); };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.y[i]) || !std::isfinite(s.x[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      double lo = s.y[i], hi = s.y[i];
      if (i < s.spread.size() && std::isfinite(s.spread[i])) {
        hi += s.spread[i];
        if (usable(s.y[i] - s.spread[i])) lo = s.y[i] - s.spread[i];
      }
      ymin = std::min(ymin, lo);
      ymax = std::max(ymax, hi);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0, xmax = 1;
    ymin = opt.log_y ? 1 : 0, ymax = opt.log_y ? 10 : 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  auto ty = [&](double v) { return opt.log_y ? std::log10(v) : v; };
  double tlo = ty(ymin), thi = ty(ymax);
  if (opt.log_y) {
    tlo = std::floor(tlo);
    thi = std::ceil(thi);
  }
  if (thi <= tlo) thi = tlo + 1;

  auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return mt + ph - (ty(v) - tlo) / (thi - tlo) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << opt.width << "\" height=\""
    << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << opt.width << "\" height=\"" << opt.height << "\" fill=\"white\"/>\n"
    << "<text x=\"" << detail::num(ml + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"14\">" << xml_escape(opt.title) << "</text>\n";

  // grid and ticks
  o << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#333\">\n";
  if (opt.log_y) {
    for (double e = tlo; e <= thi + 1e-9; e += 1.0) {
      const double yy = mt + ph - (e - tlo) / (thi - tlo) * ph;
      o << "<line x1=\"" << detail::num(ml) << "\" y1=\"" << detail::num(yy) << "\" x2=\"" << detail::num(ml + pw)
        << "\" y2=\"" << detail::num(yy) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << detail::num(ml - 6) << "\" y=\"" << detail::num(yy + 3) << "\" text-anchor=\"end\">1e"
        << static_cast<int>(e) << "</text>\n";
    }
  } else {
    for (int k = 0; k <= 5; ++k) {
      const double v = tlo + (thi - tlo) * k / 5.0;
      const double yy = mt + ph - ph * k / 5.0;
      o << "<line x1=\"" << detail::num(ml) << "\" y1=\"" << detail::num(yy) << "\" x2=\"" << detail::num(ml + pw)
        << "\" y2=\"" << detail::num(yy) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << detail::num(ml - 6) << "\" y=\"" << detail::num(yy + 3) << "\" text-anchor=\"end\">"
        << detail::tick_label(v) << "</text>\n";
    }
  }
  const double xstep = detail::nice_step(xmax - xmin);
  for (double v = std::ceil(xmin / xstep - 1e-9) * xstep; v <= xmax + 1e-9 * xstep; v += xstep) {
    o << "<text x=\"" << detail::num(px(v)) << "\" y=\"" << detail::num(mt + ph + 16)
      << "\" text-anchor=\"middle\">" << detail::tick_label(v == 0.0 ? 0.0 : v) << "</text>\n";
  }
  o << "</g>\n";
  o << "<rect x=\"" << detail::num(ml) << "\" y=\"" << detail::num(mt) << "\" width=\"" << detail::num(pw)
    << "\" height=\"" << detail::num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << detail::num(ml + pw / 2) << "\" y=\"" << detail::num(opt.height - 12.0)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(opt.x_label)
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << detail::num(mt + ph / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"12\" transform=\"rotate(-90 16 " << detail::num(mt + ph / 2) << ")\">" << xml_escape(opt.y_label)
    << "</text>\n";

  const double floor_y = opt.log_y ? std::pow(10.0, tlo) : -std::numeric_limits<double>::infinity();
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = detail::palette(si);
    if (!s.spread.empty()) {
      std::string upper, lower;
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size() && i < s.spread.size(); ++i) {
        if (!usable(s.y[i])) continue;
        const double hi = s.y[i] + s.spread[i];
        const double lo = std::max(s.y[i] - s.spread[i], floor_y);
        upper += (upper.empty() ? "" : " ") + detail::num(px(s.x[i])) + "," + detail::num(py(hi));
        lower = detail::num(px(s.x[i])) + "," + detail::num(py(usable(lo) ? lo : floor_y)) +
                (lower.empty() ? "" : " ") + lower;
      }
      if (!upper.empty())
        o << "<polygon points=\"" << upper << ' ' << lower << "\" fill=\"" << color
          << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.y[i])) continue;
      pts += (pts.empty() ? "" : " ") + detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i]));
    }
    o << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    const double ly = mt + 14 + 18.0 * static_cast<double>(si);
    o << "<line x1=\"" << detail::num(ml + pw + 12) << "\" y1=\"" << detail::num(ly) << "\" x2=\""
      << detail::num(ml + pw + 34) << "\" y2=\"" << detail::num(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << detail::num(ml + pw + 40) << "\" y=\"" << detail::num(ly + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace ual

#endif  // UAL_SVG_HPP
