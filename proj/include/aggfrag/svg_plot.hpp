// Self-contained SVG line plots: labeled axes, 1-2-5 tick progression,
// optional log scales, legend. No external renderer needed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "aggfrag/csv.hpp"
#include "aggfrag/errors.hpp"

namespace aggfrag {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string xlabel = "x";
  std::string ylabel = "y";
  bool logx = false;
  bool logy = false;
  int width = 800;
  int height = 520;
};

namespace detail {

inline std::string svg_num(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed << v;
  return os.str();
}

inline std::string tick_label(double v) {
  const double a = std::fabs(v);
  std::ostringstream os;
  if (v == 0.0) return "0";
  if (a >= 1e4 || a < 1e-3) {
    os.precision(0);
    os << std::scientific << v;
    std::string s = os.str();  // trim "1e+05" to "1e5"
    auto e = s.find('e');
    std::string mant = s.substr(0, e), exp = s.substr(e + 1);
    if (!exp.empty() && exp[0] == '+') exp.erase(0, 1);
    while (exp.size() > 1 && exp[0] == '0') exp.erase(0, 1);
    while (exp.size() > 2 && exp[0] == '-' && exp[1] == '0') exp.erase(1, 1);
    return mant + "e" + exp;
  }
  os.precision(6);
  os << v;
  return os.str();
}

inline std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (const double m : {1.0, 2.0, 5.0, 10.0})
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  std::vector<double> ticks;
  const double start = std::ceil(lo / step - 1e-9) * step;
  for (double t = start; t <= hi + step * 1e-9; t += step)
    ticks.push_back(std::fabs(t) < step * 1e-9 ? 0.0 : t);
  return ticks;
}

inline std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const int klo = static_cast<int>(std::floor(std::log10(lo) - 1e-9));
  const int khi = static_cast<int>(std::ceil(std::log10(hi) + 1e-9));
  for (int k = klo; k <= khi; ++k) {
    const double t = std::pow(10.0, k);
    if (t >= lo * (1 - 1e-9) && t <= hi * (1 + 1e-9)) ticks.push_back(t);
  }
  if (ticks.size() < 2) return linear_ticks(lo, hi);
  return ticks;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

inline void write_line_plot(const std::string& path, const std::vector<PlotSeries>& series,
                            const PlotOptions& opt = {}) {
  if (series.empty()) throw ConfigError("plot: no series to draw");
  const double ml = 72, mr = 24, mt = opt.title.empty() ? 20 : 44, mb = 52;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  auto usable = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return false;
    if (opt.logx && x <= 0.0) return false;
    if (opt.logy && y <= 0.0) return false;
    return true;
  };
  for (const auto& s : series) {
    AGGFRAG_CHECK(s.x.size() == s.y.size(), "plot: x/y size mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
  }
  if (!std::isfinite(x0) || !std::isfinite(y0))
    throw ConfigError("plot: no drawable points");
  if (x1 <= x0) x1 = x0 + (opt.logx ? x0 * 9 + 1 : 1.0);
  if (y1 <= y0) y1 = y0 + (opt.logy ? y0 * 9 + 1 : 1.0);
  if (!opt.logy) {
    const double pad = (y1 - y0) * 0.05;
    y0 -= pad;
    y1 += pad;
    if (y0 < 0 && y0 + pad >= 0) y0 = 0;  // keep a natural zero baseline
  }

  auto tx = [&](double x) {
    const double u = opt.logx ? (std::log10(x) - std::log10(x0)) / (std::log10(x1) - std::log10(x0))
                              : (x - x0) / (x1 - x0);
    return ml + u * pw;
  };
  auto ty = [&](double y) {
    const double u = opt.logy ? (std::log10(y) - std::log10(y0)) / (std::log10(y1) - std::log10(y0))
                              : (y - y0) / (y1 - y0);
    return mt + (1.0 - u) * ph;
  };

  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
      << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width << " "
      << opt.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    out << "<text x=\"" << opt.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << detail::xml_escape(opt.title)
        << "</text>\n";

  const auto xticks = opt.logx ? detail::log_ticks(x0, x1) : detail::linear_ticks(x0, x1);
  const auto yticks = opt.logy ? detail::log_ticks(y0, y1) : detail::linear_ticks(y0, y1);
  out << "<g stroke=\"#cccccc\" stroke-width=\"1\">\n";
  for (const double t : xticks)
    out << "<line x1=\"" << detail::svg_num(tx(t)) << "\" y1=\"" << detail::svg_num(mt)
        << "\" x2=\"" << detail::svg_num(tx(t)) << "\" y2=\"" << detail::svg_num(mt + ph)
        << "\"/>\n";
  for (const double t : yticks)
    out << "<line x1=\"" << detail::svg_num(ml) << "\" y1=\"" << detail::svg_num(ty(t))
        << "\" x2=\"" << detail::svg_num(ml + pw) << "\" y2=\"" << detail::svg_num(ty(t))
        << "\"/>\n";
  out << "</g>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (const double t : xticks)
    out << "<text x=\"" << detail::svg_num(tx(t)) << "\" y=\"" << detail::svg_num(mt + ph + 16)
        << "\" text-anchor=\"middle\">" << detail::tick_label(t) << "</text>\n";
  for (const double t : yticks)
    out << "<text x=\"" << detail::svg_num(ml - 6) << "\" y=\"" << detail::svg_num(ty(t) + 4)
        << "\" text-anchor=\"end\">" << detail::tick_label(t) << "</text>\n";
  out << "</g>\n";
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opt.height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << detail::xml_escape(opt.xlabel) << "</text>\n";
  out << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">" << detail::xml_escape(opt.ylabel)
      << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % 8];
    std::ostringstream pts;
    std::size_t run = 0;
    auto flush = [&]() {
      if (run >= 2)
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
      else if (run == 1)
        out << "<circle r=\"2\" fill=\"" << color << "\" cx=\""
            << pts.str().substr(0, pts.str().find(',')) << "\" cy=\""
            << pts.str().substr(pts.str().find(',') + 1) << "\"/>\n";
      pts.str("");
      run = 0;
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) {
        flush();
        continue;
      }
      if (run) pts << ' ';
      pts << detail::svg_num(tx(s.x[i])) << ',' << detail::svg_num(ty(s.y[i]));
      ++run;
    }
    flush();
  }

  const double lx = ml + pw - 170, lh = 18.0 * series.size() + 10;
  out << "<rect x=\"" << lx << "\" y=\"" << mt + 8 << "\" width=\"162\" height=\"" << lh
      << "\" fill=\"white\" fill-opacity=\"0.85\" stroke=\"#999999\"/>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const double ly = mt + 8 + 14 + 18.0 * si;
    out << "<line x1=\"" << lx + 8 << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 34
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << palette[si % 8]
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << lx + 40 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::xml_escape(series[si].label) << "</text>\n";
  }
  out << "</svg>\n";
  out.close();
  if (!out) throw ConfigError("write failed for " + path);
}

}  // namespace aggfrag
