#pragma once

// Minimal static SVG charts: grouped bars and line series. Output depends only
// on the inputs (fixed number formatting), so reruns are byte-identical.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace lbreuse::svg {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                 "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return colors[i % 10];
}

inline std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

struct Series {
  std::string name;
  std::vector<double> values;
};

namespace detail {

struct Frame {
  double w = 0, h = 0, left = 60, right = 150, top = 40, bottom = 50;
  double lo = 0, hi = 1;
  double pw() const { return w - left - right; }
  double ph() const { return h - top - bottom; }
  double y(double v) const { return top + ph() * (1.0 - (v - lo) / (hi - lo)); }
};

inline void range(const std::vector<Series>& s, double& lo, double& hi) {
  lo = 1e300;
  hi = -1e300;
  for (const auto& x : s)
    for (double v : x.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (lo > hi) { lo = 0; hi = 1; }
  lo = std::min(lo, 0.0);
  if (hi - lo < 1e-9) hi = lo + 1.0;
  hi += 0.05 * (hi - lo);
}

inline std::string header(const Frame& f, const std::string& title, const std::string& ylabel) {
  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(f.w) + "\" height=\"" + fmt(f.h) +
                  "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt(f.w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
  o += "<text x=\"14\" y=\"" + fmt(f.top + f.ph() / 2) + "\" transform=\"rotate(-90 14 " + fmt(f.top + f.ph() / 2) +
       ")\" text-anchor=\"middle\">" + escape(ylabel) + "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = f.lo + (f.hi - f.lo) * t / 4.0;
    const double y = f.y(v);
    o += "<line x1=\"" + fmt(f.left) + "\" x2=\"" + fmt(f.left + f.pw()) + "\" y1=\"" + fmt(y) + "\" y2=\"" + fmt(y) +
         "\" stroke=\"#ddd\"/>\n";
    o += "<text x=\"" + fmt(f.left - 4) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
  }
  return o;
}

inline std::string legend(const Frame& f, const std::vector<Series>& s) {
  std::string o;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double y = f.top + 16.0 * i;
    o += "<rect x=\"" + fmt(f.w - f.right + 10) + "\" y=\"" + fmt(y) + "\" width=\"10\" height=\"10\" fill=\"" +
         palette(i) + "\"/>\n";
    o += "<text x=\"" + fmt(f.w - f.right + 24) + "\" y=\"" + fmt(y + 9) + "\">" + escape(s[i].name) + "</text>\n";
  }
  return o;
}

}  // namespace detail

// One group per category, one bar per series.
inline std::string grouped_bars(const std::string& title, const std::string& ylabel,
                                const std::vector<std::string>& categories, const std::vector<Series>& series) {
  detail::Frame f;
  f.w = std::max(500.0, 60.0 + 150.0 + categories.size() * (series.size() * 10.0 + 14.0));
  f.h = 360;
  detail::range(series, f.lo, f.hi);
  std::string o = detail::header(f, title, ylabel);
  const double gw = categories.empty() ? f.pw() : f.pw() / categories.size();
  const double bw = series.empty() ? 0 : (gw - 8.0) / series.size();
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = f.left + c * gw + 4.0;
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (c >= series[s].values.size()) continue;
      const double v = series[s].values[c];
      const double y0 = f.y(std::max(0.0, f.lo)), y1 = f.y(v);
      o += "<rect x=\"" + fmt(gx + s * bw) + "\" y=\"" + fmt(std::min(y0, y1)) + "\" width=\"" + fmt(bw) +
           "\" height=\"" + fmt(std::abs(y0 - y1)) + "\" fill=\"" + palette(s) + "\"/>\n";
    }
    o += "<text x=\"" + fmt(gx + gw / 2 - 4) + "\" y=\"" + fmt(f.top + f.ph() + 16) + "\" text-anchor=\"middle\">" +
         escape(categories[c]) + "</text>\n";
  }
  return o + detail::legend(f, series) + "</svg>\n";
}

// x = 1..n for each series.
inline std::string lines(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                         const std::vector<Series>& series) {
  detail::Frame f;
  f.w = 760;
  f.h = 360;
  detail::range(series, f.lo, f.hi);
  std::string o = detail::header(f, title, ylabel);
  std::size_t n = 0;
  for (const auto& s : series) n = std::max(n, s.values.size());
  auto x = [&](std::size_t i) { return f.left + (n <= 1 ? 0.0 : f.pw() * i / (n - 1.0)); };
  for (std::size_t i = 0; i < n; ++i)
    o += "<text x=\"" + fmt(x(i)) + "\" y=\"" + fmt(f.top + f.ph() + 16) + "\" text-anchor=\"middle\">" +
         std::to_string(i + 1) + "</text>\n";
  o += "<text x=\"" + fmt(f.left + f.pw() / 2) + "\" y=\"" + fmt(f.h - 10) + "\" text-anchor=\"middle\">" +
       escape(xlabel) + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string pts;
    for (std::size_t i = 0; i < series[s].values.size(); ++i)
      pts += (i ? " " : "") + fmt(x(i)) + "," + fmt(f.y(series[s].values[i]));
    o += "<polyline fill=\"none\" stroke=\"" + std::string(palette(s)) + "\" stroke-width=\"2\" points=\"" + pts +
         "\"/>\n";
  }
  return o + detail::legend(f, series) + "</svg>\n";
}

}  // namespace lbreuse::svg
