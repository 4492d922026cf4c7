#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance binary. Written from the definitions, not from the library code.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// Handover: neighbour must exceed serving + offset + hysteresis strictly.
inline bool handover(double fi, double fj, double a, double h) {
  const double margin = fj - fi - a - h;
  return margin > 0.0;
}

// Reselection: both strict conditions, written as negated non-strict ones.
inline bool reselection(double fi, double fj, double beta, double gamma) {
  return !(fi >= beta) && !(fj <= gamma);
}

struct Kpis {
  double avg, min, sd, cong;
};

inline Kpis kpis(const std::vector<double>& mbps, double eps) {
  const double n = static_cast<double>(mbps.size());
  double sum = 0.0;
  for (double x : mbps) sum += x;
  const double avg = sum / n;
  double mn = mbps[0];
  for (double x : mbps) mn = x < mn ? x : mn;
  double ss = 0.0;
  for (double x : mbps) ss += (x - avg) * (x - avg);
  double above = 0.0;
  for (double x : mbps)
    if (x > eps) above += 1.0;
  return {avg, mn, std::sqrt(ss / n), above / n};
}

inline double rel_err(double a, double b) {
  const double d = std::fabs(a - b);
  const double s = std::max(std::fabs(a), std::fabs(b));
  return s == 0.0 ? d : d / s;
}

struct GridResult {
  long checked = 0;
  long mismatches = 0;
};

// Exhaustive grid: RSRP-like values over -110..-70 step 5, offsets over -6..6 step 1.
template <class Handover, class Reselection>
GridResult rule_grid(Handover&& ho, Reselection&& rs) {
  GridResult g;
  for (int fi = -110; fi <= -70; fi += 5)
    for (int fj = -110; fj <= -70; fj += 5) {
      for (int a = -6; a <= 6; ++a)
        for (int h = -6; h <= 6; ++h) {
          ++g.checked;
          if (ho(fi, fj, a, h) != handover(fi, fj, a, h)) ++g.mismatches;
        }
      for (int b = -110; b <= -70; b += 5)
        for (int c = -110; c <= -70; c += 5) {
          ++g.checked;
          if (rs(fi, fj, b, c) != reselection(fi, fj, b, c)) ++g.mismatches;
        }
    }
  return g;
}

// Discounted Monte-Carlo returns within episodes (done resets), bootstrapped
// with last_value at the end of the trajectory.
inline std::vector<double> mc_returns(const std::vector<double>& r, const std::vector<bool>& done, double last_value,
                                      double gamma) {
  std::vector<double> g(r.size());
  double acc = last_value;
  for (int t = static_cast<int>(r.size()) - 1; t >= 0; --t) {
    if (done[t]) acc = 0.0;
    acc = r[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

// Adjusted Rand index from the contingency table, straight from the formula.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  const int n = static_cast<int>(a.size());
  int ka = 0, kb = 0;
  for (int i = 0; i < n; ++i) {
    ka = std::max(ka, a[i] + 1);
    kb = std::max(kb, b[i] + 1);
  }
  std::vector<std::vector<double>> t(ka, std::vector<double>(kb, 0.0));
  for (int i = 0; i < n; ++i) t[a[i]][b[i]] += 1.0;
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sij = 0.0, sa = 0.0, sb = 0.0;
  for (int i = 0; i < ka; ++i) {
    double row = 0.0;
    for (int j = 0; j < kb; ++j) {
      sij += c2(t[i][j]);
      row += t[i][j];
    }
    sa += c2(row);
  }
  for (int j = 0; j < kb; ++j) {
    double col = 0.0;
    for (int i = 0; i < ka; ++i) col += t[i][j];
    sb += c2(col);
  }
  const double expected = sa * sb / c2(n);
  const double mx = 0.5 * (sa + sb);
  return mx == expected ? 1.0 : (sij - expected) / (mx - expected);
}

}  // namespace oracle
