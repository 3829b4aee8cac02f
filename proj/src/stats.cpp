#include "qmaps/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>

#include "qmaps/error.hpp"

namespace qm::stats {

double chi2_sf(double x, double dof) {
  if (dof <= 0) return 1.0;
  if (x <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2, x / 2);
}

TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected,
                          double min_expected) {
  if (observed.size() != expected.size())
    throw Error(Errc::PreconditionViolation, "observed/expected size mismatch");
  // Sparse cells go to a pool; a pool that is still too thin absorbs the
  // smallest regular cell until it is not.
  TestResult r;
  for (size_t i = 0; i < observed.size(); ++i)
    if (expected[i] <= 0 && observed[i] > 0) {
      // Observations where the reference puts no mass.
      r.statistic = INFINITY;
      r.p_value = 0;
      return r;
    }
  std::vector<std::pair<double, double>> cells;  // (expected, observed)
  double pool_e = 0, pool_o = 0;
  for (size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] < min_expected) {
      pool_e += expected[i];
      pool_o += observed[i];
    } else {
      cells.emplace_back(expected[i], observed[i]);
    }
  }
  std::sort(cells.begin(), cells.end());
  size_t first = 0;
  while ((pool_e > 0 || pool_o > 0) && pool_e < min_expected && first < cells.size()) {
    pool_e += cells[first].first;
    pool_o += cells[first].second;
    ++first;
  }
  double stat = 0;
  int n = 0;
  for (size_t i = first; i < cells.size(); ++i, ++n) {
    const auto [e, o] = cells[i];
    stat += (o - e) * (o - e) / e;
  }
  if (pool_e > 0) {
    stat += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
    ++n;
  }
  r.statistic = stat;
  r.cells = n;
  r.dof = std::max(0, n - 1);
  r.p_value = chi2_sf(stat, r.dof);
  return r;
}

TestResult chi_square_independence(std::vector<std::vector<double>> t, double min_expected) {
  auto drop_empty = [&]() {
    t.erase(std::remove_if(t.begin(), t.end(),
                           [](const auto& row) {
                             return std::accumulate(row.begin(), row.end(), 0.0) == 0;
                           }),
            t.end());
    if (t.empty()) return;
    for (size_t j = t[0].size(); j-- > 0;) {
      double s = 0;
      for (const auto& row : t) s += row[j];
      if (s == 0)
        for (auto& row : t) row.erase(row.begin() + j);
    }
  };
  drop_empty();
  for (;;) {
    if (t.size() < 2 || t[0].size() < 2)
      throw Error(Errc::DegenerateTable, "contingency table collapsed below 2x2");
    const size_t R = t.size(), C = t[0].size();
    std::vector<double> rs(R, 0), cs(C, 0);
    double N = 0;
    for (size_t i = 0; i < R; ++i)
      for (size_t j = 0; j < C; ++j) {
        rs[i] += t[i][j];
        cs[j] += t[i][j];
        N += t[i][j];
      }
    const size_t ri = std::min_element(rs.begin(), rs.end()) - rs.begin();
    const size_t cj = std::min_element(cs.begin(), cs.end()) - cs.begin();
    if (rs[ri] * cs[cj] / N >= min_expected) {
      double stat = 0;
      for (size_t i = 0; i < R; ++i)
        for (size_t j = 0; j < C; ++j) {
          const double e = rs[i] * cs[j] / N;
          stat += (t[i][j] - e) * (t[i][j] - e) / e;
        }
      TestResult r;
      r.statistic = stat;
      r.dof = static_cast<double>((R - 1) * (C - 1));
      r.cells = static_cast<int>(R * C);
      r.p_value = chi2_sf(stat, r.dof);
      return r;
    }
    // Merge the two thinnest rows (or columns) along the thinner margin.
    const bool merge_rows = R > 2 && (C == 2 || rs[ri] <= cs[cj]);
    if (merge_rows) {
      std::vector<size_t> idx(R);
      std::iota(idx.begin(), idx.end(), 0);
      std::partial_sort(idx.begin(), idx.begin() + 2, idx.end(),
                        [&](size_t a, size_t b) { return rs[a] < rs[b]; });
      const size_t a = std::min(idx[0], idx[1]), b = std::max(idx[0], idx[1]);
      for (size_t j = 0; j < C; ++j) t[a][j] += t[b][j];
      t.erase(t.begin() + b);
    } else if (C > 2) {
      std::vector<size_t> idx(C);
      std::iota(idx.begin(), idx.end(), 0);
      std::partial_sort(idx.begin(), idx.begin() + 2, idx.end(),
                        [&](size_t a, size_t b) { return cs[a] < cs[b]; });
      const size_t a = std::min(idx[0], idx[1]), b = std::max(idx[0], idx[1]);
      for (auto& row : t) {
        row[a] += row[b];
        row.erase(row.begin() + b);
      }
    } else {
      throw Error(Errc::DegenerateTable, "2x2 table with expected count below threshold");
    }
  }
}

TestResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                 double min_expected) {
  if (a.size() != b.size()) throw Error(Errc::PreconditionViolation, "cell count mismatch");
  return chi_square_independence({a, b}, min_expected);
}

double kolmogorov_sf(double x) {
  if (x <= 0) return 1.0;
  if (x < 1.18) {
    // Small-x form of the CDF converges fast here.
    const double pi = 3.14159265358979323846;
    double s = 0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2 * k - 1;
      s += std::exp(-m * m * pi * pi / (8 * x * x));
    }
    return std::clamp(1.0 - std::sqrt(2 * pi) / x * s, 0.0, 1.0);
  }
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 2 : -2) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

namespace {
double ks_p(double d, double ne) {
  const double rn = std::sqrt(ne);
  return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
}
}  // namespace

TestResult ks_uniform(std::vector<double> x) {
  if (x.empty()) throw Error(Errc::PreconditionViolation, "empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double u = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, (i + 1) / n - u, u - i / n});
  }
  TestResult r;
  r.statistic = d;
  r.p_value = ks_p(d, n);
  r.cells = static_cast<int>(x.size());
  return r;
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::PreconditionViolation, "empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  TestResult r;
  r.statistic = d;
  r.p_value = ks_p(d, na * nb / (na + nb));
  r.cells = static_cast<int>(a.size() + b.size());
  return r;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& w) {
  const size_t n = x.size();
  if (n < 3 || y.size() != n) throw Error(Errc::PreconditionViolation, "need >= 3 points");
  auto wt = [&](size_t i) { return w.empty() ? 1.0 : w[i]; };
  double sw = 0, sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sw += wt(i);
    sx += wt(i) * x[i];
    sy += wt(i) * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += wt(i) * (x[i] - mx) * (x[i] - mx);
    sxy += wt(i) * (x[i] - mx) * (y[i] - my);
    syy += wt(i) * (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw Error(Errc::PreconditionViolation, "degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += wt(i) * r * r;
  }
  f.r2 = syy > 0 ? 1 - sse / syy : 1.0;
  const double s2 = sse / (n - 2);
  f.se_slope = std::sqrt(s2 / sxx);
  f.se_intercept = std::sqrt(s2 * (1.0 / sw + mx * mx / sxx));
  return f;
}

}  // namespace qm::stats
