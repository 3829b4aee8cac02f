#pragma once

#include <string>
#include <vector>

namespace qm::stats {

struct TestResult {
  double statistic = 0;
  double dof = 0;
  double p_value = 1;
  int cells = 0;  // after pooling
};

double chi2_sf(double x, double dof);

// Goodness of fit.  `expected` are counts with the same total as `observed`
// (callers add their own remainder cell).  Cells with expected count below
// min_expected are pooled.
TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected,
                          double min_expected = 5.0);

// Pearson independence test on an r x c contingency table.  Sparse rows and
// columns are merged into a remainder row/column until every expected cell
// reaches min_expected (or the table collapses, which throws DegenerateTable).
TestResult chi_square_independence(std::vector<std::vector<double>> table,
                                   double min_expected = 5.0);

// Homogeneity of two count vectors over the same cells.
TestResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                 double min_expected = 5.0);

// Kolmogorov limiting distribution, P(K > x).
double kolmogorov_sf(double x);
TestResult ks_uniform(std::vector<double> sample);
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Ordinary least squares y = a + b x.
struct LinearFit {
  double intercept = 0, slope = 0, r2 = 0, se_intercept = 0, se_slope = 0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& w = {});

}  // namespace qm::stats
