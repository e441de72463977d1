#pragma once

#include <cstddef>
#include <span>

namespace scalemart::stats {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Unweighted least squares y = intercept + slope * x.
LineFit ordinary_least_squares(std::span<const double> x, std::span<const double> y);

/// P(X > x) for a chi-square variable with `dof` degrees of freedom.
double chi_square_survival(double x, double dof);

/// Two-sided standard-normal tail probability P(|Z| > z).
double two_sided_tail(double z);

/// Per-test z threshold such that `tests` independent two-sided tests have the
/// same family-wise coverage as one test at `sigmas` (Šidák correction).
double simultaneous_z(double sigmas, std::size_t tests);

}  // namespace scalemart::stats
