#include "scalemart/stats.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "scalemart/error.hpp"

namespace scalemart::stats {

LineFit ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "line fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, "line fit needs at least two distinct abscissas");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? std::min(1.0, (sxy * sxy) / (sxx * syy)) : 1.0;
  return fit;
}

double chi_square_survival(double x, double dof) {
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

double two_sided_tail(double z) {
  boost::math::normal dist;
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z)));
}

double simultaneous_z(double sigmas, std::size_t tests) {
  require(tests >= 1, "simultaneous band needs at least one test");
  const double coverage = 1.0 - two_sided_tail(sigmas);
  const double per_test = std::pow(coverage, 1.0 / static_cast<double>(tests));
  boost::math::normal dist;
  return boost::math::quantile(dist, 0.5 + 0.5 * per_test);
}

}  // namespace scalemart::stats
