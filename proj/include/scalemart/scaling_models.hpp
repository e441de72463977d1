#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace scalemart {

/// Selfsimilarity exponent, restricted to the open interval (0, 1).
class HurstExponent {
 public:
  explicit HurstExponent(double value);

  double value() const noexcept { return value_; }
  double two_h() const noexcept { return 2.0 * value_; }

 private:
  double value_;
};

struct ConstantShape {
  double d0 = 1.0;
};

/// Which member of the family D(u) = a (1 + |u|) is meant.
///
/// ExponentialDensity uses a = 2H, the only slope for which the stationary
/// scaling density is exactly ½e^{-|u|}. UnitSlope uses a = 1 and InverseHurst
/// uses a = 1/(2H); both give a gamma-like density
/// F(u) ∝ (1+|u|)^{2H/a-1} e^{-(2H/a)|u|}.
enum class AffineConvention { ExponentialDensity, UnitSlope, InverseHurst };

struct AffineShape {
  AffineConvention convention = AffineConvention::ExponentialDensity;

  /// The factor a in D(u) = a (1 + |u|).
  double slope(double h) const;
};

/// Piecewise-linear D(u) on a strictly increasing grid.
class TabulatedShape {
 public:
  TabulatedShape(std::vector<double> u, std::vector<double> d);

  const std::vector<double>& u() const noexcept { return u_; }
  const std::vector<double>& d() const noexcept { return d_; }
  double lo() const noexcept { return u_.front(); }
  double hi() const noexcept { return u_.back(); }
  bool contains(double u) const noexcept { return u >= lo() && u <= hi(); }

  /// Linear interpolation; caller guarantees contains(u).
  double interpolate(double u) const noexcept;

 private:
  std::vector<double> u_;
  std::vector<double> d_;
};

using DiffusionShape = std::variant<ConstantShape, AffineShape, TabulatedShape>;

std::string describe(const DiffusionShape& shape);

/// Per-unit-time drift R(t) of the log return. Only x-independent drifts are
/// supported, which is what makes detrending well defined.
struct DriftRate {
  std::function<double(double)> rate;
  std::string label = "R(t)";

  static DriftRate constant(double c);
  /// Cumulative integral from 0 to t.
  double integral(double t) const;
};

struct ScalingModel {
  HurstExponent h;
  DiffusionShape shape;
  std::optional<DriftRate> drift_rate;

  bool is_martingale() const noexcept { return !drift_rate.has_value(); }
  std::string tag() const;
};

enum class ClosedForm { Exponential, Gaussian, AffineGamma };

/// Normalized 1-point scaling density F(u) on a u grid.
struct ScalingDensity {
  std::vector<double> grid;
  std::vector<double> values;
  std::optional<ClosedForm> closed_form_tag;
  /// Normalization constant found by trapezoid integration.
  double numeric_norm = 0.0;
  /// Analytic constant when one is available; used as a self-test.
  std::optional<double> analytic_norm;
};

enum class DensityMethod { Auto, Quadrature };

/// D(u) for the given shape. Throws Domain when u lies outside a tabulated grid.
double diffusion_scaling_fn(const DiffusionShape& shape, HurstExponent h, double u);

/// D(x, t) = t^{2H-1} D(x / t^H).
double diffusion_local(const ScalingModel& model, double x, double t);

/// 4001 points on [-20, 20].
std::vector<double> default_density_grid();

std::vector<double> uniform_grid(double lo, double hi, std::size_t points);

/// Solves 2H(uF)' + (DF)'' = 0 with zero flux, F = C/D exp(-2H ∫_0^u v/D(v) dv).
///
/// Auto uses the closed form for constant and affine shapes and cumulative
/// trapezoid quadrature otherwise; Quadrature forces the numerical route.
/// Throws Truncation when the estimated mass beyond the grid exceeds 1e-6.
ScalingDensity scaling_density(const DiffusionShape& shape, HurstExponent h,
                               std::span<const double> grid,
                               DensityMethod method = DensityMethod::Auto);

/// ∫ u^n F(u) du by the trapezoid rule.
double density_moment(const ScalingDensity& density, int n);

/// Restricts the residual to lo <= |u| <= hi.
struct ResidualWindow {
  double lo = 0.0;
  double hi = 1e300;
};

/// Max absolute finite-difference residual of 2H(uF)' + (DF)'' on each half-line,
/// excluding the three grid points nearest u = 0 where |u| has a kink.
double ode_residual(const ScalingDensity& density, const DiffusionShape& shape,
                    HurstExponent h, ResidualWindow window = {});

}  // namespace scalemart
