#include "scalemart/scaling_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "scalemart/error.hpp"

namespace scalemart {

namespace {

constexpr double kMaxTailMass = 1e-6;

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    sum += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  }
  return sum;
}

void validate_symmetric_grid(std::span<const double> grid) {
  require(grid.size() >= 3, "density grid needs at least 3 points");
  double scale = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(std::isfinite(grid[i]), "density grid must be finite");
    if (i > 0) require(grid[i] > grid[i - 1], "density grid must be strictly increasing");
    scale = std::max(scale, std::abs(grid[i]));
  }
  for (std::size_t i = 0, j = grid.size() - 1; i < j; ++i, --j) {
    require(std::abs(grid[i] + grid[j]) <= 1e-9 * scale,
            "density grid must be symmetric about 0");
  }
}

// Estimated mass beyond each edge, assuming locally exponential decay.
double edge_tail_mass(double f_edge, double f_inner, double step) {
  if (f_edge == 0.0) return 0.0;
  if (f_inner <= f_edge) return std::numeric_limits<double>::infinity();
  const double rate = (std::log(f_inner) - std::log(f_edge)) / step;
  return f_edge / rate;
}

struct UnnormalizedDensity {
  std::vector<double> values;
  std::optional<ClosedForm> tag;
  std::optional<double> analytic_norm;
};

UnnormalizedDensity closed_form(const DiffusionShape& shape, double h,
                                std::span<const double> grid) {
  UnnormalizedDensity out;
  out.values.resize(grid.size());
  if (const auto* c = std::get_if<ConstantShape>(&shape)) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out.values[i] = std::exp(-h * grid[i] * grid[i] / c->d0);
    }
    out.tag = ClosedForm::Gaussian;
    out.analytic_norm = std::sqrt(h / (std::numbers::pi * c->d0));
    return out;
  }
  const auto& a = std::get<AffineShape>(shape);
  const double k = 2.0 * h / a.slope(h);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = std::abs(grid[i]);
    out.values[i] = std::pow(1.0 + v, k - 1.0) * std::exp(-k * v);
  }
  if (k == 1.0) {
    out.tag = ClosedForm::Exponential;
    out.analytic_norm = 0.5;
  } else {
    out.tag = ClosedForm::AffineGamma;
    // ∫(1+|u|)^{k-1} e^{-k|u|} du = 2 e^k k^{-k} Γ(k, k)
    const double mass = 2.0 * std::exp(k) * std::pow(k, -k) * boost::math::tgamma(k, k);
    out.analytic_norm = 1.0 / mass;
  }
  return out;
}

UnnormalizedDensity quadrature(const DiffusionShape& shape, HurstExponent h,
                               std::span<const double> grid) {
  const std::size_t n = grid.size();
  std::vector<double> d(n), integrand(n), cumulative(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = diffusion_scaling_fn(shape, h, grid[i]);
    integrand[i] = grid[i] / d[i];
  }
  // ∫_0^u v/D(v) dv outward from 0 on both sides; the integrand vanishes at 0.
  const auto first_nonneg = static_cast<std::size_t>(
      std::lower_bound(grid.begin(), grid.end(), 0.0) - grid.begin());
  double prev_u = 0.0, prev_g = 0.0, acc = 0.0;
  for (std::size_t i = first_nonneg; i < n; ++i) {
    acc += 0.5 * (grid[i] - prev_u) * (integrand[i] + prev_g);
    cumulative[i] = acc;
    prev_u = grid[i];
    prev_g = integrand[i];
  }
  prev_u = 0.0, prev_g = 0.0, acc = 0.0;
  for (std::size_t i = first_nonneg; i-- > 0;) {
    acc += 0.5 * (prev_u - grid[i]) * (integrand[i] + prev_g);
    // ∫_0^u with u < 0 runs backwards
    cumulative[i] = -acc;
    prev_u = grid[i];
    prev_g = integrand[i];
  }
  UnnormalizedDensity out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = std::exp(-h.two_h() * cumulative[i]) / d[i];
  }
  return out;
}

}  // namespace

HurstExponent::HurstExponent(double value) : value_(value) {
  require(std::isfinite(value) && value > 0.0 && value < 1.0,
          "Hurst exponent must lie in (0, 1), got " + std::to_string(value));
}

double AffineShape::slope(double h) const {
  switch (convention) {
    case AffineConvention::ExponentialDensity:
      return 2.0 * h;
    case AffineConvention::UnitSlope:
      return 1.0;
    case AffineConvention::InverseHurst:
      return 1.0 / (2.0 * h);
  }
  return 1.0;
}

TabulatedShape::TabulatedShape(std::vector<double> u, std::vector<double> d)
    : u_(std::move(u)), d_(std::move(d)) {
  require(u_.size() == d_.size(), "tabulated shape: u and D columns differ in length");
  require(u_.size() >= 2, "tabulated shape needs at least 2 points");
  for (std::size_t i = 0; i < u_.size(); ++i) {
    require(std::isfinite(u_[i]) && std::isfinite(d_[i]), "tabulated shape: non-finite entry");
    require(d_[i] > 0.0, "tabulated shape: D(u) must be positive");
    if (i > 0) require(u_[i] > u_[i - 1], "tabulated shape: u must be strictly increasing");
  }
}

double TabulatedShape::interpolate(double u) const noexcept {
  auto it = std::upper_bound(u_.begin(), u_.end(), u);
  if (it == u_.end()) return d_.back();
  if (it == u_.begin()) return d_.front();
  const auto i = static_cast<std::size_t>(it - u_.begin());
  const double w = (u - u_[i - 1]) / (u_[i] - u_[i - 1]);
  return d_[i - 1] + w * (d_[i] - d_[i - 1]);
}

std::string describe(const DiffusionShape& shape) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantShape>) {
          os << "constant(d0=" << s.d0 << ")";
        } else if constexpr (std::is_same_v<T, AffineShape>) {
          switch (s.convention) {
            case AffineConvention::ExponentialDensity:
              os << "affine(2H(1+|u|))";
              break;
            case AffineConvention::UnitSlope:
              os << "affine(1+|u|)";
              break;
            case AffineConvention::InverseHurst:
              os << "affine((1+|u|)/2H)";
              break;
          }
        } else {
          os << "tabulated(" << s.u().size() << " points on [" << s.lo() << ", " << s.hi()
             << "])";
        }
      },
      shape);
  return os.str();
}

DriftRate DriftRate::constant(double c) {
  DriftRate r{[c](double) { return c; }, "constant(" + std::to_string(c) + ")"};
  return r;
}

double DriftRate::integral(double t) const {
  if (t <= 0.0) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(rate, 0.0, t, 15, 1e-12);
}

std::string ScalingModel::tag() const {
  std::ostringstream os;
  os.precision(17);
  os << "scaling(H=" << h.value() << ", D=" << describe(shape);
  if (drift_rate) os << ", drift=" << drift_rate->label;
  os << ")";
  return os.str();
}

double diffusion_scaling_fn(const DiffusionShape& shape, HurstExponent h, double u) {
  require(std::isfinite(u), "u must be finite");
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantShape>) {
          require(s.d0 > 0.0 && std::isfinite(s.d0), "constant diffusion must be positive");
          return s.d0;
        } else if constexpr (std::is_same_v<T, AffineShape>) {
          return s.slope(h.value()) * (1.0 + std::abs(u));
        } else {
          if (!s.contains(u)) {
            std::ostringstream os;
            os << "u=" << u << " outside tabulated range [" << s.lo() << ", " << s.hi() << "]";
            fail(ErrorKind::Domain, os.str());
          }
          return s.interpolate(u);
        }
      },
      shape);
}

double diffusion_local(const ScalingModel& model, double x, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    fail(ErrorKind::Domain, "local diffusion needs t > 0");
  }
  const double h = model.h.value();
  const double u = x / std::pow(t, h);
  return std::pow(t, 2.0 * h - 1.0) * diffusion_scaling_fn(model.shape, model.h, u);
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  require(points >= 2 && hi > lo, "uniform grid needs hi > lo and >= 2 points");
  std::vector<double> g(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + step * static_cast<double>(i);
  if (lo == -hi) {
    // exact mirror symmetry
    for (std::size_t i = 0, j = points - 1; i < j; ++i, --j) g[j] = -g[i];
    if (points % 2 == 1) g[points / 2] = 0.0;
  }
  return g;
}

std::vector<double> default_density_grid() { return uniform_grid(-20.0, 20.0, 4001); }

ScalingDensity scaling_density(const DiffusionShape& shape, HurstExponent h,
                               std::span<const double> grid, DensityMethod method) {
  validate_symmetric_grid(grid);
  const bool has_closed_form = !std::holds_alternative<TabulatedShape>(shape);
  if (const auto* c = std::get_if<ConstantShape>(&shape)) {
    require(c->d0 > 0.0 && std::isfinite(c->d0), "constant diffusion must be positive");
  }
  UnnormalizedDensity raw = (method == DensityMethod::Auto && has_closed_form)
                                ? closed_form(shape, h.value(), grid)
                                : quadrature(shape, h, grid);

  const double mass = trapezoid(grid, raw.values);
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    fail(ErrorKind::Numeric, "scaling density has non-positive or non-finite mass");
  }
  const std::size_t n = grid.size();
  const double tail = edge_tail_mass(raw.values[0], raw.values[1], grid[1] - grid[0]) +
                      edge_tail_mass(raw.values[n - 1], raw.values[n - 2],
                                     grid[n - 1] - grid[n - 2]);
  if (tail / mass > kMaxTailMass) {
    std::ostringstream os;
    os << "density grid [" << grid.front() << ", " << grid.back()
       << "] truncates estimated tail mass " << tail / mass << " > " << kMaxTailMass;
    fail(ErrorKind::Truncation, os.str());
  }

  ScalingDensity out;
  out.grid.assign(grid.begin(), grid.end());
  out.values = std::move(raw.values);
  for (double& v : out.values) v /= mass;
  out.closed_form_tag = raw.tag;
  out.numeric_norm = 1.0 / mass;
  out.analytic_norm = raw.analytic_norm;
  return out;
}

double density_moment(const ScalingDensity& density, int n) {
  require(n >= 0, "moment order must be nonnegative");
  std::vector<double> integrand(density.grid.size());
  for (std::size_t i = 0; i < integrand.size(); ++i) {
    integrand[i] = std::pow(density.grid[i], n) * density.values[i];
  }
  return trapezoid(density.grid, integrand);
}

double ode_residual(const ScalingDensity& density, const DiffusionShape& shape,
                    HurstExponent h, ResidualWindow window) {
  const auto& u = density.grid;
  const auto& f = density.values;
  require(u.size() == f.size(), "density grid and values differ in length");

  // Indices on each half-line, ordered by distance from 0.
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] > 0.0) pos.push_back(i);
  }
  for (std::size_t i = u.size(); i-- > 0;) {
    if (u[i] < 0.0) neg.push_back(i);
  }
  constexpr std::size_t kMinPoints = 7;
  constexpr std::size_t kKinkExclusion = 3;
  if (pos.size() < kMinPoints || neg.size() < kMinPoints) {
    fail(ErrorKind::Argument, "ode residual needs at least 7 grid points per half-line");
  }

  auto residual_at = [&](std::size_t a, std::size_t b, std::size_t c) {
    const double h1 = u[b] - u[a];
    const double h2 = u[c] - u[b];
    const double uf_a = u[a] * f[a], uf_b = u[b] * f[b], uf_c = u[c] * f[c];
    const double df_a = diffusion_scaling_fn(shape, h, u[a]) * f[a];
    const double df_b = diffusion_scaling_fn(shape, h, u[b]) * f[b];
    const double df_c = diffusion_scaling_fn(shape, h, u[c]) * f[c];
    const double d1 = -h2 / (h1 * (h1 + h2)) * uf_a + (h2 - h1) / (h1 * h2) * uf_b +
                      h1 / (h2 * (h1 + h2)) * uf_c;
    const double d2 = 2.0 * (df_a / (h1 * (h1 + h2)) - df_b / (h1 * h2) +
                             df_c / (h2 * (h1 + h2)));
    return h.two_h() * d1 + d2;
  };

  double worst = 0.0;
  std::size_t evaluated = 0;
  auto sweep = [&](const std::vector<std::size_t>& side) {
    for (std::size_t j = kKinkExclusion; j + 1 < side.size(); ++j) {
      const std::size_t i = side[j];
      const double au = std::abs(u[i]);
      if (au < window.lo || au > window.hi) continue;
      // grid indices are increasing in u, so order the stencil by index
      const std::size_t a = std::min(side[j - 1], side[j + 1]);
      const std::size_t c = std::max(side[j - 1], side[j + 1]);
      worst = std::max(worst, std::abs(residual_at(a, i, c)));
      ++evaluated;
    }
  };
  sweep(pos);
  sweep(neg);
  require(evaluated > 0, "no grid points inside the residual window");
  return worst;
}

}  // namespace scalemart
