#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an OpenMP
// variant that must agree bit for bit: work is split into fixed blocks whose
// boundaries do not depend on the thread count, and partial results are merged
// in block order.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "scalemart/rng.hpp"
#include "scalemart/scaling_models.hpp"

namespace scalemart::kernels {

enum class Execution { Serial, Parallel };

inline constexpr std::size_t kBlockSize = 8192;

/// Euler-Maruyama schedule in transformed time s = t^{2H}.
///
/// Each gap between consecutive sample times is cut into
/// max(1, ceil(Δs * steps_per_unit)) equal steps; a sample at t = 0 costs no
/// steps. The diffusion at each step is evaluated at the step's left end,
/// with u = 0 when s = 0.
struct StepPlan {
  std::vector<double> sqrt_ds;
  std::vector<double> inv_sqrt_s;
  /// Number of steps taken before sample k is recorded.
  std::vector<std::size_t> sample_end;

  std::size_t total_steps() const noexcept { return sqrt_ds.size(); }
  std::size_t n_samples() const noexcept { return sample_end.size(); }
};

StepPlan make_step_plan(std::span<const double> times, double two_h, int steps_per_unit);

/// Total step count without materializing the plan (for budget checks).
std::uint64_t count_steps(std::span<const double> times, double two_h, int steps_per_unit);

/// sqrt(D(u) / 2H): the noise amplitude per unit sqrt(ds).
struct ConstantVol {
  double amplitude;
  double operator()(double) const noexcept { return amplitude; }
};

struct AffineVol {
  double scale;  // a / 2H
  double operator()(double u) const noexcept { return std::sqrt(scale * (1.0 + std::abs(u))); }
};

/// Returns NaN outside the table so that the failure survives to the caller.
struct TabulatedVol {
  const TabulatedShape* table;
  double inv_two_h;
  double operator()(double u) const noexcept {
    if (!table->contains(u)) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(table->interpolate(u) * inv_two_h);
  }
};

template <class Vol>
void integrate_path(const StepPlan& plan, const Vol& vol, PathStream& stream,
                    std::span<double> out) noexcept {
  double x = 0.0;
  std::size_t step = 0;
  const double* sqrt_ds = plan.sqrt_ds.data();
  const double* inv_sqrt_s = plan.inv_sqrt_s.data();
  for (std::size_t k = 0; k < plan.n_samples(); ++k) {
    const std::size_t end = plan.sample_end[k];
    for (; step < end; ++step) {
      x += vol(x * inv_sqrt_s[step]) * sqrt_ds[step] * stream.normal();
    }
    out[k] = x;
  }
}

/// Integrates paths [first, first + count) into rows of `out` (count × samples).
/// Path i draws from PathStream(seed, i, domain). Returns false if any value
/// is non-finite (tabulated shape left its table).
bool simulate_paths(const StepPlan& plan, const DiffusionShape& shape, HurstExponent h,
                    std::uint64_t seed, std::uint32_t domain, std::size_t first,
                    std::size_t count, std::span<double> out, Execution exec);

/// Counts of values in [lo, hi) split into `bins` equal bins; hi itself goes
/// into the last bin, everything else outside is ignored.
std::vector<std::uint64_t> histogram(std::span<const double> values, double lo, double hi,
                                     std::size_t bins, Execution exec);

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;  // central
  double m4 = 0.0;  // central

  double variance() const noexcept { return m2; }
  double excess_kurtosis() const noexcept { return m4 / (m2 * m2) - 3.0; }
};

Moments central_moments(std::span<const double> values, Execution exec);

/// Σ a_i b_i, summed blockwise in fixed order.
double dot(std::span<const double> a, std::span<const double> b, Execution exec);

/// Σ v_i^2, summed blockwise in fixed order.
double sum_squares(std::span<const double> v, Execution exec);

/// Σ v_i, summed blockwise in fixed order.
double sum(std::span<const double> v, Execution exec);

/// z_j = x[j*stride + lag] - x[j*stride].
std::vector<double> lagged_differences(std::span<const double> x, std::size_t lag,
                                       std::size_t stride, Execution exec);

/// Number of OpenMP threads available (1 without OpenMP).
int max_threads() noexcept;

}  // namespace scalemart::kernels
