#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scalemart/kernels.hpp"
#include "scalemart/scaling_models.hpp"
#include "scalemart/series.hpp"

namespace scalemart {

enum class Scheme { TransformedTime };

struct SimConfig {
  std::uint64_t seed = 0;
  /// Euler steps per unit of transformed time s = t^{2H}.
  int steps_per_unit_time = 100;
  Scheme scheme = Scheme::TransformedTime;
  /// Budget on paths × Euler steps.
  std::uint64_t max_path_steps = 100'000'000'000ULL;
  /// Budget on paths × sample times held in memory.
  std::uint64_t max_ensemble_cells = 1'000'000'000ULL;
  /// Budget on samples in one series.
  std::uint64_t max_series_length = 10'000'000ULL;
  kernels::Execution execution = kernels::Execution::Parallel;
};

/// Contiguous pieces of one day, each with its own scaling model. Time inside
/// an interval is measured from the interval start, and so is x.
struct DailySchedule {
  struct Interval {
    double start;
    double end;
    HurstExponent h;
    DiffusionShape shape;
  };

  std::vector<Interval> intervals;
  double t_day = 0.0;

  /// Throws Argument unless the intervals partition (0, t_day].
  void validate() const;
};

/// N paths of dx = sqrt(D(u)/2H) dB(s), s = t^{2H}, u = x/sqrt(s), recorded at
/// the requested physical times. A drift, if present, adds ∫_0^t R after
/// integration.
PathEnsemble simulate_ensemble(const ScalingModel& model, std::size_t n_paths,
                               std::span<const double> sample_times, const SimConfig& config);

/// One path sampled at t = k * sample_interval, k = 1..floor(t_max / sample_interval).
TimeSeries simulate_path(const ScalingModel& model, double t_max, double sample_interval,
                         const SimConfig& config);

/// Exact fBm with Cov(x(t), x(s)) = (c/2)(t^{2H} + s^{2H} - |t-s|^{2H}) on
/// t_k = k dt, k = 1..n, via the Hosking (Durbin-Levinson) recursion on the
/// increments.
TimeSeries simulate_fbm(HurstExponent h, std::size_t n, double dt, double variance_prefactor,
                        const SimConfig& config);

/// n_paths independent fBm paths on t_k = k dt, k = 1..n.
PathEnsemble simulate_fbm_ensemble(HurstExponent h, std::size_t n_paths, std::size_t n,
                                   double dt, double variance_prefactor,
                                   const SimConfig& config);

/// n_days independent intraday trajectories, each restarting at x = 0, sampled
/// at day_start + k * sample_interval for k = 0..t_day/sample_interval - 1.
TimeSeries simulate_daily_pattern(const DailySchedule& schedule, std::size_t n_days,
                                  double sample_interval, const SimConfig& config);

/// Autocovariance of fBm increments over a step dt at integer lag k.
double fgn_autocovariance(HurstExponent h, double dt, double variance_prefactor, std::size_t k);

}  // namespace scalemart
