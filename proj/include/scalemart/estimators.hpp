#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scalemart/kernels.hpp"
#include "scalemart/scaling_models.hpp"
#include "scalemart/series.hpp"

namespace scalemart {

/// Equal-width binning. Without an explicit range the bins span
/// mean ± sigma_span standard deviations of the sample.
struct BinSpec {
  std::size_t count = 101;
  double sigma_span = 5.0;
  std::optional<std::pair<double, double>> range;
};

/// Bins holding fewer counts than this are left out of every sup-norm comparison.
inline constexpr std::uint64_t kPopulatedBinCount = 100;

struct RescaleTag {
  double h = 0.0;
  /// Time t (ensemble) or lag T (sliding window) the sample was divided by, to the power h.
  double scale_time = 0.0;
};

struct DensityEstimate {
  std::vector<double> bin_edges;
  /// count / (sample_count * width)
  std::vector<double> probability_density;
  std::vector<std::uint64_t> counts;
  /// Samples inside the binned range.
  std::size_t sample_count = 0;
  /// All samples offered, including those outside the range.
  std::size_t total_count = 0;
  std::optional<RescaleTag> rescale_tag;
  /// Moments of the raw samples, when they were available.
  std::optional<double> sample_variance;
  std::optional<double> sample_excess_kurtosis;

  std::size_t bins() const noexcept { return counts.size(); }
  double width(std::size_t i) const noexcept { return bin_edges[i + 1] - bin_edges[i]; }
  double center(std::size_t i) const noexcept { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
};

/// Histogram of an arbitrary sample (moments taken from the raw values).
DensityEstimate density_from_samples(std::span<const double> samples, const BinSpec& bins,
                                     kernels::Execution exec = kernels::Execution::Parallel);

enum class FitKind { EnsembleVariance, SlidingMsf };

struct FitPoint {
  double log_abscissa;
  double log_ordinate;
  double residual;
};

struct HurstFit {
  double exponent = 0.0;
  double log_intercept = 0.0;
  double r_squared = 0.0;
  std::vector<FitPoint> points;
  FitKind kind = FitKind::EnsembleVariance;
};

struct MsfProfile {
  std::vector<double> t_grid;
  std::vector<double> msf;
  std::vector<double> standard_errors;
  std::vector<std::size_t> sample_counts;
  double lag = 0.0;
  /// Kurtosis of slot-standardized increments, pooled over slots.
  double pooled_kurtosis = 0.0;
  /// Set when any slot has fewer than 30 samples.
  bool wide_error_warning = false;
};

struct AutocorrReport {
  double raw = 0.0;
  double normalized = 0.0;
  std::size_t sample_count = 0;
  double three_sigma_band = 0.0;
  /// Pooled over t along one series: meaningful only for stationary increments.
  bool pooled_over_time = false;

  bool within_band() const noexcept { return std::abs(normalized) <= three_sigma_band; }
};

struct TailRegion {
  double u_lo = 0.0;
  double u_hi = 0.0;
};

struct TailReport {
  double excess_kurtosis = 0.0;
  bool kurtosis_from_samples = false;
  /// Fit of log F against |u| on the tail region; linear for exponential tails.
  double semilog_r2 = 0.0;
  /// Fit of log F against log |u|; linear for power-law tails.
  double loglog_r2 = 0.0;
  TailRegion tail_region;

  bool exponential_tail() const noexcept { return semilog_r2 > loglog_r2; }
};

struct ConditionalMeanReport {
  std::vector<double> bin_centers;
  std::vector<double> conditional_means;
  std::vector<std::size_t> counts;
  /// max |E[x(t+T) - x(t) | x(t) in bin]| over bins with >= kPopulatedBinCount paths.
  double max_abs_deviation = 0.0;
  /// Largest deviation in units of its standard error.
  double max_z = 0.0;
  /// Simultaneous 3-sigma threshold for max_z over the populated bins.
  double z_threshold = 0.0;
  std::size_t populated_bins = 0;

  bool within_bands() const noexcept { return max_z <= z_threshold; }
};

struct CollapseResult {
  std::vector<DensityEstimate> rescaled;
  /// max over commonly populated bins of (max - min) of F across times.
  double collapse_score = 0.0;
  /// Largest spread divided by the standard error of a pairwise difference.
  double max_z = 0.0;
  double z_threshold = 0.0;
  /// All rescaled samples pooled; carries raw-sample moments.
  DensityEstimate pooled;

  bool within_band() const noexcept { return max_z <= z_threshold; }
};

enum class Stationarity { StationaryIncrements, NonstationaryIncrements };

struct StationarityResult {
  Stationarity verdict = Stationarity::StationaryIncrements;
  double chi_square = 0.0;
  double dof = 0.0;
  /// Evidence score: p-value of a flat profile.
  double p_value = 1.0;
  double weighted_mean = 0.0;
};

/// Histogram of x_i(t) across paths at one time index.
DensityEstimate ensemble_density(const PathEnsemble& ensemble, std::size_t time_index,
                                 const BinSpec& bins = {});

/// Rescales each fixed-t density to u = x/t^H, F = t^H f.
CollapseResult collapse(const PathEnsemble& ensemble, std::span<const std::size_t> time_indices,
                        HurstExponent h, const BinSpec& bins = {});

/// Least squares of log <x^2(t)> on log t; exponent = slope / 2.
HurstFit fit_hurst_variance(const PathEnsemble& ensemble);

/// Increments x(t+T) - x(t) with start indices stepping by `stride`.
std::vector<double> sliding_increments(const TimeSeries& series, double lag,
                                       std::size_t stride = 1);

/// Histogram of z / T^{H_s} over all window positions.
DensityEstimate sliding_density(const TimeSeries& series, double lag, HurstExponent h_s,
                                const BinSpec& bins = {});

/// Least squares of log <z^2> (pooled over t) on log T; exponent = slope / 2.
HurstFit fit_hurst_sliding(const TimeSeries& series, std::span<const double> lags);

/// Correlation of (x(t)-x(t-T)) and (x(t+T)-x(t)) across paths at fixed t.
AutocorrReport increment_autocorr(const PathEnsemble& ensemble, double t, double lag);

/// Same correlation pooled over every t of one series.
AutocorrReport increment_autocorr(const TimeSeries& series, double lag);

/// <(x(t+T) - x(t))^2> across paths for every sample time t with t+T also sampled.
MsfProfile msf_profile(const PathEnsemble& ensemble, double lag);

/// <(x(t+T) - x(t))^2> across days for slots t = 0, stride, 2 stride, ...
/// Missing slots are excluded pairwise. stride = 0 means stride = lag.
MsfProfile msf_profile(const DailyAlignedSeries& days, std::size_t lag_slots,
                       std::size_t stride_slots = 0);

/// Chi-square test of the profile against its inverse-variance weighted mean;
/// nonstationary when p < 0.01.
StationarityResult stationarity_verdict(const MsfProfile& profile);

/// Bins paths by x(t) and averages x(t+T) per bin.
ConditionalMeanReport conditional_mean_test(const PathEnsemble& ensemble, std::size_t t_index,
                                            std::size_t later_index, const BinSpec& bins = {21, 5.0, std::nullopt});

/// Excess kurtosis plus semilog and log-log fits of the tails |u| in [u_lo, u_hi].
TailReport tail_diagnostics(const DensityEstimate& density, TailRegion region);

std::string to_string(FitKind kind);
std::string to_string(Stationarity verdict);

}  // namespace scalemart
