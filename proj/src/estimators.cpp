#include "scalemart/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scalemart/error.hpp"
#include "scalemart/stats.hpp"

namespace scalemart {

namespace {

using kernels::Execution;

constexpr double kStationarityAlpha = 0.01;
constexpr std::size_t kMinSlotSamples = 30;

std::pair<double, double> bin_range(const BinSpec& bins, const kernels::Moments& m) {
  if (bins.range) {
    require(bins.range->second > bins.range->first, "bin range must have hi > lo");
    return *bins.range;
  }
  const double sd = std::sqrt(m.variance());
  require(sd > 0.0 && std::isfinite(sd), "cannot bin a sample with zero spread");
  return {m.mean - bins.sigma_span * sd, m.mean + bins.sigma_span * sd};
}

std::size_t lag_steps(const TimeSeries& series, double lag) {
  require(lag > 0.0 && std::isfinite(lag), "lag must be positive");
  const double dt = series.sampling_interval();
  const auto steps = std::llround(lag / dt);
  if (steps < 1 || std::abs(static_cast<double>(steps) * dt - lag) > 1e-6 * dt) {
    fail(ErrorKind::Argument, "lag " + std::to_string(lag) + " is not a multiple of the sampling interval");
  }
  return static_cast<std::size_t>(steps);
}

void validate_lag_set(std::span<const double> lags, double span) {
  require(lags.size() >= 3, "need at least 3 lags");
  const auto [lo, hi] = std::minmax_element(lags.begin(), lags.end());
  require(*lo > 0.0, "lags must be positive");
  require(*hi / *lo >= 10.0 - 1e-12, "lags must span at least one decade");
  require(*hi <= span / 100.0,
          "largest lag must not exceed 1/100 of the series span");
}

HurstFit make_fit(const std::vector<double>& x, const std::vector<double>& y, FitKind kind) {
  const auto line = stats::ordinary_least_squares(x, y);
  HurstFit fit;
  fit.exponent = line.slope / 2.0;
  fit.log_intercept = line.intercept;
  fit.r_squared = line.r_squared;
  fit.kind = kind;
  for (std::size_t i = 0; i < x.size(); ++i) {
    fit.points.push_back({x[i], y[i], y[i] - (line.intercept + line.slope * x[i])});
  }
  return fit;
}

AutocorrReport correlate(std::span<const double> before, std::span<const double> after,
                         bool pooled) {
  require(before.size() >= 2, "autocorrelation needs at least 2 increment pairs");
  const double n = static_cast<double>(before.size());
  AutocorrReport r;
  r.sample_count = before.size();
  r.raw = kernels::dot(before, after, Execution::Parallel) / n;
  const double rms_b = std::sqrt(kernels::sum_squares(before, Execution::Parallel) / n);
  const double rms_a = std::sqrt(kernels::sum_squares(after, Execution::Parallel) / n);
  if (!(rms_b > 0.0) || !(rms_a > 0.0)) {
    fail(ErrorKind::Numeric, "increments have zero mean square");
  }
  r.normalized = r.raw / (rms_b * rms_a);
  r.three_sigma_band = 3.0 / std::sqrt(n);
  r.pooled_over_time = pooled;
  return r;
}

// Profile from per-slot increment samples. Standard errors use the slot's own
// mean square and a kurtosis pooled across slots, which is far less noisy than
// per-slot sample variances of z^2.
MsfProfile finish_profile(const std::vector<std::vector<double>>& z, std::vector<double> t_grid,
                          double lag) {
  require(!z.empty(), "msf profile has no slots");
  MsfProfile p;
  p.lag = lag;
  p.t_grid = std::move(t_grid);
  double fourth = 0.0;
  std::size_t total = 0;
  for (const auto& slot : z) {
    const double n = static_cast<double>(slot.size());
    const double m = kernels::sum_squares(slot, Execution::Serial) / n;
    p.msf.push_back(m);
    p.sample_counts.push_back(slot.size());
    if (m > 0.0) {
      for (double v : slot) {
        const double r = v * v / m;
        fourth += r * r;
      }
    }
    total += slot.size();
    if (slot.size() < kMinSlotSamples) p.wide_error_warning = true;
  }
  p.pooled_kurtosis = fourth / static_cast<double>(total);
  const double excess_scale = std::max(p.pooled_kurtosis - 1.0, 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    p.standard_errors.push_back(p.msf[i] *
                                std::sqrt(excess_scale / static_cast<double>(z[i].size())));
  }
  return p;
}

}  // namespace

DensityEstimate density_from_samples(std::span<const double> samples, const BinSpec& bins,
                                     Execution exec) {
  require(!samples.empty(), "cannot estimate a density from an empty sample");
  require(bins.count >= 1, "need at least one bin");
  const auto moments = kernels::central_moments(samples, exec);
  const auto [lo, hi] = bin_range(bins, moments);

  DensityEstimate d;
  d.bin_edges.resize(bins.count + 1);
  const double w = (hi - lo) / static_cast<double>(bins.count);
  for (std::size_t i = 0; i <= bins.count; ++i) d.bin_edges[i] = lo + w * static_cast<double>(i);
  d.bin_edges.back() = hi;
  d.counts = kernels::histogram(samples, lo, hi, bins.count, exec);
  d.total_count = samples.size();
  for (auto c : d.counts) d.sample_count += c;
  require(d.sample_count > 0, "no samples fall inside the bin range");
  d.probability_density.resize(bins.count);
  const double n = static_cast<double>(d.sample_count);
  for (std::size_t i = 0; i < bins.count; ++i) {
    d.probability_density[i] = static_cast<double>(d.counts[i]) / (n * d.width(i));
  }
  if (moments.m2 > 0.0) {
    d.sample_variance = moments.variance();
    d.sample_excess_kurtosis = moments.excess_kurtosis();
  }
  return d;
}

DensityEstimate ensemble_density(const PathEnsemble& ensemble, std::size_t time_index,
                                 const BinSpec& bins) {
  require(time_index < ensemble.n_times(), "time index out of range");
  require(ensemble.n_paths() >= kPopulatedBinCount,
          "ensemble density needs at least 100 paths");
  return density_from_samples(ensemble.column(time_index), bins);
}

CollapseResult collapse(const PathEnsemble& ensemble, std::span<const std::size_t> time_indices,
                        HurstExponent h, const BinSpec& bins) {
  require(time_indices.size() >= 2, "collapse needs at least 2 times");
  require(ensemble.n_paths() >= kPopulatedBinCount, "collapse needs at least 100 paths");

  std::vector<std::vector<double>> rescaled;
  std::vector<double> pooled;
  for (std::size_t j : time_indices) {
    require(j < ensemble.n_times(), "time index out of range");
    const double t = ensemble.sample_times()[j];
    require(t > 0.0, "collapse needs t > 0");
    auto u = ensemble.column(j);
    const double scale = std::pow(t, -h.value());
    for (double& v : u) v *= scale;
    pooled.insert(pooled.end(), u.begin(), u.end());
    rescaled.push_back(std::move(u));
  }

  BinSpec common = bins;
  if (!common.range) {
    const auto m = kernels::central_moments(pooled, Execution::Parallel);
    common.range = bin_range(bins, m);
  }

  CollapseResult out;
  for (std::size_t k = 0; k < rescaled.size(); ++k) {
    auto d = density_from_samples(rescaled[k], common);
    d.rescale_tag = RescaleTag{h.value(), ensemble.sample_times()[time_indices[k]]};
    out.rescaled.push_back(std::move(d));
  }
  out.pooled = density_from_samples(pooled, common);
  out.pooled.rescale_tag = RescaleTag{h.value(), 0.0};

  std::size_t populated = 0;
  std::vector<std::pair<double, double>> spreads;  // (spread, pairwise SE)
  for (std::size_t b = 0; b < common.count; ++b) {
    bool every = true;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, se = 0.0;
    for (const auto& d : out.rescaled) {
      if (d.counts[b] < kPopulatedBinCount) {
        every = false;
        break;
      }
      const double n = static_cast<double>(d.sample_count);
      const double p = static_cast<double>(d.counts[b]) / n;
      se = std::max(se, std::sqrt(p * (1.0 - p) / n) / d.width(b));
      lo = std::min(lo, d.probability_density[b]);
      hi = std::max(hi, d.probability_density[b]);
    }
    if (!every) continue;
    ++populated;
    spreads.emplace_back(hi - lo, std::sqrt(2.0) * se);
  }
  if (populated == 0) fail(ErrorKind::Numeric, "no bin is populated at every time");
  for (const auto& [spread, se] : spreads) {
    out.collapse_score = std::max(out.collapse_score, spread);
    out.max_z = std::max(out.max_z, spread / se);
  }
  const std::size_t k = out.rescaled.size();
  out.z_threshold = stats::simultaneous_z(3.0, populated * k * (k - 1) / 2);
  return out;
}

HurstFit fit_hurst_variance(const PathEnsemble& ensemble) {
  const auto& times = ensemble.sample_times();
  require(times.size() >= 3, "variance fit needs at least 3 sample times");
  require(times.front() > 0.0, "variance fit needs t > 0");
  require(times.back() / times.front() >= 10.0 - 1e-12,
          "variance fit needs sample times spanning at least one decade");
  std::vector<double> x, y;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const auto col = ensemble.column(j);
    const double m2 = kernels::sum_squares(col, Execution::Parallel) /
                      static_cast<double>(col.size());
    if (!(m2 > 0.0)) {
      fail(ErrorKind::Numeric, "nonpositive sample variance at t=" + std::to_string(times[j]));
    }
    x.push_back(std::log(times[j]));
    y.push_back(std::log(m2));
  }
  return make_fit(x, y, FitKind::EnsembleVariance);
}

std::vector<double> sliding_increments(const TimeSeries& series, double lag, std::size_t stride) {
  series.validate();
  require(stride >= 1, "stride must be positive");
  const std::size_t steps = lag_steps(series, lag);
  require(series.size() > steps, "series is not longer than the lag");
  return kernels::lagged_differences(series.values, steps, stride, Execution::Parallel);
}

DensityEstimate sliding_density(const TimeSeries& series, double lag, HurstExponent h_s,
                                const BinSpec& bins) {
  auto z = sliding_increments(series, lag, 1);
  const double scale = std::pow(lag, -h_s.value());
  for (double& v : z) v *= scale;
  auto d = density_from_samples(z, bins);
  d.rescale_tag = RescaleTag{h_s.value(), lag};
  return d;
}

HurstFit fit_hurst_sliding(const TimeSeries& series, std::span<const double> lags) {
  series.validate();
  require(series.size() >= 2, "series too short");
  validate_lag_set(lags, series.timestamps.back() - series.timestamps.front());
  std::vector<double> x, y;
  for (double lag : lags) {
    const auto z = sliding_increments(series, lag, 1);
    const double msf =
        kernels::sum_squares(z, Execution::Parallel) / static_cast<double>(z.size());
    if (!(msf > 0.0)) fail(ErrorKind::Numeric, "nonpositive mean square increment");
    x.push_back(std::log(lag));
    y.push_back(std::log(msf));
  }
  return make_fit(x, y, FitKind::SlidingMsf);
}

AutocorrReport increment_autocorr(const PathEnsemble& ensemble, double t, double lag) {
  require(lag > 0.0, "lag must be positive");
  const double start = t - lag;
  if (start < -1e-9 * std::max(1.0, t)) {
    fail(ErrorKind::Argument, "t - T must be >= 0");
  }
  const std::size_t jt = ensemble.index_of(t);
  const std::size_t jf = ensemble.index_of(t + lag);
  const bool from_origin = std::abs(start) <= 1e-9 * std::max(1.0, t);
  const std::size_t jb = from_origin ? 0 : ensemble.index_of(start);
  std::vector<double> before(ensemble.n_paths()), after(ensemble.n_paths());
  for (std::size_t i = 0; i < ensemble.n_paths(); ++i) {
    const double x0 = from_origin ? 0.0 : ensemble.at(i, jb);
    before[i] = ensemble.at(i, jt) - x0;
    after[i] = ensemble.at(i, jf) - ensemble.at(i, jt);
  }
  return correlate(before, after, false);
}

AutocorrReport increment_autocorr(const TimeSeries& series, double lag) {
  series.validate();
  const std::size_t steps = lag_steps(series, lag);
  require(series.size() > 2 * steps + 1, "series too short for the lag");
  const std::size_t n = series.size() - 2 * steps;
  std::vector<double> before(n), after(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = k + steps;
    before[k] = series.values[i] - series.values[i - steps];
    after[k] = series.values[i + steps] - series.values[i];
  }
  return correlate(before, after, true);
}

MsfProfile msf_profile(const PathEnsemble& ensemble, double lag) {
  require(lag > 0.0, "lag must be positive");
  const auto& times = ensemble.sample_times();
  auto find = [&](double t) -> std::optional<std::size_t> {
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (std::abs(times[j] - t) <= 1e-9 * std::max(1.0, t)) return j;
    }
    return std::nullopt;
  };
  std::vector<std::vector<double>> z;
  std::vector<double> grid;
  // t = 0 is implicit: every path starts at x(0) = 0
  if (auto jf = find(lag); jf && times.front() > 0.0) {
    grid.push_back(0.0);
    z.push_back(ensemble.column(*jf));
  }
  for (std::size_t j = 0; j < times.size(); ++j) {
    auto jf = find(times[j] + lag);
    if (!jf) continue;
    std::vector<double> slot(ensemble.n_paths());
    for (std::size_t i = 0; i < ensemble.n_paths(); ++i) {
      slot[i] = ensemble.at(i, *jf) - ensemble.at(i, j);
    }
    grid.push_back(times[j]);
    z.push_back(std::move(slot));
  }
  require(!z.empty(), "no sample time t has t + T on the grid");
  return finish_profile(z, std::move(grid), lag);
}

MsfProfile msf_profile(const DailyAlignedSeries& days, std::size_t lag_slots,
                       std::size_t stride_slots) {
  require(days.n_slots() >= 2, "day-aligned series needs at least 2 slots per day");
  require(lag_slots >= 1 && lag_slots < days.n_slots(), "lag must be within one day");
  const std::size_t stride = stride_slots == 0 ? lag_slots : stride_slots;
  const double slot_dt = days.slot_times[1] - days.slot_times[0];

  std::vector<std::vector<double>> z;
  std::vector<double> grid;
  for (std::size_t j = 0; j + lag_slots < days.n_slots(); j += stride) {
    std::vector<double> slot;
    for (std::size_t d = 0; d < days.n_days(); ++d) {
      if (days.is_missing(d, j) || days.is_missing(d, j + lag_slots)) continue;
      slot.push_back(days.at(d, j + lag_slots) - days.at(d, j));
    }
    if (slot.size() < 2) continue;
    grid.push_back(days.slot_times[j]);
    z.push_back(std::move(slot));
  }
  require(!z.empty(), "no slot has increments on at least 2 days");
  return finish_profile(z, std::move(grid), slot_dt * static_cast<double>(lag_slots));
}

StationarityResult stationarity_verdict(const MsfProfile& profile) {
  require(profile.msf.size() >= 10, "stationarity verdict needs at least 10 slots");
  require(profile.standard_errors.size() == profile.msf.size(),
          "profile standard errors do not match");
  double sw = 0.0, swm = 0.0;
  for (std::size_t i = 0; i < profile.msf.size(); ++i) {
    const double se = profile.standard_errors[i];
    if (!(se > 0.0) || !std::isfinite(se)) {
      fail(ErrorKind::Numeric, "profile has a zero or non-finite standard error");
    }
    const double w = 1.0 / (se * se);
    sw += w;
    swm += w * profile.msf[i];
  }
  StationarityResult r;
  r.weighted_mean = swm / sw;
  for (std::size_t i = 0; i < profile.msf.size(); ++i) {
    const double e = (profile.msf[i] - r.weighted_mean) / profile.standard_errors[i];
    r.chi_square += e * e;
  }
  r.dof = static_cast<double>(profile.msf.size() - 1);
  r.p_value = stats::chi_square_survival(r.chi_square, r.dof);
  r.verdict = r.p_value < kStationarityAlpha ? Stationarity::NonstationaryIncrements
                                             : Stationarity::StationaryIncrements;
  return r;
}

ConditionalMeanReport conditional_mean_test(const PathEnsemble& ensemble, std::size_t t_index,
                                            std::size_t later_index, const BinSpec& bins) {
  require(t_index < ensemble.n_times() && later_index < ensemble.n_times(),
          "time index out of range");
  require(later_index > t_index, "later index must come after the conditioning index");
  require(bins.count >= 1, "need at least one bin");
  const auto x = ensemble.column(t_index);
  const auto y = ensemble.column(later_index);
  const auto [lo, hi] = bin_range(bins, kernels::central_moments(x, Execution::Serial));
  const double scale = static_cast<double>(bins.count) / (hi - lo);

  struct Acc {
    std::size_t n = 0;
    double sx = 0.0, sy = 0.0, sd = 0.0, sdd = 0.0;
  };
  std::vector<Acc> acc(bins.count);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo && x[i] <= hi)) continue;
    auto b = std::min(static_cast<std::size_t>((x[i] - lo) * scale), bins.count - 1);
    const double d = y[i] - x[i];
    acc[b].n += 1;
    acc[b].sx += x[i];
    acc[b].sy += y[i];
    acc[b].sd += d;
    acc[b].sdd += d * d;
  }
  const auto occupied =
      std::count_if(acc.begin(), acc.end(), [](const Acc& a) { return a.n > 0; });
  if (occupied <= 1) fail(ErrorKind::Argument, "degenerate binning: all mass in one bin");

  ConditionalMeanReport r;
  const double w = (hi - lo) / static_cast<double>(bins.count);
  for (std::size_t b = 0; b < bins.count; ++b) {
    const auto& a = acc[b];
    r.bin_centers.push_back(lo + w * (static_cast<double>(b) + 0.5));
    r.counts.push_back(a.n);
    const double n = static_cast<double>(a.n);
    r.conditional_means.push_back(a.n > 0 ? a.sy / n : std::numeric_limits<double>::quiet_NaN());
    if (a.n < kPopulatedBinCount) continue;
    ++r.populated_bins;
    const double mean = a.sd / n;
    const double var = std::max(a.sdd / n - mean * mean, 0.0) * n / (n - 1.0);
    const double se = std::sqrt(var / n);
    r.max_abs_deviation = std::max(r.max_abs_deviation, std::abs(mean));
    if (se > 0.0) r.max_z = std::max(r.max_z, std::abs(mean) / se);
  }
  if (r.populated_bins == 0) {
    fail(ErrorKind::Argument, "no bin holds at least 100 paths");
  }
  r.z_threshold = stats::simultaneous_z(3.0, r.populated_bins);
  return r;
}

TailReport tail_diagnostics(const DensityEstimate& density, TailRegion region) {
  require(region.u_lo >= 0.0 && region.u_hi > region.u_lo, "tail region needs 0 <= lo < hi");
  std::vector<double> absu, logabsu, logf;
  std::size_t left = 0, right = 0;
  for (std::size_t i = 0; i < density.bins(); ++i) {
    const double c = density.center(i);
    const double a = std::abs(c);
    if (a < region.u_lo || a > region.u_hi || density.counts[i] == 0) continue;
    (c < 0.0 ? left : right) += 1;
    absu.push_back(a);
    logabsu.push_back(std::log(a));
    logf.push_back(std::log(density.probability_density[i]));
  }
  if (left < 10 || right < 10) {
    fail(ErrorKind::Argument, "tail region must hold at least 10 populated bins on each side");
  }
  TailReport r;
  r.tail_region = region;
  r.semilog_r2 = stats::ordinary_least_squares(absu, logf).r_squared;
  r.loglog_r2 = stats::ordinary_least_squares(logabsu, logf).r_squared;
  if (density.sample_excess_kurtosis) {
    r.excess_kurtosis = *density.sample_excess_kurtosis;
    r.kurtosis_from_samples = true;
  } else {
    double mean = 0.0;
    for (std::size_t i = 0; i < density.bins(); ++i) {
      mean += density.center(i) * density.probability_density[i] * density.width(i);
    }
    double m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < density.bins(); ++i) {
      const double d = density.center(i) - mean;
      const double p = density.probability_density[i] * density.width(i);
      m2 += d * d * p;
      m4 += d * d * d * d * p;
    }
    r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return r;
}

std::string to_string(FitKind kind) {
  return kind == FitKind::EnsembleVariance ? "EnsembleVariance" : "SlidingMsf";
}

std::string to_string(Stationarity verdict) {
  return verdict == Stationarity::StationaryIncrements ? "StationaryIncrements"
                                                       : "NonstationaryIncrements";
}

}  // namespace scalemart
