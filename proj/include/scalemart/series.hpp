#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scalemart {

/// N independent trajectories on a shared time grid, each starting from x(0) = 0.
/// Values are stored path-major: row i holds path i at every sample time.
class PathEnsemble {
 public:
  PathEnsemble(std::vector<double> sample_times, std::size_t n_paths, std::string model_tag);
  PathEnsemble(std::vector<double> sample_times, std::size_t n_paths, std::vector<double> values,
               std::string model_tag);

  std::size_t n_paths() const noexcept { return n_paths_; }
  std::size_t n_times() const noexcept { return sample_times_.size(); }
  const std::vector<double>& sample_times() const noexcept { return sample_times_; }
  const std::string& model_tag() const noexcept { return model_tag_; }

  double at(std::size_t path, std::size_t time) const noexcept {
    return values_[path * n_times() + time];
  }
  std::span<const double> path(std::size_t i) const noexcept {
    return {values_.data() + i * n_times(), n_times()};
  }
  std::span<double> mutable_path(std::size_t i) noexcept {
    return {values_.data() + i * n_times(), n_times()};
  }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Cross-sectional sample x_i(t_j) over all paths.
  std::vector<double> column(std::size_t time) const;

  /// Index of a sample time within relative tolerance; throws Argument if absent.
  std::size_t index_of(double t) const;

  /// Copy restricted to the given time indices, in the given order.
  PathEnsemble select_times(std::span<const std::size_t> indices) const;

 private:
  std::vector<double> sample_times_;
  std::size_t n_paths_;
  std::vector<double> values_;
  std::string model_tag_;
};

enum class SeriesOrigin { Simulated, Ingested, Fbm, DailyPattern };

std::string to_string(SeriesOrigin origin);

/// One trajectory x(t) with strictly increasing timestamps.
struct TimeSeries {
  std::vector<double> timestamps;
  std::vector<double> values;
  SeriesOrigin origin = SeriesOrigin::Simulated;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }

  /// Throws Argument unless timestamps are strictly increasing and values finite.
  void validate() const;

  /// Uniform sampling interval; throws Argument when the grid is not uniform.
  double sampling_interval() const;
};

/// Intraday returns stacked by time of day: days act as realizations.
struct DailyAlignedSeries {
  /// Offset of each slot from the day start, in the series' time unit.
  std::vector<double> slot_times;
  std::vector<std::int64_t> day_ids;
  /// day-major, NaN where missing
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
  std::vector<std::int64_t> dropped_days;

  std::size_t n_days() const noexcept { return day_ids.size(); }
  std::size_t n_slots() const noexcept { return slot_times.size(); }
  double at(std::size_t day, std::size_t slot) const noexcept {
    return values[day * n_slots() + slot];
  }
  bool is_missing(std::size_t day, std::size_t slot) const noexcept {
    return missing[day * n_slots() + slot] != 0;
  }
};

/// Splits a uniformly sampled series into days of length t_day (same time unit).
/// Sample k sits in day floor(k' / slots), slot k' mod slots, where
/// k' = round(t / dt); slots without a sample are marked missing.
DailyAlignedSeries align_days(const TimeSeries& series, double t_day);

}  // namespace scalemart
