#include "scalemart/series.hpp"

#include <cmath>
#include <limits>

#include "scalemart/error.hpp"

namespace scalemart {

PathEnsemble::PathEnsemble(std::vector<double> sample_times, std::size_t n_paths,
                           std::string model_tag)
    : PathEnsemble(std::move(sample_times), n_paths, {}, std::move(model_tag)) {}

PathEnsemble::PathEnsemble(std::vector<double> sample_times, std::size_t n_paths,
                           std::vector<double> values, std::string model_tag)
    : sample_times_(std::move(sample_times)),
      n_paths_(n_paths),
      values_(std::move(values)),
      model_tag_(std::move(model_tag)) {
  require(n_paths_ >= 1, "ensemble needs at least one path");
  require(!sample_times_.empty(), "ensemble needs at least one sample time");
  for (std::size_t j = 1; j < sample_times_.size(); ++j) {
    require(sample_times_[j] > sample_times_[j - 1], "sample times must be strictly increasing");
  }
  if (values_.empty()) values_.assign(n_paths_ * sample_times_.size(), 0.0);
  require(values_.size() == n_paths_ * sample_times_.size(),
          "ensemble values must hold n_paths x n_times entries");
}

std::vector<double> PathEnsemble::column(std::size_t time) const {
  require(time < n_times(), "time index out of range");
  std::vector<double> out(n_paths_);
  for (std::size_t i = 0; i < n_paths_; ++i) out[i] = at(i, time);
  return out;
}

std::size_t PathEnsemble::index_of(double t) const {
  for (std::size_t j = 0; j < sample_times_.size(); ++j) {
    if (std::abs(sample_times_[j] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return j;
  }
  fail(ErrorKind::Argument, "time " + std::to_string(t) + " is not a sample time");
}

PathEnsemble PathEnsemble::select_times(std::span<const std::size_t> indices) const {
  require(!indices.empty(), "select_times needs at least one index");
  std::vector<double> times;
  for (std::size_t j : indices) {
    require(j < n_times(), "time index out of range");
    times.push_back(sample_times_[j]);
  }
  std::vector<double> values(n_paths_ * indices.size());
  for (std::size_t i = 0; i < n_paths_; ++i) {
    for (std::size_t k = 0; k < indices.size(); ++k) {
      values[i * indices.size() + k] = at(i, indices[k]);
    }
  }
  return PathEnsemble(std::move(times), n_paths_, std::move(values), model_tag_);
}

std::string to_string(SeriesOrigin origin) {
  switch (origin) {
    case SeriesOrigin::Simulated:
      return "simulated";
    case SeriesOrigin::Ingested:
      return "ingested";
    case SeriesOrigin::Fbm:
      return "fbm";
    case SeriesOrigin::DailyPattern:
      return "daily-pattern";
  }
  return "unknown";
}

void TimeSeries::validate() const {
  require(timestamps.size() == values.size(), "timestamps and values differ in length");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]) && std::isfinite(timestamps[i]),
            "series values must be finite");
    if (i > 0) require(timestamps[i] > timestamps[i - 1], "timestamps must be strictly increasing");
  }
}

double TimeSeries::sampling_interval() const {
  require(size() >= 2, "series needs at least 2 samples for a sampling interval");
  const double dt = (timestamps.back() - timestamps.front()) / static_cast<double>(size() - 1);
  for (std::size_t i = 1; i < size(); ++i) {
    const double gap = timestamps[i] - timestamps[i - 1];
    require(std::abs(gap - dt) <= 1e-6 * dt, "series is not uniformly sampled");
  }
  return dt;
}

DailyAlignedSeries align_days(const TimeSeries& series, double t_day) {
  series.validate();
  const double dt = series.sampling_interval();
  require(t_day > 0.0, "t_day must be positive");
  const auto slots = std::llround(t_day / dt);
  require(slots >= 1 && std::abs(static_cast<double>(slots) * dt - t_day) <= 1e-6 * dt,
          "sampling interval must divide t_day");

  auto floor_div = [](long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  };
  const long long first_day = floor_div(std::llround(series.timestamps.front() / dt), slots);
  const long long last_day = floor_div(std::llround(series.timestamps.back() / dt), slots);

  DailyAlignedSeries out;
  const auto n_slots = static_cast<std::size_t>(slots);
  out.slot_times.resize(n_slots);
  for (std::size_t j = 0; j < n_slots; ++j) out.slot_times[j] = dt * static_cast<double>(j);
  for (long long d = first_day; d <= last_day; ++d) out.day_ids.push_back(d);
  out.values.assign(out.day_ids.size() * n_slots, std::numeric_limits<double>::quiet_NaN());
  out.missing.assign(out.values.size(), 1);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const long long g = std::llround(series.timestamps[i] / dt);
    const long long day = floor_div(g, slots);
    const long long slot = g - day * slots;
    const std::size_t cell =
        static_cast<std::size_t>(day - first_day) * n_slots + static_cast<std::size_t>(slot);
    out.values[cell] = series.values[i];
    out.missing[cell] = 0;
  }
  return out;
}

}  // namespace scalemart
