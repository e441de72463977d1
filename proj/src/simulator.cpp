#include "scalemart/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <variant>

#include "scalemart/error.hpp"
#include "scalemart/rng.hpp"

namespace scalemart {

namespace {

using kernels::Execution;

void validate_sample_times(std::span<const double> times) {
  require(!times.empty(), "sample_times must not be empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]) && times[i] >= 0.0, "sample times must be finite and >= 0");
    if (i > 0) require(times[i] > times[i - 1], "sample times must be strictly increasing");
  }
}

void check_budget(std::uint64_t used, std::uint64_t cap, const std::string& what) {
  if (used > cap) {
    std::ostringstream os;
    os << what << " " << used << " exceeds budget " << cap;
    fail(ErrorKind::Resource, os.str());
  }
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

void integrate_with_shape(const kernels::StepPlan& plan, const DiffusionShape& shape,
                          HurstExponent h, PathStream& stream, std::span<double> out) {
  const double two_h = h.two_h();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantShape>) {
          kernels::integrate_path(plan, kernels::ConstantVol{std::sqrt(s.d0 / two_h)}, stream,
                                  out);
        } else if constexpr (std::is_same_v<T, AffineShape>) {
          kernels::integrate_path(plan, kernels::AffineVol{s.slope(h.value()) / two_h}, stream,
                                  out);
        } else {
          kernels::integrate_path(plan, kernels::TabulatedVol{&s, 1.0 / two_h}, stream, out);
        }
      },
      shape);
}

[[noreturn]] void tabulated_overflow() {
  fail(ErrorKind::Domain,
       "simulated u = x/t^H left the tabulated diffusion range; widen the table");
}

void validate_shape(const DiffusionShape& shape) {
  if (const auto* c = std::get_if<ConstantShape>(&shape)) {
    require(c->d0 > 0.0 && std::isfinite(c->d0), "constant diffusion must be positive");
  }
}

// Hosking recursion applied to `n_paths` rows of unit normals in place.
// Row p of `noise` (length n) becomes the increments of path p.
void hosking_increments(HurstExponent h, double dt, double c, std::size_t n,
                        std::size_t n_paths, std::vector<double>& noise, Execution exec) {
  std::vector<double> gamma(n);
  for (std::size_t k = 0; k < n; ++k) gamma[k] = fgn_autocovariance(h, dt, c, k);

  std::vector<double> phi(n, 0.0), prev(n, 0.0), out(noise.size());
  double v = gamma[0];
  const double sd0 = std::sqrt(v);
  for (std::size_t p = 0; p < n_paths; ++p) out[p * n] = sd0 * noise[p * n];

  for (std::size_t k = 1; k < n; ++k) {
    double acc = gamma[k];
    for (std::size_t j = 1; j < k; ++j) acc -= prev[j] * gamma[k - j];
    const double pk = acc / v;
    for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - pk * prev[k - j];
    phi[k] = pk;
    v *= (1.0 - pk * pk);
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "fBm covariance is numerically not positive definite at step " << k
         << "; reduce n or increase dt";
      fail(ErrorKind::Numeric, os.str());
    }
    const double sd = std::sqrt(v);
    auto row = [&](std::size_t p) {
      const double* x = out.data() + p * n;
      double mean = 0.0;
      for (std::size_t j = 1; j <= k; ++j) mean += phi[j] * x[k - j];
      out[p * n + k] = mean + sd * noise[p * n + k];
    };
    const auto np = static_cast<std::ptrdiff_t>(n_paths);
    if (exec == Execution::Parallel && n_paths > 1) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t p = 0; p < np; ++p) row(static_cast<std::size_t>(p));
    } else {
      for (std::size_t p = 0; p < n_paths; ++p) row(p);
    }
    std::swap(phi, prev);
  }
  noise = std::move(out);
}

std::vector<double> fbm_paths(HurstExponent h, std::size_t n_paths, std::size_t n, double dt,
                              double c, const SimConfig& config) {
  require(n >= 1, "fBm length must be positive");
  require(n <= 8192, "exact fBm is limited to n <= 8192");
  require(dt > 0.0 && std::isfinite(dt), "fBm dt must be positive");
  require(c > 0.0 && std::isfinite(c), "fBm variance prefactor must be positive");
  require(n_paths >= 1, "n_paths must be positive");
  check_budget(saturating_mul(n_paths, n), config.max_ensemble_cells, "fBm ensemble cells");

  std::vector<double> noise(n_paths * n);
  const auto np = static_cast<std::ptrdiff_t>(n_paths);
  auto fill = [&](std::size_t p) {
    PathStream stream(config.seed, p, PathStream::kFbm);
    for (std::size_t k = 0; k < n; ++k) noise[p * n + k] = stream.normal();
  };
  if (config.execution == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < np; ++p) fill(static_cast<std::size_t>(p));
  } else {
    for (std::size_t p = 0; p < n_paths; ++p) fill(p);
  }
  hosking_increments(h, dt, c, n, n_paths, noise, config.execution);
  for (std::size_t p = 0; p < n_paths; ++p) {
    double x = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      x += noise[p * n + k];
      noise[p * n + k] = x;
    }
  }
  return noise;
}

}  // namespace

double fgn_autocovariance(HurstExponent h, double dt, double variance_prefactor, std::size_t k) {
  const double two_h = h.two_h();
  const double scale = 0.5 * variance_prefactor * std::pow(dt, two_h);
  if (k == 0) return 2.0 * scale;
  const double kd = static_cast<double>(k);
  return scale * (std::pow(kd + 1.0, two_h) - 2.0 * std::pow(kd, two_h) +
                  std::pow(kd - 1.0, two_h));
}

void DailySchedule::validate() const {
  require(t_day > 0.0 && std::isfinite(t_day), "t_day must be positive");
  require(!intervals.empty(), "daily schedule has no intervals");
  const double tol = 1e-9 * t_day;
  require(std::abs(intervals.front().start) <= tol, "daily schedule must start at 0");
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    require(iv.end > iv.start, "daily schedule interval must have end > start");
    if (i + 1 < intervals.size()) {
      require(std::abs(intervals[i + 1].start - iv.end) <= tol,
              "daily schedule has a gap or overlap after interval " + std::to_string(i));
    }
    validate_shape(iv.shape);
  }
  require(std::abs(intervals.back().end - t_day) <= tol, "daily schedule must end at t_day");
}

PathEnsemble simulate_ensemble(const ScalingModel& model, std::size_t n_paths,
                               std::span<const double> sample_times, const SimConfig& config) {
  require(n_paths >= 1, "n_paths must be positive");
  require(config.steps_per_unit_time >= 1, "steps_per_unit_time must be positive");
  validate_sample_times(sample_times);
  validate_shape(model.shape);
  const std::size_t m = sample_times.size();
  check_budget(saturating_mul(n_paths, m), config.max_ensemble_cells, "ensemble cells");
  const std::uint64_t steps =
      kernels::count_steps(sample_times, model.h.two_h(), config.steps_per_unit_time);
  check_budget(saturating_mul(n_paths, steps), config.max_path_steps, "path steps");

  const auto plan = kernels::make_step_plan(sample_times, model.h.two_h(),
                                            config.steps_per_unit_time);
  std::vector<double> values(n_paths * m);
  const bool ok = kernels::simulate_paths(plan, model.shape, model.h, config.seed,
                                          PathStream::kEnsemble, 0, n_paths, values,
                                          config.execution);
  if (!ok) tabulated_overflow();

  if (model.drift_rate) {
    std::vector<double> shift(m);
    for (std::size_t j = 0; j < m; ++j) shift[j] = model.drift_rate->integral(sample_times[j]);
    for (std::size_t i = 0; i < n_paths; ++i) {
      for (std::size_t j = 0; j < m; ++j) values[i * m + j] += shift[j];
    }
  }
  return PathEnsemble({sample_times.begin(), sample_times.end()}, n_paths, std::move(values),
                      model.tag());
}

TimeSeries simulate_path(const ScalingModel& model, double t_max, double sample_interval,
                         const SimConfig& config) {
  require(t_max > 0.0 && std::isfinite(t_max), "t_max must be positive");
  require(sample_interval > 0.0 && std::isfinite(sample_interval),
          "sample_interval must be positive");
  require(config.steps_per_unit_time >= 1, "steps_per_unit_time must be positive");
  validate_shape(model.shape);
  const double ratio = t_max / sample_interval;
  check_budget(static_cast<std::uint64_t>(std::min(ratio, 1e19)), config.max_series_length,
               "series length");
  const auto m = static_cast<std::size_t>(std::floor(ratio + 1e-9));
  require(m >= 1, "t_max shorter than one sample interval");

  TimeSeries out;
  out.origin = SeriesOrigin::Simulated;
  out.timestamps.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    out.timestamps[k] = sample_interval * static_cast<double>(k + 1);
  }
  const std::uint64_t steps =
      kernels::count_steps(out.timestamps, model.h.two_h(), config.steps_per_unit_time);
  check_budget(steps, config.max_path_steps, "path steps");

  const auto plan =
      kernels::make_step_plan(out.timestamps, model.h.two_h(), config.steps_per_unit_time);
  out.values.resize(m);
  PathStream stream(config.seed, 0, PathStream::kPath);
  integrate_with_shape(plan, model.shape, model.h, stream, out.values);
  if (!std::all_of(out.values.begin(), out.values.end(),
                   [](double v) { return std::isfinite(v); })) {
    tabulated_overflow();
  }
  if (model.drift_rate) {
    for (std::size_t k = 0; k < m; ++k) {
      out.values[k] += model.drift_rate->integral(out.timestamps[k]);
    }
  }
  return out;
}

TimeSeries simulate_fbm(HurstExponent h, std::size_t n, double dt, double variance_prefactor,
                        const SimConfig& config) {
  TimeSeries out;
  out.origin = SeriesOrigin::Fbm;
  out.values = fbm_paths(h, 1, n, dt, variance_prefactor, config);
  out.timestamps.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.timestamps[k] = dt * static_cast<double>(k + 1);
  return out;
}

PathEnsemble simulate_fbm_ensemble(HurstExponent h, std::size_t n_paths, std::size_t n,
                                   double dt, double variance_prefactor,
                                   const SimConfig& config) {
  auto values = fbm_paths(h, n_paths, n, dt, variance_prefactor, config);
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) times[k] = dt * static_cast<double>(k + 1);
  std::ostringstream tag;
  tag.precision(17);
  tag << "fbm(H=" << h.value() << ", c=" << variance_prefactor << ")";
  return PathEnsemble(std::move(times), n_paths, std::move(values), tag.str());
}

TimeSeries simulate_daily_pattern(const DailySchedule& schedule, std::size_t n_days,
                                  double sample_interval, const SimConfig& config) {
  schedule.validate();
  require(n_days >= 1, "n_days must be positive (empty series)");
  require(sample_interval > 0.0 && std::isfinite(sample_interval),
          "sample_interval must be positive");
  require(config.steps_per_unit_time >= 1, "steps_per_unit_time must be positive");
  const double t_day = schedule.t_day;
  const auto slots = static_cast<std::size_t>(std::llround(t_day / sample_interval));
  require(slots >= 1 && std::abs(static_cast<double>(slots) * sample_interval - t_day) <=
                            1e-9 * t_day,
          "sample_interval must divide t_day");
  check_budget(saturating_mul(n_days, slots), config.max_series_length, "series length");

  // Per interval: local times of the slots inside (start, end), then its end.
  struct Piece {
    kernels::StepPlan plan;
    std::size_t first_slot = 0;
    std::size_t n_slots = 0;
  };
  std::vector<Piece> pieces;
  std::uint64_t steps_per_day = 0;
  for (const auto& iv : schedule.intervals) {
    Piece piece;
    std::vector<double> local;
    bool first = true;
    for (std::size_t k = 1; k < slots; ++k) {
      const double t = sample_interval * static_cast<double>(k);
      if (t > iv.start + 1e-9 * t_day && t <= iv.end + 1e-9 * t_day) {
        if (first) piece.first_slot = k;
        first = false;
        local.push_back(std::max(t - iv.start, 0.0));
        ++piece.n_slots;
      }
    }
    const double len = iv.end - iv.start;
    if (local.empty() || local.back() < len * (1.0 - 1e-12)) local.push_back(len);
    steps_per_day += kernels::count_steps(local, iv.h.two_h(), config.steps_per_unit_time);
    piece.plan = kernels::make_step_plan(local, iv.h.two_h(), config.steps_per_unit_time);
    pieces.push_back(std::move(piece));
  }
  check_budget(saturating_mul(n_days, steps_per_day), config.max_path_steps, "path steps");

  TimeSeries out;
  out.origin = SeriesOrigin::DailyPattern;
  out.values.assign(n_days * slots, 0.0);
  out.timestamps.resize(n_days * slots);
  for (std::size_t d = 0; d < n_days; ++d) {
    for (std::size_t k = 0; k < slots; ++k) {
      out.timestamps[d * slots + k] =
          t_day * static_cast<double>(d) + sample_interval * static_cast<double>(k);
    }
  }

  int bad = 0;
  auto one_day = [&](std::size_t d) {
    PathStream stream(config.seed, d, PathStream::kDaily);
    double offset = 0.0;
    std::vector<double> local;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      const auto& piece = pieces[p];
      local.assign(piece.plan.n_samples(), 0.0);
      integrate_with_shape(piece.plan, schedule.intervals[p].shape, schedule.intervals[p].h,
                           stream, local);
      for (std::size_t j = 0; j < piece.n_slots; ++j) {
        out.values[d * slots + piece.first_slot + j] = offset + local[j];
      }
      offset += local.back();
    }
    return std::isfinite(offset);
  };
  const auto nd = static_cast<std::ptrdiff_t>(n_days);
  if (config.execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 4) reduction(| : bad)
    for (std::ptrdiff_t d = 0; d < nd; ++d) {
      if (!one_day(static_cast<std::size_t>(d))) bad |= 1;
    }
  } else {
    for (std::size_t d = 0; d < n_days; ++d) {
      if (!one_day(d)) bad |= 1;
    }
  }
  if (bad) tabulated_overflow();
  return out;
}

}  // namespace scalemart
